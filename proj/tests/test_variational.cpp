#include "helpers.hpp"

#include "iagcn/variational.hpp"

#include <doctest.h>

#include <numbers>

using namespace iagcn;
using test::random_matrix;

namespace {

Tensor column(std::initializer_list<double> v) {
    Matrix m(static_cast<Index>(v.size()), 1);
    Index i = 0;
    for (double x : v) m(i++, 0) = x;
    return Tensor(m);
}

// KL(N(mu, s2) || N(0,1)) by composite Simpson integration of q log(q/p).
double kl_quadrature(double mu, double logvar) {
    const double s = std::exp(0.5 * logvar);
    const double lo = mu - 14.0 * s, hi = mu + 14.0 * s;
    const int n = 20000;
    const double h = (hi - lo) / n;
    auto integrand = [&](double z) {
        const double log_q = -0.5 * std::log(2 * std::numbers::pi) - std::log(s) - 0.5 * (z - mu) * (z - mu) / (s * s);
        const double log_p = -0.5 * std::log(2 * std::numbers::pi) - 0.5 * z * z;
        return std::exp(log_q) * (log_q - log_p);
    };
    double total = integrand(lo) + integrand(hi);
    for (int k = 1; k < n; ++k) total += (k % 2 ? 4.0 : 2.0) * integrand(lo + k * h);
    return total * h / 3.0;
}

}  // namespace

TEST_CASE("encode examples") {
    VariationalParams zero{Tensor(Matrix::Zero(3, 1)), Tensor(Matrix::Zero(3, 1))};
    std::mt19937_64 rng(1);
    const Tensor regions(random_matrix(rng, 4, 3));
    CHECK(encode(regions, zero).z_mu.value() == Matrix::Zero(4, 1));

    const Matrix w = random_matrix(rng, 3, 1);
    VariationalParams sel{Tensor(w), Tensor(w)};
    CHECK(encode(Tensor(Matrix::Identity(3, 3)), sel).z_mu.value() == w);

    VariationalParams wrong{Tensor(Matrix::Zero(2, 1)), Tensor(Matrix::Zero(2, 1))};
    CHECK_THROWS_AS(encode(regions, wrong), DimensionError);
}

TEST_CASE("sample_z examples") {
    const Tensor mu = column({0.3, -1.2}), lv = column({0.4, -0.7});
    CHECK(sample_z(mu, lv, Vector::Zero(2)).value() == mu.value());

    Vector e(2);
    e << 0.5, -2.0;
    const Matrix z = sample_z(mu, column({0.0, 0.0}), e).value();
    CHECK(z(0, 0) == 0.3 + 0.5);
    CHECK(z(1, 0) == -1.2 - 2.0);

    const Matrix zs = sample_z(mu, lv, e).value();
    CHECK(zs(0, 0) == 0.3 + std::exp(0.5 * 0.4) * 0.5);
    CHECK_THROWS_AS(sample_z(mu, lv, Vector::Zero(3)), DimensionError);
}

TEST_CASE("weight_regions examples") {
    Matrix x(2, 2), expected(2, 2);
    x << 1, 1, 3, 4;
    expected << 2, 2, 0, 0;
    CHECK(weight_regions(Tensor(x), column({2.0, 0.0})).value() == expected);

    std::mt19937_64 rng(4);
    const Matrix r = random_matrix(rng, 5, 7);
    CHECK(weight_regions(Tensor(r), Tensor(Matrix::Ones(5, 1))).value() == r);
    CHECK_THROWS_AS(weight_regions(Tensor(r), Tensor(Matrix::Ones(4, 1))), DimensionError);
}

TEST_CASE("kl_loss closed-form values") {
    CHECK(kl_loss(column({0.0}), column({0.0})).item() == 0.0);
    CHECK(kl_loss(column({0.0, 0.0, 0.0}), column({0.0, 0.0, 0.0})).item() == 0.0);
    CHECK(kl_loss(column({1.0}), column({0.0})).item() == 0.5);
    CHECK_THROWS_AS(kl_loss(column({1.0}), column({0.0, 1.0})), DimensionError);
}

TEST_CASE("kl_loss is nonnegative on 1000 random inputs") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> scale(1e-8, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Index n = 1 + static_cast<Index>(rng() % 6);
        const double s = scale(rng);
        const double kl = kl_loss(Tensor(random_matrix(rng, n, 1, -s, s)), Tensor(random_matrix(rng, n, 1, -s, s))).item();
        CHECK(kl >= 0.0);
    }
}

TEST_CASE("kl_loss matches numeric integration of the Gaussian KL") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix mu = random_matrix(rng, 3, 1, -2, 2), lv = random_matrix(rng, 3, 1, -1.5, 1.5);
        double oracle = 0.0;
        for (Index i = 0; i < 3; ++i) oracle += kl_quadrature(mu(i, 0), lv(i, 0));
        oracle /= 3.0;
        CHECK(std::abs(kl_loss(Tensor(mu), Tensor(lv)).item() - oracle) < 1e-3);
    }
}

TEST_CASE("variational gradients with frozen epsilon") {
    std::mt19937_64 rng(31);
    const Tensor regions(random_matrix(rng, 5, 4));
    Tensor w_mu = Tensor::parameter(random_matrix(rng, 4, 1)), w_lv = Tensor::parameter(random_matrix(rng, 4, 1));
    const Vector eps = random_matrix(rng, 5, 1);
    const Matrix weight = random_matrix(rng, 5, 4);
    std::vector<Tensor> params{w_mu, w_lv};
    auto f = [&] {
        const RegionWeights rw = weigh(regions, {w_mu, w_lv}, eps);
        return add(sum(hadamard(weight_regions(regions, rw.z), Tensor(weight))), kl_loss(rw.z_mu, rw.z_logvar));
    };
    const GradCheckReport report = grad_check(f, params, 1e-6, 1e-4);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-4);

    // Same epsilon twice: bit-identical z.
    const Matrix a = weigh(regions, {w_mu, w_lv}, eps).z.value();
    const Matrix b = weigh(regions, {w_mu, w_lv}, eps).z.value();
    CHECK(a == b);
}
