#include "helpers.hpp"

#include "iagcn/data.hpp"
#include "iagcn/lcm.hpp"

#include <doctest.h>

using namespace iagcn;
using test::random_matrix;

namespace {

// Counting oracle for P(L_j | L_i), independent of build_statistical_lcm.
Matrix count_conditional(const std::vector<std::vector<Index>>& sets, Index C) {
    Matrix both = Matrix::Zero(C, C);
    Vector single = Vector::Zero(C);
    for (const auto& s : sets)
        for (Index i : s) {
            single(i) += 1;
            for (Index j : s) both(i, j) += 1;
        }
    Matrix out = Matrix::Zero(C, C);
    for (Index i = 0; i < C; ++i)
        if (single(i) > 0) out.row(i) = both.row(i) / single(i);
    return out;
}

}  // namespace

TEST_CASE("conditional probability from direct counting") {
    // Labels A=0, B=1: images {A,B}, {A}, {B}, {A,B}.
    const std::vector<std::vector<Index>> sets{{0, 1}, {0}, {1}, {0, 1}};
    const StatLcm s = build_statistical_lcm(sets, 2, 0.4, 0.2);
    CHECK(s.cond_prob(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.cond_prob(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.cond_prob(0, 0) == 1.0);
    // Both off-diagonals survive tau = 0.4 and carry the whole mass p.
    CHECK(s.binarized(0, 1) == doctest::Approx(0.2));
    CHECK(s.binarized(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("degenerate rows of the statistical LCM") {
    const std::vector<std::vector<Index>> alone{{0}};
    const StatLcm one = build_statistical_lcm(alone, 1, 0.4, 0.25);
    CHECK(one.cond_prob(0, 0) == 1.0);
    CHECK(one.binarized(0, 0) == 0.75);

    const std::vector<std::vector<Index>> missing{{0}, {0, 1}};
    const StatLcm s = build_statistical_lcm(missing, 3, 0.4, 0.2);
    CHECK(s.cond_prob.row(2) == RowVector::Zero(3));
}

TEST_CASE("statistical LCM errors") {
    const std::vector<std::vector<Index>> ok{{0}};
    CHECK_THROWS(build_statistical_lcm(ok, 0));
    CHECK_THROWS(build_statistical_lcm(std::vector<std::vector<Index>>{}, 2));
    const std::vector<std::vector<Index>> bad{{0, 5}};
    CHECK_THROWS_AS(build_statistical_lcm(bad, 3), std::out_of_range);
}

TEST_CASE("statistical LCM matches the counting oracle and row invariants on random label sets") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const Index C = 2 + static_cast<Index>(rng() % 6);
        std::vector<std::vector<Index>> sets(20 + rng() % 30);
        for (auto& s : sets)
            for (Index c = 0; c < C; ++c)
                if (rng() % 3 == 0) s.push_back(c);
        const StatLcm lcm = build_statistical_lcm(sets, C, 0.4, 0.2);
        const Matrix oracle = count_conditional(sets, C);
        CHECK((lcm.cond_prob - oracle).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(lcm.cond_prob.minCoeff() >= 0.0);
        CHECK(lcm.cond_prob.maxCoeff() <= 1.0);
        for (Index i = 0; i < C; ++i) {
            bool neighbor = false;
            for (Index j = 0; j < C; ++j) neighbor |= (j != i && oracle(i, j) >= 0.4);
            if (neighbor) {
                CHECK(lcm.binarized.row(i).sum() == doctest::Approx(1.0).epsilon(1e-14));
                CHECK(lcm.binarized(i, i) == doctest::Approx(0.8));
            }
        }
    }
}

TEST_CASE("region scores") {
    ScorerParams zero{Tensor(Matrix::Zero(3, 2)), Tensor(Matrix::Zero(1, 2))};
    std::mt19937_64 rng(1);
    const Tensor regions(random_matrix(rng, 4, 3));
    CHECK(compute_region_scores(regions, zero).value() == Matrix::Constant(4, 2, 0.5));

    ScorerParams saturated{Tensor(Matrix::Zero(3, 2)), Tensor(Matrix::Constant(1, 2, 60.0))};
    CHECK(compute_region_scores(regions, saturated).value().minCoeff() > 1.0 - 1e-15);

    ScorerParams wrong{Tensor(Matrix::Zero(5, 2)), Tensor(Matrix::Zero(1, 2))};
    CHECK_THROWS_AS(compute_region_scores(regions, wrong), DimensionError);

    Tensor w = Tensor::parameter(random_matrix(rng, 3, 2)), b = Tensor::parameter(random_matrix(rng, 1, 2));
    std::vector<Tensor> params{w, b};
    const Matrix weight = random_matrix(rng, 4, 2);
    const auto report = grad_check(
        [&] { return sum(hadamard(compute_region_scores(regions, {w, b}), Tensor(weight))); }, params, 1e-5, 1e-4);
    CHECK(report.passed);
}

TEST_CASE("individual LCM examples") {
    Matrix scores(2, 2);
    scores << 0.9, 0.1, 0.2, 0.8;
    const IndividualLcm ind = build_individual_lcm(Tensor(scores));
    Matrix pooled(1, 2), lcm(2, 2);
    pooled << 0.9, 0.8;
    lcm << 0.81, 0.72, 0.72, 0.64;
    CHECK(ind.pooled.value() == pooled);
    CHECK((ind.lcm.value() - lcm).cwiseAbs().maxCoeff() < 1e-15);

    const IndividualLcm flat = build_individual_lcm(Tensor(Matrix::Constant(3, 4, 0.3)));
    CHECK((flat.lcm.value().array() - 0.09).abs().maxCoeff() < 1e-16);

    Matrix single(1, 3);
    single << 0.2, 0.5, 0.7;
    CHECK(build_individual_lcm(Tensor(single)).pooled.value() == single);
    CHECK_THROWS(build_individual_lcm(Tensor(Matrix(0, 3))));
}

TEST_CASE("A_I is symmetric, rank one and in [0,1] on 100 random inputs") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 1 + static_cast<Index>(rng() % 8), c = 1 + static_cast<Index>(rng() % 8);
        const Matrix a = build_individual_lcm(Tensor(random_matrix(rng, n, c, 0.0, 1.0))).lcm.value();
        CHECK(a == a.transpose());
        CHECK(a.minCoeff() >= 0.0);
        CHECK(a.maxCoeff() <= 1.0);
        Eigen::JacobiSVD<Matrix> svd(a);
        const auto& sv = svd.singularValues();
        if (sv.size() > 1) CHECK(sv(1) <= 1e-12 * std::max(1.0, sv(0)));
    }
}

TEST_CASE("fuse_lcm examples and oracle") {
    std::mt19937_64 rng(9);
    const Matrix ai = random_matrix(rng, 4, 4, 0, 1);
    CHECK(fuse_lcm(Matrix::Ones(4, 4), Tensor(ai)).value() == ai);
    CHECK(fuse_lcm(random_matrix(rng, 4, 4, 0, 1), Tensor(Matrix::Zero(4, 4))).value() == Matrix::Zero(4, 4));

    const Matrix as = random_matrix(rng, 4, 4, 0, 1);
    const Matrix fused = fuse_lcm(as, Tensor(ai)).value();
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j) CHECK(fused(i, j) == as(i, j) * ai(i, j));
    CHECK_THROWS_AS(fuse_lcm(Matrix::Ones(3, 3), Tensor(ai)), DimensionError);
}

TEST_CASE("scaling a_I by c scales A_F by c squared") {
    std::mt19937_64 rng(12);
    const Matrix as = random_matrix(rng, 5, 5, 0, 1);
    const Matrix a = random_matrix(rng, 1, 5, 0, 1);
    const double c = 0.5;  // power of two keeps the products exact
    const Matrix base = fuse_lcm(as, outer(Tensor(a), Tensor(a))).value();
    const Matrix scaled = fuse_lcm(as, outer(Tensor(Matrix(a * c)), Tensor(Matrix(a * c)))).value();
    CHECK(scaled == base * (c * c));
}

TEST_CASE("normalize_adjacency examples") {
    const Matrix uniform = normalize_adjacency(Tensor(Matrix::Ones(2, 2)), 0.0).value();
    // 1/sqrt(2) * 1/sqrt(2) is 0.5 only up to rounding.
    CHECK((uniform.array() - 0.5).abs().maxCoeff() < 1e-15);
    CHECK(normalize_adjacency(Tensor(Matrix::Identity(3, 3)), 0.0).value() == Matrix::Identity(3, 3));

    // [[0.5,0.5],[0.5,0.5]] is a fixed point.
    CHECK((normalize_adjacency(Tensor(uniform), 0.0).value() - uniform).cwiseAbs().maxCoeff() < 1e-15);

    Matrix zero_row = Matrix::Ones(3, 3);
    zero_row.row(1).setZero();
    zero_row.col(1).setZero();
    const Matrix out = normalize_adjacency(Tensor(zero_row), 1e-6).value();
    CHECK(out.allFinite());
    CHECK(out.row(1) == RowVector::Zero(3));

    Matrix negative = Matrix::Ones(2, 2);
    negative(0, 1) = -0.1;
    CHECK_THROWS_AS(normalize_adjacency(Tensor(negative)), std::domain_error);
    CHECK_THROWS_AS(normalized_adjacency(negative), std::domain_error);
    CHECK_THROWS_AS(normalize_adjacency(Tensor(Matrix::Ones(2, 3))), DimensionError);
}

TEST_CASE("constant and differentiable normalization agree and match a loop oracle") {
    std::mt19937_64 rng(33);
    const Matrix a = random_matrix(rng, 5, 5, 0, 1);
    const Matrix t = normalize_adjacency(Tensor(a), 1e-6).value();
    const Matrix c = normalized_adjacency(a, 1e-6);
    CHECK((t - c).cwiseAbs().maxCoeff() < 1e-15);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j) {
            const double di = a.row(i).sum() + 1e-6, dj = a.row(j).sum() + 1e-6;
            CHECK(t(i, j) == doctest::Approx(a(i, j) / std::sqrt(di * dj)).epsilon(1e-14));
        }

    Tensor x = Tensor::parameter(a);
    const Matrix w = random_matrix(rng, 5, 5);
    CHECK(grad_check([&] { return sum(hadamard(normalize_adjacency(x, 1e-6), Tensor(w))); }, x, 1e-6, 1e-4).passed);
}

TEST_CASE("planted co-occurrence pairs are recovered from the default generator") {
    const DatasetSpec spec;
    const Dataset d = generate(spec);
    const StatLcm s = build_statistical_lcm(label_sets(d.train), spec.num_labels);
    double planted_min = 1.0, other_max = 0.0;
    for (Index i = 0; i < spec.num_labels; ++i)
        for (Index j = 0; j < spec.num_labels; ++j) {
            if (i == j) continue;
            bool planted = false;
            for (const auto& p : spec.pairs)
                planted |= (p.first == i && p.second == j) || (p.first == j && p.second == i);
            if (planted)
                planted_min = std::min(planted_min, s.cond_prob(i, j));
            else
                other_max = std::max(other_max, s.cond_prob(i, j));
        }
    CHECK(planted_min - other_max >= 0.2);
}
