#include "fixtures.hpp"

#include "iagcn/training.hpp"

#include <doctest.h>

using namespace iagcn;
using test::random_matrix;
using test::small_problem;

namespace {

std::vector<Sample> small_set(std::uint64_t seed, std::size_t n) {
    std::vector<Sample> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(small_problem(seed * 100 + k).sample);
    return out;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters bit-identical") {
    auto p = small_problem(1);
    const ModelParams before = p.params.deep_copy();
    SgdOptions o;
    o.lr = 0.0;
    SgdOptimizer opt(o);
    std::mt19937_64 rng(1);
    const auto batch = small_set(1, 4);
    train_step(p.params, batch, p.stat, ModelOptions{}, opt, rng);
    const auto a = before.parameters(), b = p.params.parameters();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value() == b[i].value());
}

TEST_CASE("sgd update follows the momentum and weight-decay recurrence") {
    Tensor w = Tensor::parameter(Matrix::Constant(1, 1, 2.0));
    SgdOptimizer opt({0.1, 0.9, 0.01, 0.1, 100});
    std::vector<Tensor> params{w};

    // Loss 0.5 * w^2: gradient w.
    double v = 0.0, expected = 2.0;
    for (int step = 0; step < 3; ++step) {
        params[0].zero_grad();
        backward(scale(sum(hadamard(w, w)), 0.5));
        v = 0.9 * v + (expected + 0.01 * expected);
        expected -= 0.1 * v;
        opt.step(params);
        CHECK(w.value()(0, 0) == doctest::Approx(expected).epsilon(1e-15));
    }
}

TEST_CASE("one step on a convex one-parameter toy decreases the loss") {
    Tensor w = Tensor::parameter(Matrix::Constant(1, 1, 3.0));
    auto loss = [&] { return sum(hadamard(add_scalar(w, -1.0), add_scalar(w, -1.0))); };
    const double before = loss().item();
    backward(loss());
    SgdOptimizer opt({0.1, 0.9, 0.0, 0.1, 100});
    std::vector<Tensor> params{w};
    opt.step(params);
    CHECK(loss().item() < before);
}

TEST_CASE("learning rate decays by the factor every interval") {
    SgdOptimizer opt({0.01, 0.9, 1e-4, 0.1, 30});
    opt.set_epoch(0);
    CHECK(opt.learning_rate() == 0.01);
    opt.set_epoch(29);
    CHECK(opt.learning_rate() == 0.01);
    opt.set_epoch(30);
    CHECK(opt.learning_rate() == doctest::Approx(0.001).epsilon(1e-15));
    opt.set_epoch(65);
    CHECK(opt.learning_rate() == doctest::Approx(0.0001).epsilon(1e-15));
}

TEST_CASE("training is deterministic given the seed and reduces the loss") {
    const auto data = small_set(2, 12);
    auto run = [&](std::uint64_t seed) {
        auto p = small_problem(3);
        TrainOptions t;
        t.epochs = 15;
        t.batch_size = 4;
        t.seed = seed;
        const auto log = train(p.params, data, p.stat, ModelOptions{}, t);
        return std::make_pair(p.params, log);
    };
    const auto [a, log_a] = run(5);
    const auto [b, log_b] = run(5);
    const auto pa = a.parameters(), pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].value() == pb[i].value());
    REQUIRE(log_a.size() == 15);
    CHECK(log_a.back().mean_loss < log_a.front().mean_loss);

    const auto [c, log_c] = run(6);
    CHECK(log_c.back().mean_loss != log_a.back().mean_loss);
}

TEST_CASE("a non-finite loss aborts training with epoch and step") {
    auto p = small_problem(4);
    auto data = small_set(4, 4);
    data[2].x(0) = std::numeric_limits<double>::infinity();
    TrainOptions t;
    t.epochs = 2;
    t.batch_size = 1;
    t.seed = 1;
    ModelOptions options;
    options.ablation = Ablation::base();
    try {
        train(p.params, data, p.stat, options, t);
        FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& e) {
        CHECK(e.epoch() == 0);
        CHECK(e.tensor_name() == "y_hat_w");
        CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    }
}

TEST_CASE("predict_scores stacks one row per sample") {
    auto p = small_problem(5);
    const auto data = small_set(5, 3);
    const Matrix s = predict_scores(p.params, data, p.stat, ModelOptions{});
    CHECK(s.rows() == 3);
    CHECK(s.cols() == 4);
    for (Index k = 0; k < 3; ++k)
        CHECK(s.row(k).transpose() == predict(p.params, data[static_cast<std::size_t>(k)], p.stat, ModelOptions{}).y_hat_f);
}
