#include "fixtures.hpp"

#include "iagcn/checkpoint.hpp"
#include "iagcn/config.hpp"
#include "iagcn/pipeline.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace iagcn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "iagcn_test_config";
    fs::create_directories(dir);
    return dir / name;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("defaults trace to the documented values") {
    const RunConfig c;
    CHECK(c.lambda == 0.8);
    CHECK(c.momentum == 0.9);
    CHECK(c.weight_decay == 1e-4);
    CHECK(c.lr == 0.01);
    CHECK(c.lr_decay_factor == 0.1);
    CHECK(c.beta == 1.0);
    CHECK(c.epochs == 200);
    CHECK(c.dataset.num_labels == 8);
    CHECK(c.dataset.num_regions == 6);
    CHECK(c.dataset.feature_dim == 32);
    CHECK(c.dataset.noise_sigma == 0.3);
    CHECK(c.dataset.background_rate == 0.3);
    CHECK(c.ablation == Ablation::full());

    const RunConfig full = full_scale_preset();
    CHECK(full.dataset.num_regions == 40);
    CHECK(full.dims().label_widths == std::vector<Index>{512, 1024, 2048});
    CHECK(full.embed_dim == 300);
}

TEST_CASE("config JSON round-trips") {
    RunConfig c;
    c.lambda = 0.65;
    c.seed = 42;
    c.ablation = Ablation::level("id_lcm");
    c.stat_form = StatForm::conditional;
    c.region_mode = RegionAdjacencyMode::label_mixing;
    c.dataset.pairs = {{1, 2, 0.7}};
    const RunConfig back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.ablation == c.ablation);
    CHECK(back.dataset.pairs.size() == 1);
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
    using nlohmann::json;
    CHECK_THROWS(config_from_json(json{{"modle", json::object()}}));
    CHECK_THROWS(config_from_json(json{{"model", {{"lamda", 0.5}}}}));
    CHECK_THROWS(config_from_json(json{{"model", {{"lambda", 1.5}}}}));
    CHECK_THROWS(config_from_json(json{{"model", {{"ablation", "most"}}}}));
    CHECK_THROWS(config_from_json(json{{"dataset", {{"pairs", {{0, 1}}}}}}));
    CHECK(config_from_json(json{{"model", {{"ablation", "var_inf"}}}}).ablation == Ablation::level("var_inf"));
    CHECK(config_from_json(json::object()).seed == RunConfig{}.seed);

    const fs::path p = scratch("broken.json");
    {
        std::ofstream out(p);
        out << "{\"train\": {\"epochs\": ";
    }
    CHECK_THROWS(load_config(p));
    CHECK_THROWS(load_config(scratch("missing.json")));
}

TEST_CASE("checkpoint save/load is bit-exact and predictions match") {
    auto p = test::small_problem(21);
    RunConfig config;
    config.dataset.num_labels = 4;
    config.dataset.num_regions = 5;
    config.dataset.feature_dim = 6;
    config.dataset.pairs = {{0, 1, 0.9}};
    Checkpoint ckpt{config, p.stat, p.params};

    const fs::path path = scratch("ckpt.json");
    save_checkpoint(path, ckpt);
    const Checkpoint back = load_checkpoint(path);

    const auto a = ckpt.params.parameters(), b = back.params.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(bit_equal(a[i].value(), b[i].value()));
    CHECK(bit_equal(ckpt.params.embeddings, back.params.embeddings));
    CHECK(bit_equal(ckpt.stat.binarized, back.stat.binarized));
    CHECK(bit_equal(ckpt.stat.cond_prob, back.stat.cond_prob));
    CHECK(back.params.label_gcn.relu_last == ckpt.params.label_gcn.relu_last);
    CHECK(to_json(back.config) == to_json(ckpt.config));

    const Scores s1 = predict(ckpt.params, p.sample, ckpt.stat, config.model_options());
    const Scores s2 = predict(back.params, p.sample, back.stat, back.config.model_options());
    CHECK(bit_equal(s1.y_hat_f, s2.y_hat_f));

    // Saving the loaded checkpoint reproduces the file byte for byte.
    const fs::path again = scratch("ckpt_again.json");
    save_checkpoint(again, back);
    std::ifstream f1(path), f2(again);
    const std::string t1((std::istreambuf_iterator<char>(f1)), {}), t2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(t1 == t2);
}

TEST_CASE("checkpoint loading validates format and version") {
    using nlohmann::json;
    auto p = test::small_problem(22);
    RunConfig config;
    config.dataset.num_labels = 4;
    config.dataset.num_regions = 5;
    config.dataset.feature_dim = 6;
    config.dataset.pairs = {{0, 1, 0.9}};
    json j = to_json(Checkpoint{config, p.stat, p.params});
    json wrong_version = j;
    wrong_version["version"] = kCheckpointVersion + 1;
    CHECK_THROWS(checkpoint_from_json(wrong_version));
    json wrong_format = j;
    wrong_format["format"] = "something-else";
    CHECK_THROWS(checkpoint_from_json(wrong_format));
    CHECK_NOTHROW(checkpoint_from_json(j));
}

TEST_CASE("pipeline: untrained checkpoint is seeded and evaluable") {
    RunConfig config;
    config.dataset.n_train = 40;
    config.dataset.n_test = 20;
    const Dataset d = generate(config.dataset);
    const Checkpoint a = untrained(config, d.train), b = untrained(config, d.train);
    const auto pa = a.params.parameters(), pb = b.params.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(bit_equal(pa[i].value(), pb[i].value()));
    const MetricsReport r = evaluate(a, d.test);
    CHECK(r.mAP > 0.0);

    RunConfig other = config;
    other.dataset.feature_dim = 16;
    CHECK_THROWS_AS(untrained(other, d.train), DimensionError);
}
