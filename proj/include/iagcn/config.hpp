#pragma once

// Run configuration: every hyperparameter a command needs, loadable from and
// echoed as JSON. Missing keys take the defaults below; unknown keys are an error.

#include "iagcn/data.hpp"
#include "iagcn/model.hpp"
#include "iagcn/training.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace iagcn {

struct RunConfig {
    DatasetSpec dataset;

    Index embed_dim = 16;
    // Multiplies the 512/1024/2048 (label) and 256/512/1024/2048 (region) widths.
    double gcn_scale = 1.0 / 64.0;
    std::string embeddings_path;  // CSV; seeded uniform embeddings when empty

    double lambda = 0.8;
    double beta = 1.0;
    double tau = 0.4;
    double p = 0.2;
    double adjacency_eps = 1e-6;
    StatForm stat_form = StatForm::binarized;
    RegionAdjacencyMode region_mode = RegionAdjacencyMode::affinity;
    Ablation ablation = Ablation::full();

    int epochs = 200;
    int batch_size = 16;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double lr_decay_factor = 0.1;
    int lr_decay_every = 100;

    double threshold = 0.5;
    std::uint64_t seed = 1;

    void validate() const;
    ModelDims dims() const;
    ModelOptions model_options() const;
    TrainOptions train_options() const;
};

// 300-d embeddings, full-width GCNs, 40 regions, 120 epochs with decay every 30.
RunConfig full_scale_preset();

nlohmann::json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

}  // namespace iagcn
