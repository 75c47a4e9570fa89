#include "iagcn/checkpoint.hpp"

#include <fstream>

namespace iagcn {

using nlohmann::json;

namespace {

json tensor_json(const Matrix& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
    return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

Matrix tensor_from_json(const json& j, const std::string& name) {
    const auto shape = j.at("shape").get<std::vector<Index>>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0 ||
        static_cast<std::size_t>(shape[0] * shape[1]) != data.size())
        throw DimensionError("checkpoint: tensor '" + name + "' has inconsistent shape and data");
    Matrix m(shape[0], shape[1]);
    std::size_t k = 0;
    for (Index i = 0; i < shape[0]; ++i)
        for (Index c = 0; c < shape[1]; ++c) m(i, c) = data[k++];
    return m;
}

}  // namespace

json to_json(const Checkpoint& ck) {
    json params = json::object();
    for (const auto& group : ck.params.groups())
        for (const auto& [name, t] : group.tensors) params[name] = tensor_json(t.value());
    return {
        {"format", "iagcn-checkpoint"},
        {"version", kCheckpointVersion},
        {"config", to_json(ck.config)},
        {"stat_lcm",
         {{"num_labels", ck.stat.num_labels},
          {"tau", ck.stat.tau},
          {"p", ck.stat.p},
          {"cond_prob", tensor_json(ck.stat.cond_prob)},
          {"binarized", tensor_json(ck.stat.binarized)}}},
        {"embeddings", tensor_json(ck.params.embeddings)},
        {"label_gcn_relu_last", ck.params.label_gcn.relu_last},
        {"region_gcn_relu_last", ck.params.region_gcn.relu_last},
        {"label_gcn_layers", ck.params.label_gcn.weights.size()},
        {"region_gcn_layers", ck.params.region_gcn.weights.size()},
        {"params", params},
    };
}

Checkpoint checkpoint_from_json(const json& j) {
    if (j.value("format", std::string()) != "iagcn-checkpoint")
        throw std::runtime_error("checkpoint: not an iagcn checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint ck;
    ck.config = config_from_json(j.at("config"));
    const json& s = j.at("stat_lcm");
    ck.stat.num_labels = s.at("num_labels").get<Index>();
    ck.stat.tau = s.at("tau").get<double>();
    ck.stat.p = s.at("p").get<double>();
    ck.stat.cond_prob = tensor_from_json(s.at("cond_prob"), "cond_prob");
    ck.stat.binarized = tensor_from_json(s.at("binarized"), "binarized");

    const json& p = j.at("params");
    auto param = [&p](const std::string& name) {
        if (!p.contains(name)) throw std::runtime_error("checkpoint: missing parameter '" + name + "'");
        return Tensor::parameter(tensor_from_json(p.at(name), name));
    };
    ModelParams& m = ck.params;
    m.embeddings = tensor_from_json(j.at("embeddings"), "embeddings");
    m.label_gcn.relu_last = j.at("label_gcn_relu_last").get<bool>();
    m.region_gcn.relu_last = j.at("region_gcn_relu_last").get<bool>();
    const auto label_layers = j.at("label_gcn_layers").get<std::size_t>();
    const auto region_layers = j.at("region_gcn_layers").get<std::size_t>();
    for (std::size_t l = 0; l < label_layers; ++l) m.label_gcn.weights.push_back(param("label_gcn." + std::to_string(l)));
    for (std::size_t l = 0; l < region_layers; ++l)
        m.region_gcn.weights.push_back(param("region_gcn." + std::to_string(l)));
    m.fc_weight = param("fc.weight");
    m.fc_bias = param("fc.bias");
    m.scorer = {param("scorer.weight"), param("scorer.bias")};
    m.variational = {param("variational.w_mu"), param("variational.w_logvar")};
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    file << to_json(checkpoint).dump(1) << '\n';
    if (!file) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    json j;
    try {
        j = json::parse(file);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("load_checkpoint: " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace iagcn
