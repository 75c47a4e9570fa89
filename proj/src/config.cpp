#include "iagcn/config.hpp"

#include <fstream>
#include <set>

namespace iagcn {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& section, std::initializer_list<const char*> known) {
    if (!j.is_object()) throw std::invalid_argument("config: section '" + section + "' must be an object");
    std::set<std::string> names(known.begin(), known.end());
    for (const auto& item : j.items())
        if (!names.count(item.key()))
            throw std::invalid_argument("config: unknown key '" + item.key() + "' in section '" + section + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(i, k);
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) return Matrix();
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw DimensionError("config: ragged matrix");
        for (std::size_t k = 0; k < rows[i].size(); ++k)
            m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    }
    return m;
}

}  // namespace

void RunConfig::validate() const {
    dataset.validate();
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("config: lambda must lie in [0, 1]");
    if (!(beta >= 0.0)) throw std::invalid_argument("config: beta must be >= 0");
    if (!(tau >= 0.0 && tau <= 1.0) || !(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("config: tau and p must lie in [0, 1]");
    if (!(adjacency_eps >= 0.0)) throw std::invalid_argument("config: adjacency_eps must be >= 0");
    if (embed_dim <= 0) throw std::invalid_argument("config: embed_dim must be positive");
    if (epochs < 0 || batch_size <= 0) throw std::invalid_argument("config: bad epochs or batch_size");
    if (!(lr >= 0.0) || !(momentum >= 0.0) || !(weight_decay >= 0.0))
        throw std::invalid_argument("config: lr, momentum and weight_decay must be >= 0");
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("config: threshold must lie in (0, 1)");
    dims().validate();
}

ModelDims RunConfig::dims() const {
    return scaled_dims(dataset.num_labels, dataset.feature_dim, embed_dim, gcn_scale);
}

ModelOptions RunConfig::model_options() const {
    ModelOptions o;
    o.lambda = lambda;
    o.beta = beta;
    o.adjacency_eps = adjacency_eps;
    o.stat_form = stat_form;
    o.region_mode = region_mode;
    o.ablation = ablation;
    return o;
}

TrainOptions RunConfig::train_options() const {
    TrainOptions t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.sgd = {lr, momentum, weight_decay, lr_decay_factor, lr_decay_every};
    t.seed = seed;
    return t;
}

RunConfig full_scale_preset() {
    RunConfig c;
    c.dataset.num_regions = 40;
    c.dataset.feature_dim = 2048;
    c.embed_dim = 300;
    c.gcn_scale = 1.0;
    c.epochs = 120;
    c.lr_decay_every = 30;
    return c;
}

json to_json(const DatasetSpec& spec) {
    json pairs = json::array();
    for (const auto& pr : spec.pairs) pairs.push_back({pr.first, pr.second, pr.probability});
    json j = {{"num_labels", spec.num_labels},       {"num_regions", spec.num_regions},
              {"feature_dim", spec.feature_dim},     {"n_train", spec.n_train},
              {"n_test", spec.n_test},               {"pairs", pairs},
              {"base_rate", spec.base_rate},         {"noise_sigma", spec.noise_sigma},
              {"background_rate", spec.background_rate}, {"prototype_norm", spec.prototype_norm},
              {"seed", spec.seed}};
    if (spec.prototypes.size() != 0) j["prototypes"] = matrix_to_json(spec.prototypes);
    return j;
}

DatasetSpec dataset_spec_from_json(const json& j) {
    reject_unknown(j, "dataset",
                   {"num_labels", "num_regions", "feature_dim", "n_train", "n_test", "pairs", "base_rate",
                    "noise_sigma", "background_rate", "prototype_norm", "seed", "prototypes"});
    DatasetSpec s;
    read(j, "num_labels", s.num_labels);
    read(j, "num_regions", s.num_regions);
    read(j, "feature_dim", s.feature_dim);
    read(j, "n_train", s.n_train);
    read(j, "n_test", s.n_test);
    read(j, "base_rate", s.base_rate);
    read(j, "noise_sigma", s.noise_sigma);
    read(j, "background_rate", s.background_rate);
    read(j, "prototype_norm", s.prototype_norm);
    read(j, "seed", s.seed);
    if (j.contains("pairs")) {
        s.pairs.clear();
        for (const auto& pr : j.at("pairs")) {
            if (!pr.is_array() || pr.size() != 3)
                throw std::invalid_argument("config: each pair must be [first, second, probability]");
            s.pairs.push_back({pr[0].get<Index>(), pr[1].get<Index>(), pr[2].get<double>()});
        }
    }
    if (j.contains("prototypes")) s.prototypes = matrix_from_json(j.at("prototypes"));
    return s;
}

json to_json(const RunConfig& c) {
    return {
        {"dataset", to_json(c.dataset)},
        {"model",
         {{"embed_dim", c.embed_dim},
          {"gcn_scale", c.gcn_scale},
          {"embeddings_path", c.embeddings_path},
          {"lambda", c.lambda},
          {"beta", c.beta},
          {"tau", c.tau},
          {"p", c.p},
          {"adjacency_eps", c.adjacency_eps},
          {"stat_form", to_string(c.stat_form)},
          {"region_adjacency_mode", to_string(c.region_mode)},
          {"ablation",
           {{"id_lcm", c.ablation.id_lcm}, {"var_inf", c.ablation.var_inf}, {"com_sco", c.ablation.com_sco}}}}},
        {"train",
         {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"lr_decay_factor", c.lr_decay_factor},
          {"lr_decay_every", c.lr_decay_every}}},
        {"eval", {{"threshold", c.threshold}}},
        {"seed", c.seed},
    };
}

RunConfig config_from_json(const json& j) {
    reject_unknown(j, "<root>", {"dataset", "model", "train", "eval", "seed"});
    RunConfig c;
    if (j.contains("dataset")) c.dataset = dataset_spec_from_json(j.at("dataset"));
    if (j.contains("model")) {
        const json& m = j.at("model");
        reject_unknown(m, "model",
                       {"embed_dim", "gcn_scale", "embeddings_path", "lambda", "beta", "tau", "p", "adjacency_eps",
                        "stat_form", "region_adjacency_mode", "ablation"});
        read(m, "embed_dim", c.embed_dim);
        read(m, "gcn_scale", c.gcn_scale);
        read(m, "embeddings_path", c.embeddings_path);
        read(m, "lambda", c.lambda);
        read(m, "beta", c.beta);
        read(m, "tau", c.tau);
        read(m, "p", c.p);
        read(m, "adjacency_eps", c.adjacency_eps);
        if (m.contains("stat_form")) c.stat_form = stat_form_from_string(m.at("stat_form").get<std::string>());
        if (m.contains("region_adjacency_mode"))
            c.region_mode = region_mode_from_string(m.at("region_adjacency_mode").get<std::string>());
        if (m.contains("ablation")) {
            const json& a = m.at("ablation");
            if (a.is_string()) {
                c.ablation = Ablation::level(a.get<std::string>());
            } else {
                reject_unknown(a, "model.ablation", {"id_lcm", "var_inf", "com_sco"});
                read(a, "id_lcm", c.ablation.id_lcm);
                read(a, "var_inf", c.ablation.var_inf);
                read(a, "com_sco", c.ablation.com_sco);
            }
        }
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        reject_unknown(t, "train",
                       {"epochs", "batch_size", "lr", "momentum", "weight_decay", "lr_decay_factor", "lr_decay_every"});
        read(t, "epochs", c.epochs);
        read(t, "batch_size", c.batch_size);
        read(t, "lr", c.lr);
        read(t, "momentum", c.momentum);
        read(t, "weight_decay", c.weight_decay);
        read(t, "lr_decay_factor", c.lr_decay_factor);
        read(t, "lr_decay_every", c.lr_decay_every);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        reject_unknown(e, "eval", {"threshold"});
        read(e, "threshold", c.threshold);
    }
    read(j, "seed", c.seed);
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("load_config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(file);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("load_config: " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace iagcn
