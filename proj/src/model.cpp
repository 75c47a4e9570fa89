#include "iagcn/model.hpp"

#include <cmath>
#include <random>

namespace iagcn {

Tensor gcn_linear_layer(const Tensor& features, const Tensor& adjacency, const Tensor& weight) {
    if (adjacency.rows() != adjacency.cols() || adjacency.cols() != features.rows() ||
        features.cols() != weight.rows())
        throw DimensionError("gcn_layer: adjacency " + adjacency.shape() + ", features " + features.shape() +
                             ", weight " + weight.shape());
    return matmul(matmul(adjacency, features), weight);
}

Tensor gcn_layer(const Tensor& features, const Tensor& adjacency, const Tensor& weight) {
    return relu(gcn_linear_layer(features, adjacency, weight));
}

Tensor GcnStack::forward(const Tensor& features, const Tensor& adjacency) const {
    Tensor h = features;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const bool last = l + 1 == weights.size();
        h = (last && !relu_last) ? gcn_linear_layer(h, adjacency, weights[l])
                                 : gcn_layer(h, adjacency, weights[l]);
    }
    return h;
}

void ModelDims::validate() const {
    if (num_labels <= 0 || feature_dim <= 0 || embed_dim <= 0)
        throw std::invalid_argument("ModelDims: dimensions must be positive");
    if (label_widths.empty() || region_widths.empty())
        throw std::invalid_argument("ModelDims: GCN stacks need at least one layer");
    for (Index w : label_widths)
        if (w <= 0) throw std::invalid_argument("ModelDims: non-positive label GCN width");
    for (Index w : region_widths)
        if (w <= 0) throw std::invalid_argument("ModelDims: non-positive region GCN width");
    if (label_widths.back() != feature_dim)
        throw DimensionError("ModelDims: label GCN output " + std::to_string(label_widths.back()) +
                             " must equal feature dim " + std::to_string(feature_dim));
}

ModelDims scaled_dims(Index num_labels, Index feature_dim, Index embed_dim, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("scaled_dims: scale must be positive");
    auto width = [scale](double reference) {
        return std::max<Index>(1, static_cast<Index>(std::lround(reference * scale)));
    };
    ModelDims dims;
    dims.num_labels = num_labels;
    dims.feature_dim = feature_dim;
    dims.embed_dim = embed_dim;
    dims.label_widths = {width(512), width(1024), feature_dim};
    dims.region_widths = {width(256), width(512), width(1024), width(2048)};
    return dims;
}

std::vector<ParamGroup> ModelParams::groups() const {
    std::vector<ParamGroup> out;
    ParamGroup label{"label_gcn", {}};
    for (std::size_t l = 0; l < label_gcn.weights.size(); ++l)
        label.tensors.emplace_back("label_gcn." + std::to_string(l), label_gcn.weights[l]);
    out.push_back(std::move(label));
    ParamGroup region{"region_gcn", {}};
    for (std::size_t l = 0; l < region_gcn.weights.size(); ++l)
        region.tensors.emplace_back("region_gcn." + std::to_string(l), region_gcn.weights[l]);
    out.push_back(std::move(region));
    out.push_back({"final_fc", {{"fc.weight", fc_weight}, {"fc.bias", fc_bias}}});
    out.push_back({"scorer", {{"scorer.weight", scorer.weight}, {"scorer.bias", scorer.bias}}});
    out.push_back({"variational",
                   {{"variational.w_mu", variational.w_mu}, {"variational.w_logvar", variational.w_logvar}}});
    return out;
}

std::vector<Tensor> ModelParams::parameters() const {
    std::vector<Tensor> out;
    for (const auto& group : groups())
        for (const auto& [name, t] : group.tensors) out.push_back(t);
    return out;
}

void ModelParams::zero_grad() {
    for (Tensor t : parameters()) t.zero_grad();
}

ModelParams ModelParams::deep_copy() const {
    ModelParams out;
    out.label_gcn.relu_last = label_gcn.relu_last;
    for (const Tensor& w : label_gcn.weights) out.label_gcn.weights.push_back(w.deep_copy());
    out.region_gcn.relu_last = region_gcn.relu_last;
    for (const Tensor& w : region_gcn.weights) out.region_gcn.weights.push_back(w.deep_copy());
    out.fc_weight = fc_weight.deep_copy();
    out.fc_bias = fc_bias.deep_copy();
    out.scorer = {scorer.weight.deep_copy(), scorer.bias.deep_copy()};
    out.variational = {variational.w_mu.deep_copy(), variational.w_logvar.deep_copy()};
    out.embeddings = embeddings;
    return out;
}

ModelParams init_params(const ModelDims& dims, const Matrix& embeddings, std::uint64_t seed) {
    dims.validate();
    if (embeddings.rows() != dims.num_labels || embeddings.cols() != dims.embed_dim)
        throw DimensionError("init_params: embeddings are " + shape_string(embeddings) + ", expected " +
                             std::to_string(dims.num_labels) + "x" + std::to_string(dims.embed_dim));
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](Index rows, Index cols, Index fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
        return Tensor::parameter(std::move(m));
    };

    ModelParams p;
    p.embeddings = embeddings;
    Index in = dims.embed_dim;
    for (Index w : dims.label_widths) {
        p.label_gcn.weights.push_back(uniform(in, w, in));
        in = w;
    }
    // The classifier rows need signed entries, so the last label layer is linear.
    p.label_gcn.relu_last = false;

    in = dims.num_labels;
    for (Index w : dims.region_widths) {
        p.region_gcn.weights.push_back(uniform(in, w, in));
        in = w;
    }
    p.region_gcn.relu_last = true;
    p.fc_weight = uniform(in, dims.num_labels, in);
    p.fc_bias = uniform(1, dims.num_labels, in);
    p.scorer.weight = uniform(dims.feature_dim, dims.num_labels, dims.feature_dim);
    p.scorer.bias = uniform(1, dims.num_labels, dims.feature_dim);
    p.variational.w_mu = uniform(dims.feature_dim, 1, dims.feature_dim);
    p.variational.w_logvar = uniform(dims.feature_dim, 1, dims.feature_dim);
    return p;
}

Ablation Ablation::level(const std::string& name) {
    if (name == "base") return {false, false, false};
    if (name == "id_lcm") return {true, false, false};
    if (name == "var_inf") return {true, true, false};
    if (name == "com_sco" || name == "full") return {true, true, true};
    throw std::invalid_argument("unknown ablation level '" + name + "' (expected base|id_lcm|var_inf|com_sco)");
}

std::string Ablation::label() const {
    std::string out = "Base";
    if (id_lcm) out += "+ID_LCM";
    if (var_inf) out += "+Var_Inf";
    if (com_sco) out += "+Com_Sco";
    return out;
}

RegionAdjacencyMode region_mode_from_string(const std::string& name) {
    if (name == "affinity") return RegionAdjacencyMode::affinity;
    if (name == "label_mixing") return RegionAdjacencyMode::label_mixing;
    throw std::invalid_argument("unknown region adjacency mode '" + name + "' (expected affinity|label_mixing)");
}

std::string to_string(RegionAdjacencyMode mode) {
    return mode == RegionAdjacencyMode::affinity ? "affinity" : "label_mixing";
}

Tensor label_branch(const Tensor& x, const Tensor& embeddings, const Tensor& adjacency,
                    const GcnStack& label_gcn) {
    Tensor classifiers = label_gcn.forward(embeddings, adjacency);
    if (x.cols() != 1 || classifiers.cols() != x.rows())
        throw DimensionError("label_branch: classifiers " + classifiers.shape() + " vs global feature " +
                             x.shape());
    return matmul(classifiers, x);
}

Tensor region_adjacency(const Tensor& region_scores, const Tensor& label_adjacency, double eps) {
    if (label_adjacency.rows() != region_scores.cols() || label_adjacency.cols() != region_scores.cols())
        throw DimensionError("region_adjacency: region scores " + region_scores.shape() +
                             " vs label adjacency " + label_adjacency.shape());
    Tensor affinity = matmul(matmul(region_scores, label_adjacency), transpose(region_scores));
    if ((affinity.value().array() < 0.0).any())
        throw std::domain_error("region_adjacency: negative affinity (scores or adjacency below zero)");
    return normalize_adjacency(affinity, eps);
}

Tensor region_branch(const Tensor& region_features, const Tensor& region_adj, const GcnStack& region_gcn,
                     const Tensor& fc_weight, const Tensor& fc_bias) {
    if (region_features.cols() != region_gcn.input_dim())
        throw DimensionError("region_branch: node features " + region_features.shape() +
                             " vs region GCN input " + std::to_string(region_gcn.input_dim()));
    Tensor h = region_gcn.forward(region_features, region_adj);
    Tensor pooled = mean_rows(h);
    if (fc_weight.rows() != pooled.cols())
        throw DimensionError("region_branch: pooled " + pooled.shape() + " vs fc " + fc_weight.shape());
    return transpose(add_row(matmul(pooled, fc_weight), fc_bias));
}

Tensor fuse_scores(const Tensor& global_scores, const Tensor& region_scores, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("fuse_scores: lambda must lie in [0, 1], got " + std::to_string(lambda));
    return add(scale(global_scores, lambda), scale(region_scores, 1.0 - lambda));
}

Tensor multilabel_bce(const Tensor& logits, const Vector& truth) {
    if (logits.size() != truth.size())
        throw DimensionError("multilabel_bce: logits " + logits.shape() + " vs truth length " +
                             std::to_string(truth.size()));
    Matrix t = Eigen::Map<const Matrix>(truth.data(), logits.rows(), logits.cols());
    return bce_with_logits(logits, t);
}

Tensor total_loss(const Tensor& bce, const Tensor& kl, double beta) {
    if (!kl.defined()) return bce;
    return add(bce, scale(kl, beta));
}

ForwardPass forward(const ModelParams& params, const Sample& sample, const StatLcm& stat,
                    const ModelOptions& options, const std::optional<Vector>& epsilon) {
    const Ablation& ab = options.ablation;
    ForwardPass pass;
    auto record = [&pass](const char* name, const Tensor& t) { pass.trace.emplace_back(name, t); };

    if (sample.regions.cols() != sample.x.size())
        throw DimensionError("forward: regions " + shape_string(sample.regions) + " vs global feature length " +
                             std::to_string(sample.x.size()));
    if (stat.num_labels != params.embeddings.rows())
        throw DimensionError("forward: statistical LCM has " + std::to_string(stat.num_labels) +
                             " labels, model has " + std::to_string(params.embeddings.rows()));

    const Tensor x(sample.x);
    Tensor regions(sample.regions);

    if (ab.var_inf) {
        const Vector eps = epsilon ? *epsilon : Vector::Zero(sample.regions.rows());
        RegionWeights w = weigh(regions, params.variational, eps);
        record("z_mu", w.z_mu);
        record("z_logvar", w.z_logvar);
        record("z", w.z);
        regions = weight_regions(regions, w.z);
        record("weighted_regions", regions);
        pass.kl = kl_loss(w.z_mu, w.z_logvar);
        record("kl", pass.kl);
        pass.weights = std::move(w);
    }

    if (ab.id_lcm || ab.com_sco) {
        pass.region_scores = compute_region_scores(regions, params.scorer);
        record("region_scores", pass.region_scores);
    }

    if (ab.id_lcm) {
        pass.individual = build_individual_lcm(pass.region_scores);
        record("individual_lcm", pass.individual.lcm);
        pass.fused_lcm = fuse_lcm(stat, pass.individual.lcm, options.stat_form);
        record("fused_lcm", pass.fused_lcm);
        pass.label_adjacency = normalize_adjacency(pass.fused_lcm, options.adjacency_eps);
        pass.adjacency_kind = LabelAdjacency::fused;
    } else {
        pass.label_adjacency =
            Tensor(normalized_adjacency(stat.adjacency(options.stat_form), options.adjacency_eps));
        pass.adjacency_kind = LabelAdjacency::statistical;
    }
    record("label_adjacency", pass.label_adjacency);

    pass.y_hat_w = label_branch(x, Tensor(params.embeddings),
                                pass.label_adjacency, params.label_gcn);
    record("y_hat_w", pass.y_hat_w);

    if (ab.com_sco) {
        Tensor node_features = pass.region_scores;
        Tensor adj;
        if (options.region_mode == RegionAdjacencyMode::affinity) {
            adj = region_adjacency(pass.region_scores, pass.label_adjacency, options.adjacency_eps);
        } else {
            node_features = matmul(pass.region_scores, pass.label_adjacency);
            adj = Tensor(Matrix::Identity(sample.regions.rows(), sample.regions.rows()));
        }
        record("region_adjacency", adj);
        pass.y_hat_r = region_branch(node_features, adj, params.region_gcn, params.fc_weight, params.fc_bias);
        record("y_hat_r", pass.y_hat_r);
        pass.y_hat_f = fuse_scores(pass.y_hat_w, pass.y_hat_r, options.lambda);
    } else {
        pass.y_hat_f = pass.y_hat_w;
    }
    record("y_hat_f", pass.y_hat_f);

    pass.bce = multilabel_bce(pass.y_hat_f, sample.y);
    record("bce", pass.bce);
    pass.loss = total_loss(pass.bce, pass.kl, options.beta);
    record("loss", pass.loss);
    return pass;
}

Scores predict(const ModelParams& params, const Sample& sample, const StatLcm& stat,
               const ModelOptions& options) {
    NoGradGuard guard;
    ForwardPass pass = forward(params, sample, stat, options);
    Scores s;
    s.y_hat_w = pass.y_hat_w.value().col(0);
    s.y_hat_f = pass.y_hat_f.value().col(0);
    s.y_hat_r = pass.y_hat_r.defined() ? Vector(pass.y_hat_r.value().col(0)) : Vector::Zero(s.y_hat_w.size());
    if (pass.region_scores.defined()) s.region_scores = pass.region_scores.value();
    if (pass.individual.lcm.defined()) s.individual_lcm = pass.individual.lcm.value();
    if (pass.fused_lcm.defined()) s.fused_lcm = pass.fused_lcm.value();
    s.z = pass.weights ? Vector(pass.weights->z.value().col(0)) : Vector::Ones(sample.regions.rows());
    return s;
}

void check_finite(const ForwardPass& pass, const ModelParams& params) {
    for (const auto& [name, t] : pass.trace)
        if (!t.value().allFinite())
            throw NonFiniteError(name, "non-finite values in '" + name + "'");
    for (const auto& group : params.groups())
        for (const auto& [name, t] : group.tensors)
            if (!t.value().allFinite())
                throw NonFiniteError(name, "non-finite values in parameter '" + name + "'");
}

}  // namespace iagcn
