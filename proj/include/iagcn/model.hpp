#pragma once

// Two-branch instance-aware GCN classifier.
//
// Label branch: a GCN over label nodes (initial features = frozen label
// embeddings, adjacency = normalized image-dependent LCM) produces one
// classifier row per label, applied to the global feature.
// Region branch: a GCN over region nodes (initial features = region label
// scores) followed by mean pooling and a fully connected layer.
// The two logit vectors are blended with weight lambda.

#include "iagcn/data.hpp"
#include "iagcn/lcm.hpp"
#include "iagcn/tensor.hpp"
#include "iagcn/variational.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace iagcn {

class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(const std::string& tensor_name, const std::string& message)
        : std::runtime_error(message), tensor_(tensor_name) {}
    const std::string& tensor_name() const { return tensor_; }

private:
    std::string tensor_;
};

struct GcnStack {
    std::vector<Tensor> weights;  // weights[l] is d_l x d_{l+1}
    bool relu_last = true;

    Index input_dim() const { return weights.empty() ? 0 : weights.front().rows(); }
    Index output_dim() const { return weights.empty() ? 0 : weights.back().cols(); }
    Tensor forward(const Tensor& features, const Tensor& adjacency) const;
};

// relu(A_hat * H * W)
Tensor gcn_layer(const Tensor& features, const Tensor& adjacency, const Tensor& weight);
// A_hat * H * W without the activation.
Tensor gcn_linear_layer(const Tensor& features, const Tensor& adjacency, const Tensor& weight);

struct ModelDims {
    Index num_labels = 8;
    Index feature_dim = 32;
    Index embed_dim = 16;
    std::vector<Index> label_widths{8, 16, 32};      // last must equal feature_dim
    std::vector<Index> region_widths{4, 8, 16, 32};  // input is num_labels

    void validate() const;
};

// Paper-scale widths (512/1024/2048 and 256/512/1024/2048) multiplied by
// `scale`; the label stack's last width is pinned to feature_dim.
ModelDims scaled_dims(Index num_labels, Index feature_dim, Index embed_dim, double scale);

struct ParamGroup {
    std::string name;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

struct ModelParams {
    GcnStack label_gcn;
    GcnStack region_gcn;
    Tensor fc_weight;  // region_out x C
    Tensor fc_bias;    // 1 x C
    ScorerParams scorer;
    VariationalParams variational;
    Matrix embeddings;  // C x d_e, frozen

    // Each trainable tensor appears in exactly one group.
    std::vector<ParamGroup> groups() const;
    std::vector<Tensor> parameters() const;
    void zero_grad();
    ModelParams deep_copy() const;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
ModelParams init_params(const ModelDims& dims, const Matrix& embeddings, std::uint64_t seed);

struct Ablation {
    bool id_lcm = true;
    bool var_inf = true;
    bool com_sco = true;

    static Ablation base() { return {false, false, false}; }
    static Ablation full() { return {true, true, true}; }
    // Cumulative levels: base, id_lcm, var_inf, com_sco.
    static Ablation level(const std::string& name);
    std::string label() const;
    bool operator==(const Ablation&) const = default;
};

enum class RegionAdjacencyMode { affinity, label_mixing };
RegionAdjacencyMode region_mode_from_string(const std::string& name);
std::string to_string(RegionAdjacencyMode mode);

struct ModelOptions {
    double lambda = 0.8;
    double beta = 1.0;
    double adjacency_eps = 1e-6;
    StatForm stat_form = StatForm::binarized;
    RegionAdjacencyMode region_mode = RegionAdjacencyMode::affinity;
    Ablation ablation;

    // lambda actually applied: 1 when the region branch is disabled.
    double effective_lambda() const { return ablation.com_sco ? lambda : 1.0; }
};

// M = gcn(embeddings, A_hat); returns M * x (C x 1).
Tensor label_branch(const Tensor& x, const Tensor& embeddings, const Tensor& adjacency,
                    const GcnStack& label_gcn);

// normalize(S * A_hat * S^T): region-to-region affinity through label correlations.
Tensor region_adjacency(const Tensor& region_scores, const Tensor& label_adjacency, double eps);

// gcn over region nodes, mean pool, then pooled * W_fc + b_fc; returns C x 1.
Tensor region_branch(const Tensor& region_features, const Tensor& region_adj, const GcnStack& region_gcn,
                     const Tensor& fc_weight, const Tensor& fc_bias);

Tensor fuse_scores(const Tensor& global_scores, const Tensor& region_scores, double lambda);

// Mean BCE over labels; `truth` must be 0/1.
Tensor multilabel_bce(const Tensor& logits, const Vector& truth);

Tensor total_loss(const Tensor& bce, const Tensor& kl, double beta);

enum class LabelAdjacency { statistical, fused };

struct ForwardPass {
    LabelAdjacency adjacency_kind = LabelAdjacency::statistical;
    Tensor label_adjacency;  // normalized adjacency fed to the label GCN
    Tensor region_scores;    // N x C (undefined when no branch needs them)
    IndividualLcm individual;
    Tensor fused_lcm;        // A_F before normalization
    std::optional<RegionWeights> weights;
    Tensor y_hat_w;
    Tensor y_hat_r;
    Tensor y_hat_f;
    Tensor bce;
    Tensor kl;
    Tensor loss;
    // Intermediates in evaluation order, for diagnostics.
    std::vector<std::pair<std::string, Tensor>> trace;
};

// Full forward pass. `epsilon` (length N) feeds the reparameterization; pass
// nullopt for the deterministic epsilon = 0 path.
ForwardPass forward(const ModelParams& params, const Sample& sample, const StatLcm& stat,
                    const ModelOptions& options, const std::optional<Vector>& epsilon = std::nullopt);

struct Scores {
    Vector y_hat_w;
    Vector y_hat_r;  // zeros when the region branch is disabled
    Vector y_hat_f;
    Matrix region_scores;
    Matrix individual_lcm;
    Matrix fused_lcm;
    Vector z;  // ones when variational weighting is disabled
};

// Deterministic inference (epsilon = 0, no gradient recording).
Scores predict(const ModelParams& params, const Sample& sample, const StatLcm& stat,
               const ModelOptions& options);

// Throws NonFiniteError naming the first non-finite intermediate (or parameter).
void check_finite(const ForwardPass& pass, const ModelParams& params);

}  // namespace iagcn
