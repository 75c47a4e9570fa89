#pragma once

// Label correlation matrices: the dataset-wide statistical LCM, the per-image
// individual LCM built from region label scores, their fusion, and symmetric
// degree normalization.

#include "iagcn/tensor.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iagcn {

// Which form of the statistical LCM enters the fusion with the individual LCM.
enum class StatForm { binarized, conditional };

StatForm stat_form_from_string(const std::string& name);
std::string to_string(StatForm form);

struct StatLcm {
    Index num_labels = 0;
    Matrix cond_prob;  // P(L_j | L_i) at (i, j)
    Matrix binarized;  // thresholded at tau and re-weighted by p
    double tau = 0.4;
    double p = 0.2;

    const Matrix& adjacency(StatForm form) const {
        return form == StatForm::binarized ? binarized : cond_prob;
    }
};

// label_sets[k] lists the labels present in training image k.
StatLcm build_statistical_lcm(std::span<const std::vector<Index>> label_sets, Index num_labels,
                              double tau = 0.4, double p = 0.2);

// Linear scorer + sigmoid mapping region features to per-label rough scores.
struct ScorerParams {
    Tensor weight;  // D x C
    Tensor bias;    // 1 x C
};

// N x D weighted regions -> N x C scores in (0, 1).
Tensor compute_region_scores(const Tensor& regions, const ScorerParams& scorer);

struct IndividualLcm {
    Tensor pooled;                  // 1 x C, column-wise max of the region scores
    Tensor lcm;                     // C x C, pooled^T * pooled
    std::vector<Index> argmax_rows; // region that won each label
};

IndividualLcm build_individual_lcm(const Tensor& region_scores);

// Element-wise product of a constant statistical adjacency and the individual LCM.
Tensor fuse_lcm(const Matrix& stat_adjacency, const Tensor& individual);
Tensor fuse_lcm(const StatLcm& stat, const Tensor& individual, StatForm form = StatForm::binarized);

// D^{-1/2} A D^{-1/2} with D_ii = sum_j A_ij + eps. Differentiable in A.
Tensor normalize_adjacency(const Tensor& adjacency, double eps = 1e-6);

// Constant-matrix version of the same normalization.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
normalized_adjacency(const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar eps = 1e-6) {
    using Scalar = typename Derived::Scalar;
    if (a.rows() != a.cols())
        throw DimensionError("normalize_adjacency: matrix must be square, got " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    if ((a.array() < Scalar(0)).any())
        throw std::domain_error("normalize_adjacency: negative entry in adjacency");
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_root =
        (a.rowwise().sum().array() + eps).rsqrt().matrix();
    return inv_root.asDiagonal() * a * inv_root.asDiagonal();
}

}  // namespace iagcn
