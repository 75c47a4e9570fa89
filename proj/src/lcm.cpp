#include "iagcn/lcm.hpp"

namespace iagcn {

StatForm stat_form_from_string(const std::string& name) {
    if (name == "binarized") return StatForm::binarized;
    if (name == "conditional") return StatForm::conditional;
    throw std::invalid_argument("unknown statistical LCM form '" + name +
                                "' (expected binarized|conditional)");
}

std::string to_string(StatForm form) {
    return form == StatForm::binarized ? "binarized" : "conditional";
}

StatLcm build_statistical_lcm(std::span<const std::vector<Index>> label_sets, Index num_labels,
                              double tau, double p) {
    if (num_labels <= 0) throw std::invalid_argument("build_statistical_lcm: label count must be positive");
    if (label_sets.empty()) throw std::invalid_argument("build_statistical_lcm: no images");
    if (!(tau >= 0.0 && tau <= 1.0) || !(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("build_statistical_lcm: tau and p must lie in [0, 1]");

    Matrix pair_counts = Matrix::Zero(num_labels, num_labels);
    Vector occurrences = Vector::Zero(num_labels);
    std::vector<char> present(static_cast<std::size_t>(num_labels));
    for (std::size_t img = 0; img < label_sets.size(); ++img) {
        std::fill(present.begin(), present.end(), 0);
        for (Index label : label_sets[img]) {
            if (label < 0 || label >= num_labels)
                throw std::out_of_range("build_statistical_lcm: label " + std::to_string(label) +
                                        " out of range in image " + std::to_string(img));
            present[static_cast<std::size_t>(label)] = 1;
        }
        for (Index i = 0; i < num_labels; ++i) {
            if (!present[static_cast<std::size_t>(i)]) continue;
            occurrences(i) += 1.0;
            for (Index j = 0; j < num_labels; ++j)
                if (present[static_cast<std::size_t>(j)]) pair_counts(i, j) += 1.0;
        }
    }

    StatLcm lcm;
    lcm.num_labels = num_labels;
    lcm.tau = tau;
    lcm.p = p;
    lcm.cond_prob = Matrix::Zero(num_labels, num_labels);
    for (Index i = 0; i < num_labels; ++i)
        if (occurrences(i) > 0.0) lcm.cond_prob.row(i) = pair_counts.row(i) / occurrences(i);

    lcm.binarized = Matrix::Zero(num_labels, num_labels);
    for (Index i = 0; i < num_labels; ++i) {
        Index survivors = 0;
        for (Index j = 0; j < num_labels; ++j)
            if (j != i && lcm.cond_prob(i, j) >= tau) ++survivors;
        if (survivors > 0) {
            const double share = p / static_cast<double>(survivors);
            for (Index j = 0; j < num_labels; ++j)
                if (j != i && lcm.cond_prob(i, j) >= tau) lcm.binarized(i, j) = share;
        }
        lcm.binarized(i, i) = 1.0 - p;
    }
    return lcm;
}

Tensor compute_region_scores(const Tensor& regions, const ScorerParams& scorer) {
    if (regions.cols() != scorer.weight.rows() || scorer.bias.rows() != 1 ||
        scorer.bias.cols() != scorer.weight.cols())
        throw DimensionError("compute_region_scores: regions " + regions.shape() + ", weight " +
                             scorer.weight.shape() + ", bias " + scorer.bias.shape());
    return sigmoid(add_row(matmul(regions, scorer.weight), scorer.bias));
}

IndividualLcm build_individual_lcm(const Tensor& region_scores) {
    if (region_scores.rows() == 0) throw DimensionError("build_individual_lcm: empty region set");
    ColumnMax pooled = column_max(region_scores);
    Tensor lcm = outer(pooled.values, pooled.values);
    return {std::move(pooled.values), std::move(lcm), std::move(pooled.argmax_rows)};
}

Tensor fuse_lcm(const Matrix& stat_adjacency, const Tensor& individual) {
    if (stat_adjacency.rows() != individual.rows() || stat_adjacency.cols() != individual.cols())
        throw DimensionError("fuse_lcm: statistical " + shape_string(stat_adjacency) +
                             " vs individual " + individual.shape());
    return hadamard(Tensor(stat_adjacency), individual);
}

Tensor fuse_lcm(const StatLcm& stat, const Tensor& individual, StatForm form) {
    return fuse_lcm(stat.adjacency(form), individual);
}

Tensor normalize_adjacency(const Tensor& adjacency, double eps) {
    if (adjacency.rows() != adjacency.cols())
        throw DimensionError("normalize_adjacency: matrix must be square, got " + adjacency.shape());
    if ((adjacency.value().array() < 0.0).any())
        throw std::domain_error("normalize_adjacency: negative entry in adjacency");
    Tensor inv_root = inv_sqrt(add_scalar(row_sums(adjacency), eps));
    return hadamard(adjacency, outer(inv_root, inv_root));
}

}  // namespace iagcn
