#pragma once

// Multi-label evaluation: per-class and overall precision/recall/F1 from
// thresholded predictions, and mean of non-interpolated average precision.
//
// Conventions: a label counts as predicted when sigmoid(score) >= threshold;
// empty precision/recall denominators contribute 0 (0/0 -> 0); AP ranks by
// score descending with ties broken toward the lower image index.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace iagcn {

struct MetricCounts {
    std::vector<long> correct;       // N^cor per label
    std::vector<long> predicted;     // N^pre per label
    std::vector<long> ground_truth;  // N^gt per label
};

struct OverallPerClass {
    double overall_precision = 0.0;
    double overall_recall = 0.0;
    double overall_f1 = 0.0;
    double class_precision = 0.0;
    double class_recall = 0.0;
    double class_f1 = 0.0;
};

struct MetricsReport {
    double mAP = 0.0;
    double CP = 0.0, CR = 0.0, CF1 = 0.0;
    double OP = 0.0, OR = 0.0, OF1 = 0.0;
    // nullopt for labels without positives (excluded from mAP).
    std::vector<std::optional<double>> per_label_ap;
};

namespace metrics_detail {

inline double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }
inline double harmonic(double a, double b) { return a + b > 0.0 ? 2.0 * a * b / (a + b) : 0.0; }

template <typename DerivedS, typename DerivedT>
void check_shapes(const Eigen::MatrixBase<DerivedS>& scores, const Eigen::MatrixBase<DerivedT>& truth) {
    if (scores.rows() != truth.rows() || scores.cols() != truth.cols())
        throw std::invalid_argument("metrics: scores " + std::to_string(scores.rows()) + "x" +
                                    std::to_string(scores.cols()) + " vs truth " + std::to_string(truth.rows()) +
                                    "x" + std::to_string(truth.cols()));
}

}  // namespace metrics_detail

// scores: images x C logits; truth: images x C of 0/1.
template <typename DerivedS, typename DerivedT>
MetricCounts count(const Eigen::MatrixBase<DerivedS>& scores, const Eigen::MatrixBase<DerivedT>& truth,
                   double threshold = 0.5) {
    metrics_detail::check_shapes(scores, truth);
    const auto labels = static_cast<std::size_t>(scores.cols());
    MetricCounts c{std::vector<long>(labels, 0), std::vector<long>(labels, 0), std::vector<long>(labels, 0)};
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            const double s = static_cast<double>(scores(i, j));
            const double prob = 1.0 / (1.0 + std::exp(-s));
            const bool pred = prob >= threshold;
            const bool gt = truth(i, j) > 0.5;
            const auto k = static_cast<std::size_t>(j);
            c.predicted[k] += pred;
            c.ground_truth[k] += gt;
            c.correct[k] += pred && gt;
        }
    }
    return c;
}

inline OverallPerClass overall_and_perclass(const MetricCounts& counts) {
    using metrics_detail::harmonic;
    using metrics_detail::ratio;
    const std::size_t labels = counts.correct.size();
    if (counts.predicted.size() != labels || counts.ground_truth.size() != labels)
        throw std::invalid_argument("overall_and_perclass: count vectors differ in length");
    double cor = 0.0, pre = 0.0, gt = 0.0, cp = 0.0, cr = 0.0;
    for (std::size_t i = 0; i < labels; ++i) {
        cor += static_cast<double>(counts.correct[i]);
        pre += static_cast<double>(counts.predicted[i]);
        gt += static_cast<double>(counts.ground_truth[i]);
        cp += ratio(static_cast<double>(counts.correct[i]), static_cast<double>(counts.predicted[i]));
        cr += ratio(static_cast<double>(counts.correct[i]), static_cast<double>(counts.ground_truth[i]));
    }
    OverallPerClass out;
    out.overall_precision = ratio(cor, pre);
    out.overall_recall = ratio(cor, gt);
    out.overall_f1 = harmonic(out.overall_precision, out.overall_recall);
    if (labels > 0) {
        out.class_precision = cp / static_cast<double>(labels);
        out.class_recall = cr / static_cast<double>(labels);
    }
    out.class_f1 = harmonic(out.class_precision, out.class_recall);
    return out;
}

// Non-interpolated AP of one label's ranking; requires at least one positive.
template <typename DerivedS, typename DerivedT>
double average_precision(const Eigen::MatrixBase<DerivedS>& scores, const Eigen::MatrixBase<DerivedT>& truth) {
    if (scores.size() != truth.size())
        throw std::invalid_argument("average_precision: scores and truth differ in length");
    const Eigen::Index n = scores.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&scores](Eigen::Index a, Eigen::Index b) {
        return scores(a) > scores(b);
    });
    long hits = 0;
    double precision_sum = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (truth(order[rank]) > 0.5) {
            ++hits;
            precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    if (hits == 0) throw std::invalid_argument("average_precision: no positive examples");
    return precision_sum / static_cast<double>(hits);
}

inline double mean_ap(const std::vector<std::optional<double>>& per_label_ap) {
    double total = 0.0;
    std::size_t used = 0;
    for (const auto& ap : per_label_ap) {
        if (!ap) continue;
        total += *ap;
        ++used;
    }
    if (used == 0) throw std::invalid_argument("mean_ap: undefined, no label has a positive example");
    return total / static_cast<double>(used);
}

template <typename DerivedS, typename DerivedT>
std::vector<std::optional<double>> per_label_ap(const Eigen::MatrixBase<DerivedS>& scores,
                                                const Eigen::MatrixBase<DerivedT>& truth) {
    metrics_detail::check_shapes(scores, truth);
    std::vector<std::optional<double>> out;
    out.reserve(static_cast<std::size_t>(scores.cols()));
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
        if ((truth.col(j).array() > 0.5).any())
            out.emplace_back(average_precision(scores.col(j), truth.col(j)));
        else
            out.emplace_back(std::nullopt);
    }
    return out;
}

template <typename DerivedS, typename DerivedT>
MetricsReport evaluate_metrics(const Eigen::MatrixBase<DerivedS>& scores, const Eigen::MatrixBase<DerivedT>& truth,
                               double threshold = 0.5) {
    MetricsReport r;
    const OverallPerClass f = overall_and_perclass(count(scores, truth, threshold));
    r.OP = f.overall_precision;
    r.OR = f.overall_recall;
    r.OF1 = f.overall_f1;
    r.CP = f.class_precision;
    r.CR = f.class_recall;
    r.CF1 = f.class_f1;
    r.per_label_ap = per_label_ap(scores, truth);
    r.mAP = mean_ap(r.per_label_ap);
    return r;
}

}  // namespace iagcn
