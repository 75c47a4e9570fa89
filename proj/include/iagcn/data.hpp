#pragma once

// Synthetic multi-label "images": a global feature, a fixed number of region
// features and a binary label vector. Stands in for backbone/RPN features.

#include "iagcn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iagcn {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Sample {
    Vector x;        // D
    Matrix regions;  // N x D
    Vector y;        // C, entries 0 or 1
};

struct CooccurrencePair {
    Index first = 0;
    Index second = 0;
    double probability = 0.0;
};

struct DatasetSpec {
    Index num_labels = 8;
    Index num_regions = 6;
    Index feature_dim = 32;
    Index n_train = 500;
    Index n_test = 200;
    // C x D; generated from the seed when left empty.
    Matrix prototypes;
    // When exactly one label of a pair is drawn, the other joins with this probability.
    std::vector<CooccurrencePair> pairs{{0, 1, 0.9}, {2, 3, 0.9}, {4, 5, 0.8}};
    double base_rate = 0.2;
    double noise_sigma = 0.3;
    double background_rate = 0.3;
    double prototype_norm = 4.0;
    std::uint64_t seed = 7;

    void validate() const;
};

struct Dataset {
    std::vector<Sample> train;
    std::vector<Sample> test;
    Matrix prototypes;
};

Dataset generate(const DatasetSpec& spec);

// Row-orthonormal prototypes scaled to `norm` (near-orthogonal when C > D).
Matrix make_prototypes(Index num_labels, Index feature_dim, double norm, std::uint64_t seed);

// One JSON object per line: {"y":[...],"x":[...],"regions":[[...],...]}.
void save_dataset(const std::filesystem::path& path, std::span<const Sample> samples);
std::vector<Sample> load_dataset(const std::filesystem::path& path);

// C x d_e, entries uniform in [-1, 1].
Matrix make_embeddings(Index num_labels, Index dim, std::uint64_t seed);
// C rows of d_e comma-separated reals.
Matrix load_embeddings_csv(const std::filesystem::path& path, Index num_labels, Index dim);

std::vector<std::vector<Index>> label_sets(std::span<const Sample> samples);
// images x C matrix of ground-truth labels.
Matrix truth_matrix(std::span<const Sample> samples);

}  // namespace iagcn
