#pragma once

// Small random models for gradient and structural tests.

#include "helpers.hpp"

#include "iagcn/model.hpp"

namespace test {

struct SmallProblem {
    iagcn::ModelParams params;
    iagcn::StatLcm stat;
    iagcn::Sample sample;
    iagcn::Vector epsilon;
};

inline SmallProblem small_problem(std::uint64_t seed, Index C = 4, Index N = 5, Index D = 6) {
    using namespace iagcn;
    std::mt19937_64 rng(seed);
    ModelDims dims;
    dims.num_labels = C;
    dims.feature_dim = D;
    dims.embed_dim = 3;
    dims.label_widths = {5, D};
    dims.region_widths = {4, 3};

    SmallProblem p;
    p.params = init_params(dims, random_matrix(rng, C, dims.embed_dim), seed);
    // Larger than default scale so relu units are active and gradients generic.
    for (Tensor t : p.params.parameters()) t.mutable_value() *= 2.0;

    std::vector<std::vector<Index>> sets(12);
    for (auto& s : sets)
        for (Index c = 0; c < C; ++c)
            if (rng() % 2) s.push_back(c);
    sets.push_back({0, 1});
    p.stat = build_statistical_lcm(sets, C, 0.4, 0.2);

    p.sample.x = random_matrix(rng, D, 1);
    p.sample.regions = random_matrix(rng, N, D);
    p.sample.y = Vector::Zero(C);
    for (Index c = 0; c < C; ++c) p.sample.y(c) = static_cast<double>(rng() % 2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    p.epsilon = Vector(N);
    for (Index i = 0; i < N; ++i) p.epsilon(i) = gauss(rng);
    return p;
}

}  // namespace test
