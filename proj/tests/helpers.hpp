#pragma once

#include "iagcn/tensor.hpp"

#include <functional>
#include <random>

namespace test {

using iagcn::Index;
using iagcn::Matrix;

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

// Central-difference gradient of a scalar function of one matrix, written
// independently of the library's grad_check.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h = 1e-6) {
    Matrix g(x.rows(), x.cols());
    Matrix probe = x;
    for (Index k = 0; k < x.size(); ++k) {
        const double orig = probe.data()[k];
        probe.data()[k] = orig + h;
        const double up = f(probe);
        probe.data()[k] = orig - h;
        const double down = f(probe);
        probe.data()[k] = orig;
        g.data()[k] = (up - down) / (2.0 * h);
    }
    return g;
}

inline double max_rel_error(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (Index k = 0; k < a.size(); ++k) {
        const double den = std::max({std::abs(a.data()[k]), std::abs(b.data()[k]), 1e-8});
        worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]) / den);
    }
    return worst;
}

}  // namespace test
