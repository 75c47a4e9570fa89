#pragma once

// Per-region scaling factors drawn by Gaussian reparameterization, and the
// KL regularizer pulling each region's posterior toward N(0, 1).

#include "iagcn/tensor.hpp"

namespace iagcn {

struct VariationalParams {
    Tensor w_mu;      // D x 1
    Tensor w_logvar;  // D x 1, linear map producing log-variance
};

struct RegionEncoding {
    Tensor z_mu;      // N x 1
    Tensor z_logvar;  // N x 1
};

struct RegionWeights {
    Tensor z_mu;
    Tensor z_logvar;
    Vector epsilon;
    Tensor z;
};

RegionEncoding encode(const Tensor& regions, const VariationalParams& params);

// z = mu + exp(0.5 * logvar) * epsilon; epsilon is treated as a constant.
Tensor sample_z(const Tensor& z_mu, const Tensor& z_logvar, const Vector& epsilon);

RegionWeights weigh(const Tensor& regions, const VariationalParams& params, const Vector& epsilon);

// Row i of the regions scaled by z_i.
Tensor weight_regions(const Tensor& regions, const Tensor& z);

// Mean over regions of KL(N(mu_i, exp(logvar_i)) || N(0, 1)).
Tensor kl_loss(const Tensor& z_mu, const Tensor& z_logvar);

}  // namespace iagcn
