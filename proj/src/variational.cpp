#include "iagcn/variational.hpp"

namespace iagcn {

RegionEncoding encode(const Tensor& regions, const VariationalParams& params) {
    if (params.w_mu.rows() != regions.cols() || params.w_mu.cols() != 1 ||
        params.w_logvar.rows() != regions.cols() || params.w_logvar.cols() != 1)
        throw DimensionError("encode: regions " + regions.shape() + ", w_mu " + params.w_mu.shape() +
                             ", w_logvar " + params.w_logvar.shape());
    return {matmul(regions, params.w_mu), matmul(regions, params.w_logvar)};
}

Tensor sample_z(const Tensor& z_mu, const Tensor& z_logvar, const Vector& epsilon) {
    if (z_mu.size() != z_logvar.size() || z_mu.size() != epsilon.size())
        throw DimensionError("sample_z: z_mu " + z_mu.shape() + ", z_logvar " + z_logvar.shape() +
                             ", epsilon length " + std::to_string(epsilon.size()));
    Matrix eps = Eigen::Map<const Matrix>(epsilon.data(), z_mu.rows(), z_mu.cols());
    Tensor sigma = exp(scale(z_logvar, 0.5));
    return add(z_mu, hadamard(sigma, Tensor(std::move(eps))));
}

RegionWeights weigh(const Tensor& regions, const VariationalParams& params, const Vector& epsilon) {
    RegionEncoding enc = encode(regions, params);
    Tensor z = sample_z(enc.z_mu, enc.z_logvar, epsilon);
    return {std::move(enc.z_mu), std::move(enc.z_logvar), epsilon, std::move(z)};
}

Tensor weight_regions(const Tensor& regions, const Tensor& z) {
    return scale_rows(regions, z);
}

Tensor kl_loss(const Tensor& z_mu, const Tensor& z_logvar) {
    if (z_mu.rows() != z_logvar.rows() || z_mu.cols() != z_logvar.cols())
        throw DimensionError("kl_loss: z_mu " + z_mu.shape() + " vs z_logvar " + z_logvar.shape());
    // 0.5 * (mu^2 + exp(logvar) - logvar - 1), averaged over regions. expm1 keeps
    // every term >= 0 under rounding.
    Tensor terms = sub(add(hadamard(z_mu, z_mu), expm1(z_logvar)), z_logvar);
    return scale(mean(terms), 0.5);
}

}  // namespace iagcn
