#include "iagcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace iagcn {

void SgdOptimizer::set_epoch(int epoch) {
    const int intervals = options_.decay_every > 0 ? epoch / options_.decay_every : 0;
    lr_ = options_.lr * std::pow(options_.decay_factor, intervals);
}

void SgdOptimizer::step(std::span<Tensor> params) {
    if (velocity_.empty())
        for (const Tensor& p : params) velocity_.push_back(Matrix::Zero(p.rows(), p.cols()));
    if (velocity_.size() != params.size())
        throw std::logic_error("SgdOptimizer: parameter list changed between steps");
    for (std::size_t k = 0; k < params.size(); ++k) {
        Matrix& w = params[k].mutable_value();
        Matrix& v = velocity_[k];
        v = options_.momentum * v + params[k].grad() + options_.weight_decay * w;
        w -= lr_ * v;
    }
}

TrainingDiverged::TrainingDiverged(const NonFiniteError& cause, int epoch, std::size_t step)
    : NonFiniteError(cause.tensor_name(), std::string(cause.what()) + " at epoch " + std::to_string(epoch) +
                                              ", step " + std::to_string(step)),
      epoch_(epoch),
      step_(step) {}

double train_step(ModelParams& params, std::span<const Sample> batch, const StatLcm& stat,
                  const ModelOptions& options, SgdOptimizer& optimizer, std::mt19937_64& rng) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    params.zero_grad();
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double share = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const Sample& sample : batch) {
        std::optional<Vector> eps;
        if (options.ablation.var_inf) {
            eps = Vector(sample.regions.rows());
            for (Index i = 0; i < eps->size(); ++i) (*eps)(i) = gauss(rng);
        }
        ForwardPass pass = forward(params, sample, stat, options, eps);
        if (!std::isfinite(pass.loss.item())) {
            check_finite(pass, params);
            throw NonFiniteError("loss", "non-finite values in 'loss'");
        }
        total += pass.loss.item();
        backward(scale(pass.loss, share));
    }
    std::vector<Tensor> tensors = params.parameters();
    optimizer.step(tensors);
    return total * share;
}

std::vector<EpochLog> train(ModelParams& params, std::span<const Sample> train_set, const StatLcm& stat,
                            const ModelOptions& options, const TrainOptions& train_options,
                            const std::function<void(const EpochLog&)>& on_epoch) {
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    if (train_options.batch_size <= 0) throw std::invalid_argument("train: batch size must be positive");
    std::mt19937_64 rng(train_options.seed);
    SgdOptimizer optimizer(train_options.sgd);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Sample> batch;
    std::vector<EpochLog> log;
    std::size_t step = 0;

    for (int epoch = 0; epoch < train_options.epochs; ++epoch) {
        optimizer.set_epoch(epoch);
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(train_options.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(train_options.batch_size));
            batch.clear();
            for (std::size_t k = start; k < end; ++k) batch.push_back(train_set[order[k]]);
            try {
                loss_sum += train_step(params, batch, stat, options, optimizer, rng);
            } catch (const NonFiniteError& e) {
                throw TrainingDiverged(e, epoch, step);
            }
            ++batches;
            ++step;
        }
        EpochLog entry{epoch, optimizer.learning_rate(), loss_sum / static_cast<double>(batches)};
        log.push_back(entry);
        if (on_epoch) on_epoch(entry);
    }
    return log;
}

Matrix predict_scores(const ModelParams& params, std::span<const Sample> samples, const StatLcm& stat,
                      const ModelOptions& options) {
    Matrix out(static_cast<Index>(samples.size()), params.embeddings.rows());
    for (std::size_t k = 0; k < samples.size(); ++k)
        out.row(static_cast<Index>(k)) = predict(params, samples[k], stat, options).y_hat_f.transpose();
    return out;
}

}  // namespace iagcn
