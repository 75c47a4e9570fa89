#pragma once

#include "iagcn/model.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace iagcn {

struct SgdOptions {
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double decay_factor = 0.1;  // multiplied into lr every `decay_every` epochs
    int decay_every = 100;
};

// SGD with heavy-ball momentum and L2 weight decay folded into the gradient:
//   v <- momentum * v + (g + weight_decay * w);  w <- w - lr * v
class SgdOptimizer {
public:
    explicit SgdOptimizer(SgdOptions options) : options_(options) {}

    void set_epoch(int epoch);
    double learning_rate() const { return lr_; }
    const SgdOptions& options() const { return options_; }

    void step(std::span<Tensor> params);

private:
    SgdOptions options_;
    double lr_ = options_.lr;
    std::vector<Matrix> velocity_;
};

struct TrainOptions {
    int epochs = 200;
    int batch_size = 16;
    SgdOptions sgd;
    std::uint64_t seed = 1;
};

// One forward/backward/update over `batch`; returns the mean loss. Epsilon is
// drawn from `rng` when variational weighting is on.
double train_step(ModelParams& params, std::span<const Sample> batch, const StatLcm& stat,
                  const ModelOptions& options, SgdOptimizer& optimizer, std::mt19937_64& rng);

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double mean_loss = 0.0;
};

// Thrown when a training step produces a non-finite loss.
class TrainingDiverged : public NonFiniteError {
public:
    TrainingDiverged(const NonFiniteError& cause, int epoch, std::size_t step);
    int epoch() const { return epoch_; }
    std::size_t step() const { return step_; }

private:
    int epoch_;
    std::size_t step_;
};

std::vector<EpochLog> train(ModelParams& params, std::span<const Sample> train_set, const StatLcm& stat,
                            const ModelOptions& options, const TrainOptions& train_options,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

// images x C matrix of fused logits under deterministic inference.
Matrix predict_scores(const ModelParams& params, std::span<const Sample> samples, const StatLcm& stat,
                      const ModelOptions& options);

}  // namespace iagcn
