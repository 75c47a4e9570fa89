#pragma once

// End-to-end glue shared by the command line tool and the acceptance runs:
// config + data -> trained checkpoint -> metrics.

#include "iagcn/checkpoint.hpp"
#include "iagcn/config.hpp"
#include "iagcn/metrics.hpp"

#include <functional>
#include <span>

namespace iagcn {

// Seeded uniform embeddings, or the CSV named by config.embeddings_path.
Matrix embeddings_for(const RunConfig& config);

// Checks that every sample matches the config's C, N and D.
void check_samples(std::span<const Sample> samples, const RunConfig& config, const std::string& what);

// Builds the statistical LCM from `train_set`, initializes from config.seed and trains.
Checkpoint fit(const RunConfig& config, std::span<const Sample> train_set,
               const std::function<void(const EpochLog&)>& on_epoch = {});

// Untrained model with the same construction as fit (epochs = 0).
Checkpoint untrained(const RunConfig& config, std::span<const Sample> train_set);

MetricsReport evaluate(const Checkpoint& checkpoint, std::span<const Sample> test_set);

}  // namespace iagcn
