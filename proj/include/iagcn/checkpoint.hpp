#pragma once

// Versioned JSON checkpoint: config, statistical LCM, frozen embeddings and
// every parameter tensor with its shape. Doubles are written in shortest
// round-trip form, so save -> load is bit-exact.

#include "iagcn/config.hpp"
#include "iagcn/lcm.hpp"
#include "iagcn/model.hpp"

#include <filesystem>

namespace iagcn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    RunConfig config;
    StatLcm stat;
    ModelParams params;
};

nlohmann::json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace iagcn
