#pragma once

#include "iagcn/config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace iagcn::cli {

struct CommonOptions {
    std::string config_path;  // empty: built-in defaults
    std::optional<std::uint64_t> seed;
    std::optional<std::string> ablation;
    std::filesystem::path out = ".";
};

// Defaults <- config file <- --seed / --ablation.
RunConfig resolve_config(const CommonOptions& common);

void cmd_gendata(const CommonOptions& common);
void cmd_train(const CommonOptions& common, const std::filesystem::path& data_dir);
void cmd_eval(const CommonOptions& common, const std::filesystem::path& checkpoint,
              const std::filesystem::path& data_dir, bool dump_z);
void cmd_ablate(const CommonOptions& common, const std::filesystem::path& data_dir);
void cmd_inspect_lcm(const CommonOptions& common, const std::filesystem::path& checkpoint,
                     const std::filesystem::path& data_dir, const std::vector<std::size_t>& samples);

}  // namespace iagcn::cli
