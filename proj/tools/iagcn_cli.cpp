#include "commands.hpp"

#include "iagcn/training.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

// IAGCN_LOG_LEVEL: trace, debug, info (default), warn, error, off.
void setup_logging() {
    auto logger = spdlog::stderr_logger_st("iagcn");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* level = std::getenv("IAGCN_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(level));
}

void add_common(CLI::App* sub, iagcn::cli::CommonOptions& common, bool with_ablation) {
    sub->add_option("--config", common.config_path, "JSON run config (defaults when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Overrides the config's run seed");
    if (with_ablation)
        sub->add_option("--ablation", common.ablation, "Cumulative ablation level")
            ->check(CLI::IsMember({"base", "id_lcm", "var_inf", "com_sco"}));
    sub->add_option("--out", common.out, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    namespace cli = iagcn::cli;

    CLI::App app{"Instance-aware GCN multi-label classifier on synthetic region features"};
    app.require_subcommand(1);

    cli::CommonOptions common;
    std::filesystem::path data_dir, checkpoint;
    bool dump_z = false;
    std::vector<std::size_t> samples{0};

    auto* gendata = app.add_subcommand("gendata", "Generate train/test JSONL splits and embeddings");
    add_common(gendata, common, false);

    auto* train = app.add_subcommand("train", "Train a model and write checkpoint.json and loss.csv");
    add_common(train, common, true);
    train->add_option("--data", data_dir, "Directory with train.jsonl (generated from config when omitted)");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint written by train")->required();
    eval->add_option("--data", data_dir, "Directory with test.jsonl (regenerated from the checkpoint config when omitted)");
    eval->add_option("--out", common.out, "Output directory")->capture_default_str();
    eval->add_flag("--dump-z", dump_z, "Also write region_weights.csv with per-region z");

    auto* ablate = app.add_subcommand("ablate", "Train and evaluate the four cumulative ablation rows");
    add_common(ablate, common, false);
    ablate->add_option("--data", data_dir, "Directory with train.jsonl and test.jsonl");

    auto* inspect = app.add_subcommand("inspect-lcm", "Dump statistical, individual and fused LCMs as CSV");
    add_common(inspect, common, false);
    inspect->add_option("--checkpoint", checkpoint, "Checkpoint; without it only the statistical LCM is written");
    inspect->add_option("--data", data_dir, "Data directory");
    inspect->add_option("--samples", samples, "Test-sample indices for A_I / A_F dumps")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gendata) cli::cmd_gendata(common);
        if (*train) cli::cmd_train(common, data_dir);
        if (*eval) cli::cmd_eval(common, checkpoint, data_dir, dump_z);
        if (*ablate) cli::cmd_ablate(common, data_dir);
        if (*inspect) cli::cmd_inspect_lcm(common, checkpoint, data_dir, samples);
    } catch (const iagcn::TrainingDiverged& e) {
        spdlog::error("training diverged at epoch {} step {} ({}): {}", e.epoch(), e.step(), e.tensor_name(),
                      e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
