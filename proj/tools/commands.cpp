#include "commands.hpp"

#include "iagcn/pipeline.hpp"
#include "iagcn/training.hpp"

#include <spdlog/spdlog.h>

#include <array>
#include <charconv>
#include <fstream>

namespace iagcn::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

class CsvFile {
public:
    // Every output starts with the command name and the resolved config so a
    // file alone is enough to reproduce it.
    CsvFile(const fs::path& path, const std::string& command, const RunConfig& config) : path_(path), out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
        out_ << "# iagcn " << command << "\n# config: " << to_json(config).dump() << "\n";
    }
    ~CsvFile() { spdlog::debug("wrote {}", path_.string()); }

    template <typename... Cells>
    void row(const Cells&... cells) {
        std::size_t i = 0;
        ((out_ << (i++ ? "," : "") << cells), ...);
        out_ << "\n";
    }
    std::ofstream& stream() { return out_; }

    void close() {
        out_.close();
        if (!out_) throw std::runtime_error("write failed for " + path_.string());
    }

private:
    fs::path path_;
    std::ofstream out_;
};

void write_matrix(const fs::path& path, const std::string& command, const RunConfig& config, const Matrix& m) {
    CsvFile csv(path, command, config);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) csv.stream() << (j ? "," : "") << num(m(i, j));
        csv.stream() << "\n";
    }
    csv.close();
}

struct Splits {
    std::vector<Sample> train, test;
};

// Reads <dir>/train.jsonl and <dir>/test.jsonl, or generates from the spec when dir is empty.
Splits load_or_generate(const RunConfig& config, const fs::path& data_dir, bool need_train, bool need_test) {
    Splits s;
    if (data_dir.empty()) {
        spdlog::info("generating data from config (seed {})", config.dataset.seed);
        Dataset d = generate(config.dataset);
        s.train = std::move(d.train);
        s.test = std::move(d.test);
        return s;
    }
    auto read = [&](const char* name) {
        const fs::path p = data_dir / name;
        if (!fs::exists(p)) throw std::runtime_error("missing data file " + p.string());
        return load_dataset(p);
    };
    if (need_train) s.train = read("train.jsonl");
    if (need_test) s.test = read("test.jsonl");
    return s;
}

void write_metrics(const fs::path& out, const RunConfig& config, const MetricsReport& r) {
    CsvFile csv(out / "metrics.csv", "eval", config);
    csv.row("mAP", "CP", "CR", "CF1", "OP", "OR", "OF1");
    csv.row(num(r.mAP), num(r.CP), num(r.CR), num(r.CF1), num(r.OP), num(r.OR), num(r.OF1));
    csv.close();

    CsvFile ap(out / "per_label_ap.csv", "eval", config);
    ap.row("label", "ap");
    for (std::size_t c = 0; c < r.per_label_ap.size(); ++c)
        ap.row(c, r.per_label_ap[c] ? num(*r.per_label_ap[c]) : std::string("NA"));
    ap.close();
}

void log_epoch(const EpochLog& e, int total) {
    if ((e.epoch + 1) % 20 == 0 || e.epoch + 1 == total)
        spdlog::info("epoch {}/{} lr {} loss {:.6f}", e.epoch + 1, total, e.lr, e.mean_loss);
    else
        spdlog::debug("epoch {}/{} lr {} loss {:.6f}", e.epoch + 1, total, e.lr, e.mean_loss);
}

}  // namespace

RunConfig resolve_config(const CommonOptions& common) {
    RunConfig c = common.config_path.empty() ? RunConfig{} : load_config(common.config_path);
    if (common.seed) c.seed = *common.seed;
    if (common.ablation) c.ablation = Ablation::level(*common.ablation);
    c.validate();
    return c;
}

void cmd_gendata(const CommonOptions& common) {
    const RunConfig config = resolve_config(common);
    fs::create_directories(common.out);
    const Dataset d = generate(config.dataset);
    save_dataset(common.out / "train.jsonl", d.train);
    save_dataset(common.out / "test.jsonl", d.test);

    DatasetSpec echoed = config.dataset;
    echoed.prototypes = d.prototypes;
    std::ofstream spec(common.out / "dataset.json");
    spec << to_json(echoed).dump(2) << "\n";
    if (!spec) throw std::runtime_error("write failed for " + (common.out / "dataset.json").string());

    write_matrix(common.out / "embeddings.csv", "gendata", config, embeddings_for(config));
    spdlog::info("wrote {} train / {} test samples to {}", d.train.size(), d.test.size(), common.out.string());
}

void cmd_train(const CommonOptions& common, const fs::path& data_dir) {
    const RunConfig config = resolve_config(common);
    const Splits data = load_or_generate(config, data_dir, true, false);
    fs::create_directories(common.out);

    spdlog::info("training {} for {} epochs on {} samples", config.ablation.label(), config.epochs,
                 data.train.size());
    std::vector<EpochLog> history;
    const Checkpoint ckpt = fit(config, data.train, [&](const EpochLog& e) {
        history.push_back(e);
        log_epoch(e, config.epochs);
    });
    save_checkpoint(common.out / "checkpoint.json", ckpt);

    CsvFile loss(common.out / "loss.csv", "train", config);
    loss.row("epoch", "lr", "mean_loss");
    for (const EpochLog& e : history) loss.row(e.epoch, num(e.lr), num(e.mean_loss));
    loss.close();
    spdlog::info("wrote {}", (common.out / "checkpoint.json").string());
}

void cmd_eval(const CommonOptions& common, const fs::path& checkpoint, const fs::path& data_dir, bool dump_z) {
    if (!fs::exists(checkpoint)) throw std::runtime_error("missing checkpoint " + checkpoint.string());
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const Splits data = load_or_generate(ckpt.config, data_dir, false, true);
    fs::create_directories(common.out);

    const MetricsReport r = evaluate(ckpt, data.test);
    write_metrics(common.out, ckpt.config, r);
    spdlog::info("mAP {:.4f} CF1 {:.4f} OF1 {:.4f}", r.mAP, r.CF1, r.OF1);

    if (dump_z) {
        const ModelOptions options = ckpt.config.model_options();
        CsvFile z(common.out / "region_weights.csv", "eval", ckpt.config);
        z.row("image", "region", "z_mu", "z_logvar", "z");
        NoGradGuard no_grad;
        for (std::size_t k = 0; k < data.test.size(); ++k) {
            const Sample& s = data.test[k];
            const RegionEncoding enc = encode(Tensor(s.regions), ckpt.params.variational);
            const Scores scores = predict(ckpt.params, s, ckpt.stat, options);
            for (Index i = 0; i < s.regions.rows(); ++i)
                z.row(k, i, num(enc.z_mu.value()(i, 0)), num(enc.z_logvar.value()(i, 0)), num(scores.z(i)));
        }
        z.close();
    }
}

void cmd_ablate(const CommonOptions& common, const fs::path& data_dir) {
    RunConfig config = resolve_config(common);
    const Splits data = load_or_generate(config, data_dir, true, true);
    fs::create_directories(common.out);

    CsvFile csv(common.out / "ablation.csv", "ablate", config);
    csv.row("model", "mAP", "CP", "CR", "CF1", "OP", "OR", "OF1");
    for (const char* level : {"base", "id_lcm", "var_inf", "com_sco"}) {
        config.ablation = Ablation::level(level);
        spdlog::info("ablation row {}", config.ablation.label());
        const Checkpoint ckpt = fit(config, data.train, [&](const EpochLog& e) { log_epoch(e, config.epochs); });
        const MetricsReport r = evaluate(ckpt, data.test);
        spdlog::info("{}: mAP {:.4f}", config.ablation.label(), r.mAP);
        csv.row(config.ablation.label(), num(r.mAP), num(r.CP), num(r.CR), num(r.CF1), num(r.OP), num(r.OR),
                num(r.OF1));
    }
    csv.close();
}

void cmd_inspect_lcm(const CommonOptions& common, const fs::path& checkpoint, const fs::path& data_dir,
                     const std::vector<std::size_t>& samples) {
    fs::create_directories(common.out);
    if (checkpoint.empty()) {
        // Statistical LCM only: no trained scorer to build per-image matrices from.
        const RunConfig config = resolve_config(common);
        const Splits data = load_or_generate(config, data_dir, true, false);
        check_samples(data.train, config, "train");
        const StatLcm stat =
            build_statistical_lcm(label_sets(data.train), config.dataset.num_labels, config.tau, config.p);
        write_matrix(common.out / "cond_prob.csv", "inspect-lcm", config, stat.cond_prob);
        write_matrix(common.out / "binarized.csv", "inspect-lcm", config, stat.binarized);
        return;
    }

    if (!fs::exists(checkpoint)) throw std::runtime_error("missing checkpoint " + checkpoint.string());
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const RunConfig& config = ckpt.config;
    write_matrix(common.out / "cond_prob.csv", "inspect-lcm", config, ckpt.stat.cond_prob);
    write_matrix(common.out / "binarized.csv", "inspect-lcm", config, ckpt.stat.binarized);

    const Splits data = load_or_generate(config, data_dir, false, true);
    check_samples(data.test, config, "test");
    const ModelOptions options = config.model_options();
    for (std::size_t k : samples) {
        if (k >= data.test.size())
            throw std::out_of_range("sample " + std::to_string(k) + " out of range, test split has " +
                                    std::to_string(data.test.size()));
        const Scores s = predict(ckpt.params, data.test[k], ckpt.stat, options);
        if (s.individual_lcm.size() == 0 || s.fused_lcm.size() == 0) {
            spdlog::warn("ablation {} builds no per-image LCM; only the statistical LCM was written",
                         config.ablation.label());
            return;
        }
        const std::string suffix = "_" + std::to_string(k) + ".csv";
        write_matrix(common.out / ("A_I" + suffix), "inspect-lcm", config, s.individual_lcm);
        write_matrix(common.out / ("A_F" + suffix), "inspect-lcm", config, s.fused_lcm);
    }
}

}  // namespace iagcn::cli
