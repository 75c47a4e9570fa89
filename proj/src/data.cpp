#include "iagcn/data.hpp"

#include <json.hpp>

#include <fstream>
#include <random>
#include <sstream>

namespace iagcn {

using nlohmann::json;

void DatasetSpec::validate() const {
    if (num_labels <= 0 || num_regions <= 0 || feature_dim <= 0)
        throw std::invalid_argument("DatasetSpec: label count, region count and feature dim must be positive");
    if (n_train < 0 || n_test < 0) throw std::invalid_argument("DatasetSpec: negative split size");
    if (prototypes.size() != 0 && (prototypes.rows() != num_labels || prototypes.cols() != feature_dim))
        throw DimensionError("DatasetSpec: prototypes are " + shape_string(prototypes) + ", expected " +
                             std::to_string(num_labels) + "x" + std::to_string(feature_dim));
    for (const auto& pair : pairs) {
        if (pair.first < 0 || pair.first >= num_labels || pair.second < 0 || pair.second >= num_labels ||
            pair.first == pair.second)
            throw std::invalid_argument("DatasetSpec: bad co-occurrence pair (" + std::to_string(pair.first) +
                                        ", " + std::to_string(pair.second) + ")");
        if (!(pair.probability >= 0.0 && pair.probability <= 1.0))
            throw std::invalid_argument("DatasetSpec: pair probability outside [0, 1]");
    }
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(base_rate) || !in_unit(background_rate))
        throw std::invalid_argument("DatasetSpec: base_rate and background_rate must lie in [0, 1]");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("DatasetSpec: noise_sigma must be >= 0");
}

Matrix make_prototypes(Index num_labels, Index feature_dim, double norm, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix raw(feature_dim, num_labels);
    for (Index j = 0; j < raw.cols(); ++j)
        for (Index i = 0; i < raw.rows(); ++i) raw(i, j) = gauss(rng);

    Matrix protos(num_labels, feature_dim);
    if (num_labels <= feature_dim) {
        Eigen::HouseholderQR<Matrix> qr(raw);
        Matrix q = qr.householderQ() * Matrix::Identity(feature_dim, num_labels);
        protos = q.transpose();
    } else {
        protos = raw.transpose();
        for (Index c = 0; c < num_labels; ++c) protos.row(c).normalize();
    }
    return protos * norm;
}

Dataset generate(const DatasetSpec& spec) {
    spec.validate();
    Dataset out;
    out.prototypes = spec.prototypes.size() != 0
                         ? spec.prototypes
                         : make_prototypes(spec.num_labels, spec.feature_dim, spec.prototype_norm, spec.seed);

    // Separate stream from the prototype draw so changing one never shifts the other.
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Index C = spec.num_labels;
    const Index D = spec.feature_dim;

    auto noise = [&](Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v(i) = spec.noise_sigma * gauss(rng);
        return v;
    };

    auto draw = [&]() {
        Sample s;
        s.y = Vector::Zero(C);
        for (Index c = 0; c < C; ++c)
            if (unit(rng) < spec.base_rate) s.y(c) = 1.0;
        // Fallback first so the pair coupling also sees the forced label.
        if (s.y.sum() == 0.0) s.y(std::uniform_int_distribution<Index>(0, C - 1)(rng)) = 1.0;
        for (const auto& pair : spec.pairs) {
            const bool a = s.y(pair.first) > 0.5;
            const bool b = s.y(pair.second) > 0.5;
            if (a != b && unit(rng) < pair.probability) {
                s.y(pair.first) = 1.0;
                s.y(pair.second) = 1.0;
            }
        }
        std::vector<Index> present;
        for (Index c = 0; c < C; ++c)
            if (s.y(c) > 0.5) present.push_back(c);

        Vector mean = Vector::Zero(D);
        for (Index c : present) mean += out.prototypes.row(c).transpose();
        mean /= static_cast<double>(present.size());
        s.x = mean + noise(D);

        std::uniform_int_distribution<std::size_t> pick(0, present.size() - 1);
        s.regions.resize(spec.num_regions, D);
        for (Index r = 0; r < spec.num_regions; ++r) {
            Vector row = noise(D);
            if (unit(rng) >= spec.background_rate) row += out.prototypes.row(present[pick(rng)]).transpose();
            s.regions.row(r) = row.transpose();
        }
        return s;
    };

    out.train.reserve(static_cast<std::size_t>(spec.n_train));
    for (Index k = 0; k < spec.n_train; ++k) out.train.push_back(draw());
    out.test.reserve(static_cast<std::size_t>(spec.n_test));
    for (Index k = 0; k < spec.n_test; ++k) out.test.push_back(draw());
    return out;
}

void save_dataset(const std::filesystem::path& path, std::span<const Sample> samples) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("save_dataset: cannot open " + path.string() + " for writing");
    for (const Sample& s : samples) {
        json record;
        std::vector<int> y(static_cast<std::size_t>(s.y.size()));
        for (Index i = 0; i < s.y.size(); ++i) y[static_cast<std::size_t>(i)] = s.y(i) > 0.5 ? 1 : 0;
        record["y"] = y;
        record["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
        json regions = json::array();
        for (Index r = 0; r < s.regions.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(s.regions.cols()));
            for (Index d = 0; d < s.regions.cols(); ++d) row[static_cast<std::size_t>(d)] = s.regions(r, d);
            regions.push_back(std::move(row));
        }
        record["regions"] = std::move(regions);
        file << record.dump() << '\n';
    }
    if (!file) throw std::runtime_error("save_dataset: write failed for " + path.string());
}

namespace {

Sample parse_sample(const std::string& line, std::size_t line_no) {
    auto fail = [line_no](const std::string& what) -> FormatError {
        return FormatError("line " + std::to_string(line_no) + ": " + what);
    };
    json record;
    try {
        record = json::parse(line);
    } catch (const json::parse_error& e) {
        throw fail(std::string("malformed JSON (") + e.what() + ")");
    }
    if (!record.is_object() || !record.contains("y") || !record.contains("x") || !record.contains("regions"))
        throw fail("record must have keys y, x, regions");
    Sample s;
    try {
        const auto y = record.at("y").get<std::vector<int>>();
        s.y.resize(static_cast<Index>(y.size()));
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] != 0 && y[i] != 1) throw fail("labels must be 0 or 1");
            s.y(static_cast<Index>(i)) = y[i];
        }
        const auto x = record.at("x").get<std::vector<double>>();
        s.x = Eigen::Map<const Vector>(x.data(), static_cast<Index>(x.size()));
        const auto regions = record.at("regions").get<std::vector<std::vector<double>>>();
        s.regions.resize(static_cast<Index>(regions.size()), s.x.size());
        for (std::size_t r = 0; r < regions.size(); ++r) {
            if (static_cast<Index>(regions[r].size()) != s.x.size())
                throw fail("region " + std::to_string(r) + " has " + std::to_string(regions[r].size()) +
                           " features, global feature has " + std::to_string(s.x.size()));
            for (std::size_t d = 0; d < regions[r].size(); ++d)
                s.regions(static_cast<Index>(r), static_cast<Index>(d)) = regions[r][d];
        }
    } catch (const json::exception& e) {
        throw fail(std::string("bad field type (") + e.what() + ")");
    }
    return s;
}

}  // namespace

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("load_dataset: cannot open " + path.string());
    std::vector<Sample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Sample s = parse_sample(line, line_no);
        if (!samples.empty()) {
            const Sample& first = samples.front();
            if (s.y.size() != first.y.size() || s.x.size() != first.x.size() ||
                s.regions.rows() != first.regions.rows())
                throw FormatError("line " + std::to_string(line_no) +
                                  ": shape differs from earlier records (C, D, N must be constant)");
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

Matrix make_embeddings(Index num_labels, Index dim, std::uint64_t seed) {
    if (num_labels <= 0 || dim <= 0) throw std::invalid_argument("make_embeddings: dimensions must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Matrix e(num_labels, dim);
    for (Index i = 0; i < num_labels; ++i)
        for (Index j = 0; j < dim; ++j) e(i, j) = unit(rng);
    return e;
}

Matrix load_embeddings_csv(const std::filesystem::path& path, Index num_labels, Index dim) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("load_embeddings_csv: cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(file, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw FormatError("load_embeddings_csv: row " + std::to_string(rows.size() + 1) +
                                  ": not a number '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (static_cast<Index>(rows.size()) != num_labels)
        throw DimensionError("load_embeddings_csv: expected " + std::to_string(num_labels) + " rows, found " +
                             std::to_string(rows.size()));
    Matrix e(num_labels, dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Index>(rows[i].size()) != dim)
            throw DimensionError("load_embeddings_csv: row " + std::to_string(i + 1) + " has " +
                                 std::to_string(rows[i].size()) + " columns, expected " + std::to_string(dim));
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            e(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return e;
}

std::vector<std::vector<Index>> label_sets(std::span<const Sample> samples) {
    std::vector<std::vector<Index>> sets;
    sets.reserve(samples.size());
    for (const Sample& s : samples) {
        std::vector<Index> labels;
        for (Index c = 0; c < s.y.size(); ++c)
            if (s.y(c) > 0.5) labels.push_back(c);
        sets.push_back(std::move(labels));
    }
    return sets;
}

Matrix truth_matrix(std::span<const Sample> samples) {
    if (samples.empty()) return Matrix();
    Matrix t(static_cast<Index>(samples.size()), samples.front().y.size());
    for (std::size_t k = 0; k < samples.size(); ++k) t.row(static_cast<Index>(k)) = samples[k].y.transpose();
    return t;
}

}  // namespace iagcn
