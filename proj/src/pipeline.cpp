#include "iagcn/pipeline.hpp"

#include "iagcn/training.hpp"

namespace iagcn {

Matrix embeddings_for(const RunConfig& config) {
    if (!config.embeddings_path.empty())
        return load_embeddings_csv(config.embeddings_path, config.dataset.num_labels, config.embed_dim);
    return make_embeddings(config.dataset.num_labels, config.embed_dim, config.seed);
}

void check_samples(std::span<const Sample> samples, const RunConfig& config, const std::string& what) {
    const DatasetSpec& d = config.dataset;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Sample& s = samples[k];
        if (s.y.size() != d.num_labels || s.x.size() != d.feature_dim || s.regions.rows() != d.num_regions ||
            s.regions.cols() != d.feature_dim)
            throw DimensionError(what + " sample " + std::to_string(k) + " has C=" + std::to_string(s.y.size()) +
                                 " N=" + std::to_string(s.regions.rows()) + " D=" + std::to_string(s.x.size()) +
                                 ", config expects C=" + std::to_string(d.num_labels) +
                                 " N=" + std::to_string(d.num_regions) + " D=" + std::to_string(d.feature_dim));
    }
}

Checkpoint untrained(const RunConfig& config, std::span<const Sample> train_set) {
    config.validate();
    check_samples(train_set, config, "train");
    const auto sets = label_sets(train_set);
    Checkpoint c{config, build_statistical_lcm(sets, config.dataset.num_labels, config.tau, config.p),
                 init_params(config.dims(), embeddings_for(config), config.seed)};
    return c;
}

Checkpoint fit(const RunConfig& config, std::span<const Sample> train_set,
               const std::function<void(const EpochLog&)>& on_epoch) {
    Checkpoint c = untrained(config, train_set);
    train(c.params, train_set, c.stat, config.model_options(), config.train_options(), on_epoch);
    return c;
}

MetricsReport evaluate(const Checkpoint& checkpoint, std::span<const Sample> test_set) {
    check_samples(test_set, checkpoint.config, "test");
    const Matrix scores = predict_scores(checkpoint.params, test_set, checkpoint.stat, checkpoint.config.model_options());
    return evaluate_metrics(scores, truth_matrix(test_set), checkpoint.config.threshold);
}

}  // namespace iagcn
