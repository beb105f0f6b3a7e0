#include "varsel/mnist_experiment.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace varsel {

MnistRunConfig MnistRunConfig::for_classes(int n_classes) {
    MnistRunConfig cfg;
    cfg.n_classes = n_classes;
    if (n_classes <= 3) {
        cfg.n_sample = 20;
        cfg.test_per_class = 50;
    } else if (n_classes <= 5) {
        cfg.n_sample = 10;
        cfg.test_per_class = 20;
    } else {
        cfg.n_sample = 5;
        cfg.test_per_class = 10;
    }
    return cfg;
}

double MnistRunResult::final_mean_accuracy() const {
    if (accuracy.empty() || accuracy.back().empty()) return 0.0;
    const auto& last = accuracy.back().back();
    return std::accumulate(last.begin(), last.end(), 0.0) / static_cast<double>(last.size());
}

std::pair<std::string, std::string> mnist_paths(const std::string& data_dir) {
    return {data_dir + "/mnist/train-images-idx3-ubyte",
            data_dir + "/mnist/train-labels-idx1-ubyte"};
}

MnistDataset load_mnist_from_dir(const std::string& data_dir) {
    auto [images, labels] = mnist_paths(data_dir);
    try {
        return load_mnist(images, labels);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("MNIST dataset unavailable (") + e.what() +
                                 "); expected " + images + " and " + labels +
                                 " — set VARSEL_DATA_DIR to the directory containing mnist/");
    }
}

MnistRunResult run_mnist_trial(const MnistDataset& ds, const MnistRunConfig& cfg, uint64_t seed) {
    if (cfg.n_classes < 2) throw std::invalid_argument("need at least two classes");
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull);

    // Classes present in the dataset, sampled without replacement.
    std::vector<int> labels_present;
    for (int l = 0; l <= 9; ++l)
        if (std::count(ds.labels.begin(), ds.labels.end(), l) > 0) labels_present.push_back(l);
    if (static_cast<int>(labels_present.size()) < cfg.n_classes)
        throw std::runtime_error("dataset has fewer classes than requested");
    std::shuffle(labels_present.begin(), labels_present.end(), rng);
    std::vector<int> chosen(labels_present.begin(), labels_present.begin() + cfg.n_classes);

    const int need_train = cfg.cycles * cfg.n_sample;
    std::vector<std::vector<StatePolynetwork>> train_spns(cfg.n_classes),
        test_spns(cfg.n_classes);
    for (int c = 0; c < cfg.n_classes; ++c) {
        std::vector<size_t> pool;
        for (size_t i = 0; i < ds.labels.size(); ++i)
            if (ds.labels[i] == chosen[c]) pool.push_back(i);
        if (static_cast<int>(pool.size()) < need_train + cfg.test_per_class)
            throw std::runtime_error("not enough samples of class " + std::to_string(chosen[c]));
        std::shuffle(pool.begin(), pool.end(), rng);
        for (int i = 0; i < need_train; ++i)
            train_spns[c].push_back(image_to_spn(ds.images[pool[i]], ds.cols, ds.rows,
                                                 cfg.binarize_threshold, cfg.epsilon_fraction));
        for (int i = 0; i < cfg.test_per_class; ++i)
            test_spns[c].push_back(image_to_spn(ds.images[pool[need_train + i]], ds.cols,
                                                ds.rows, cfg.binarize_threshold,
                                                cfg.epsilon_fraction));
    }

    MnrConfig mnr_cfg = cfg.mnr;
    mnr_cfg.seed = seed * 0xBF58476D1CE4E5B9ull + 1;
    MnrModel model(chosen, mnr_cfg);

    MnistRunResult result;
    result.chosen_labels = chosen;
    result.accuracy.resize(cfg.cycles);

    for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
        for (int it = 0; it < cfg.n_classes; ++it) {
            for (int s = 0; s < cfg.n_sample; ++s)
                model.learn_sample(train_spns[it][cycle * cfg.n_sample + s], chosen[it]);

            std::vector<double> accs(cfg.n_classes, 0.0);
            std::mt19937_64 eval_rng(seed * 0x94D049BB133111EBull + cycle * 131 + it);
            for (int d = 0; d < cfg.n_classes; ++d) {
                int correct = 0;
                for (const auto& spn : test_spns[d])
                    if (model.predict(spn, eval_rng) == d) ++correct;
                accs[d] = static_cast<double>(correct) /
                          static_cast<double>(cfg.test_per_class);
            }
            result.accuracy[cycle].push_back(std::move(accs));
        }
    }
    result.final_alive_units = model.alive_count();
    return result;
}

std::vector<MetricRecord> mnist_metrics(const MnistRunResult& r, int trial) {
    std::vector<MetricRecord> out;
    for (size_t cycle = 0; cycle < r.accuracy.size(); ++cycle)
        for (size_t it = 0; it < r.accuracy[cycle].size(); ++it)
            for (size_t d = 0; d < r.accuracy[cycle][it].size(); ++d)
                out.push_back({trial, static_cast<int>(cycle), static_cast<int>(it),
                               "accuracy_class" + std::to_string(d),
                               r.accuracy[cycle][it][d]});
    out.push_back({trial, static_cast<int>(r.accuracy.size()) - 1, 0, "final_mean_accuracy",
                   r.final_mean_accuracy()});
    out.push_back({trial, static_cast<int>(r.accuracy.size()) - 1, 0, "alive_units",
                   static_cast<double>(r.final_alive_units)});
    return out;
}

}  // namespace varsel
