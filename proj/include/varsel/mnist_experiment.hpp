#pragma once
// Class-incremental MNIST experiment: per run, randomly chosen classes are
// presented cycle by cycle (one learning step per sample), with per-class
// accuracy evaluated after every iteration.

#include <cstdint>
#include <string>
#include <vector>

#include "varsel/metrics.hpp"
#include "varsel/mnr.hpp"
#include "varsel/vision.hpp"

namespace varsel {

struct MnistRunConfig {
    int n_classes = 3;
    int n_sample = 20;  // training samples per class per cycle (fresh each cycle)
    int test_per_class = 50;
    int cycles = 10;
    double binarize_threshold = 0.5;
    double epsilon_fraction = 0.01;
    MnrConfig mnr;

    // Paper defaults scale with the class count.
    static MnistRunConfig for_classes(int n_classes);
};

struct MnistRunResult {
    std::vector<int> chosen_labels;
    // accuracy[cycle][iteration][class_slot], evaluated on held-out samples
    std::vector<std::vector<std::vector<double>>> accuracy;
    int final_alive_units = 0;

    double final_mean_accuracy() const;
};

// Expected dataset location under the data directory; missing files raise an
// error naming both paths.
std::pair<std::string, std::string> mnist_paths(const std::string& data_dir);
MnistDataset load_mnist_from_dir(const std::string& data_dir);

MnistRunResult run_mnist_trial(const MnistDataset& ds, const MnistRunConfig& cfg, uint64_t seed);

std::vector<MetricRecord> mnist_metrics(const MnistRunResult& r, int trial);

}  // namespace varsel
