#pragma once
// Network-refinement variant of the learner: conditioning units whose sources
// are SPNs, one target per unit, externalized negative conditioners, upstream
// subvariants, significance filtering and class prediction.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "varsel/spn.hpp"

namespace varsel {

struct MnrCsv {
    int32_t id = -1;
    bool alive = true;
    StatePolynetwork source;
    int32_t target_class = -1;  // exactly one of target_class / target_csv is set
    int32_t target_csv = -1;
    bool positive = true;       // suppressing conditioner when false
    bool unconditional = true;  // deactivates on the first wrong firing
    int depth = 0;              // conditioning distance from the class variable

    // Satisfaction statistics, updated on every evaluation.
    int64_t n_evaluated = 0;
    int64_t n_satisfied = 0;
    int64_t n_fired_correct = 0;  // fired with the modelled outcome present

    std::vector<int32_t> pos_conditioners;  // upstream subvariants targeting this unit
    std::vector<int32_t> neg_conditioners;  // suppressors targeting this unit

    double satisfaction_ratio() const {
        return n_evaluated == 0 ? 1.0
                                : static_cast<double>(n_satisfied) /
                                      static_cast<double>(n_evaluated);
    }
    double reliability() const {
        return n_satisfied == 0 ? 0.0
                                : static_cast<double>(n_fired_correct) /
                                      static_cast<double>(n_satisfied);
    }
};

struct ClassVariable {
    int label = -1;  // dataset class id
    int64_t incidences = 0;
};

struct MnrConfig {
    double t_ref = 0.05;
    double t_sign = 0.05;
    int population = 10;
    double distance_scale = 39.59797974644666;  // 28x28 image diagonal
    uint64_t seed = 1;
};

class MnrModel {
public:
    MnrModel(std::vector<int> class_labels, MnrConfig cfg = {});

    const MnrConfig& config() const { return cfg_; }
    const std::vector<ClassVariable>& classes() const { return classes_; }
    const std::vector<MnrCsv>& csvs() const { return csvs_; }
    const MnrCsv& csv(int32_t id) const { return csvs_.at(id); }
    const std::vector<int32_t>& class_conditioners(int class_slot) const {
        return class_pos_.at(class_slot);
    }
    int alive_count() const;
    int class_slot_of(int label) const;  // -1 when the label is not in the run

    // One exposure: the labelled class is active, the others inactive. All
    // class pathways are evaluated; satisfied ones are statistically refined,
    // wrong firings lose unconditionality and gain suppressors, unexplained
    // activations create a new conditioner, and insignificant conditioners
    // are filtered.
    void learn_sample(const StatePolynetwork& spn, int label);

    // Removes conditioners whose satisfaction ratio fell below t_sign,
    // together with their upstream chains.
    void filter_insignificant(double t_sign);

    // Per-class activation scores (max over positive-conditioner chains).
    std::vector<double> predict_scores(const StatePolynetwork& spn, std::mt19937_64& rng) const;
    // argmax class slot; -1 (abstention) when every score is zero.
    int predict(const StatePolynetwork& spn, std::mt19937_64& rng) const;

    std::string serialize() const;  // checkpoint via SPN serialization

private:
    struct EvalOutcome {
        bool satisfied = false;
        Assignment assignment;
    };
    EvalOutcome process_unit(int32_t ci, const StatePolynetwork& spn, bool root_active,
                             const Assignment* seed);
    double predict_unit(int32_t ci, const StatePolynetwork& spn, std::mt19937_64& rng,
                        const Assignment* seed) const;
    int32_t add_unit(MnrCsv unit);
    void remove_with_chain(int32_t ci);
    void check_keys(const StatePolynetwork& spn) const;

    MnrConfig cfg_;
    std::vector<ClassVariable> classes_;
    std::vector<std::vector<int32_t>> class_pos_;  // depth-0 conditioners per class slot
    std::vector<MnrCsv> csvs_;
    std::vector<std::string> keys_;  // fixed at the first sample
    std::mt19937_64 rng_;
};

}  // namespace varsel
