#pragma once
// Per-step adaptation loop: DSV deduction, CSV state computation with source
// refinement, target separation, one-time negative-connection formation,
// explanatory CSV generation, and end-of-step model refinement.

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "varsel/sv_core.hpp"

namespace varsel {

enum class EventKind : int8_t {
    CsvCreated,
    PosRefined,
    NegRefined,
    NegFormed,
    Duplicated,
    FlagChanged,
    CsvRemoved,
};

struct StepEvent {
    EventKind kind;
    SvRef sv;            // the CSV (or DSV for flag changes) concerned
    int32_t aux = -1;    // duplicate/merge partner where applicable
    auto operator<=>(const StepEvent&) const = default;
};

struct StepRecord {
    int64_t step_index = 0;
    std::vector<StepEvent> events;
    // Optional full state snapshots (enabled via LearnerConfig::record_step_states).
    std::vector<std::pair<SvRef, SvState>> states_before;
    std::vector<std::pair<SvRef, SvState>> states_after;

    bool has_event_on(EventKind k, SvRef sv) const;
};

// One exposure of a CSV: previous states of all its sources and current
// states of all its targets, with keys fixed at recording time.
struct Instance {
    int64_t step = 0;  // learning step at which the exposure was recorded
    std::vector<std::pair<SvRef, SvState>> source_states;  // sorted by ref
    std::vector<std::pair<SvRef, SvState>> target_states;  // sorted by ref
};

// The response-relevant part of a CSV (everything replay needs).
struct CsvShape {
    RefSet pos_sources;
    RefSet neg_sources;
    RefSet targets;
};

struct LearnerConfig {
    // Alg.-2-line-9 variant: state Active when targets are inactive but not
    // all positive sources fired. Default follows the prose (Unobserved).
    bool partial_sources_active_state = false;
    bool nce_filtering = false;
    double nce_cutoff = 0.25;
    int instance_ring = 256;   // 0 disables instance logging
    bool record_step_states = false;
};

class Learner {
public:
    explicit Learner(LearnerConfig cfg = {}) : cfg_(cfg) {}

    const LearnerConfig& config() const { return cfg_; }

    // Full learning step: assign BSV states, deduce DSVs, compute CSV states
    // over reversed computation levels (with refinements/duplication/negative
    // formation), collect unexplained actives, generate at most one
    // explanatory CSV, then refine the model (duplicate merge + empty-CSV
    // removal) and rebuild levels.
    StepRecord process_environment_step(
        Model& m, const std::vector<std::pair<int32_t, SvState>>& observations,
        const std::vector<std::pair<int32_t, SvState>>& actions = {});

    // Split-phase stepping for agent loops: after begin_step the BSV and DSV
    // states are current, so a planner can choose the action that then enters
    // the same step's sources.
    void begin_step(Model& m, const std::vector<std::pair<int32_t, SvState>>& observations);
    void set_actions(Model& m, const std::vector<std::pair<int32_t, SvState>>& actions);
    StepRecord finish_step(Model& m);

    // State computation only, no mutation of structure, flags or statistics.
    // Used when learning is disabled.
    void observe_frozen(Model& m,
                        const std::vector<std::pair<int32_t, SvState>>& observations,
                        const std::vector<std::pair<int32_t, SvState>>& actions = {});
    void finish_frozen(Model& m);

    // Logged instances per CSV (test-harness facility; the algorithm itself
    // never reads these).
    const std::deque<Instance>& instances(int32_t csv_idx) const;

    int64_t steps_processed() const { return step_index_; }

private:
    // Alg.-2 state computation for one CSV; may split it (heterogeneous
    // targets) in which case the replacement indices are processed instead.
    void compute_csv_state(Model& m, int32_t ci, StepRecord& rec);
    void apply_csv_state_rules(Model& m, int32_t ci, bool satisfied_entry, StepRecord& rec);
    std::pair<int32_t, int32_t> separate_targets(Model& m, int32_t ci, StepRecord& rec);
    void form_negative_connections(Model& m, int32_t ci, StepRecord& rec);
    int32_t generate_explanatory_csv(Model& m, const std::vector<SvRef>& unexplained,
                                     StepRecord& rec);
    void model_refinement(Model& m, StepRecord& rec);
    void record_instance(const Model& m, const Csv& c);

    LearnerConfig cfg_;
    int64_t step_index_ = 0;
    StepRecord pending_;
    std::map<int32_t, std::deque<Instance>> instance_log_;
};

// Candidate-source eligibility. Positive mode keeps a candidate iff it is
// informative (non-trivial) for at least one prospective target and drops
// targets whose every remaining candidate is trivial. Negative mode further
// drops the cumulative upstream positive sources of `for_csv`.
enum class EligibilityMode { Positive, Negative };
struct EligibilityResult {
    RefSet sources;
    RefSet targets;
};
EligibilityResult source_eligibility(const Model& m, const RefSet& candidates,
                                     const RefSet& prospective_targets, EligibilityMode mode,
                                     const Csv* for_csv = nullptr);

// Trivial sources of a target: everything in its downstream closure, the
// sources of CSVs in that closure, and associated BSVs of reached DSVs.
RefSet trivial_sources_of(const Model& m, SvRef target);

// True iff the instance covers every source and target of the shape, i.e. no
// excluded event (negative-source formation, target-set change) separates the
// recording from this shape. Only covered instances carry the preservation
// guarantee.
bool instance_covers(const Instance& inst, const CsvShape& shape);

// Replays an instance through a CSV shape: the pure sources-satisfied +
// target-state logic with no side effects.
SvState replay_response(const CsvShape& shape, const Instance& inst,
                        bool partial_sources_active_state = false);

// True iff the replayed response is identical across the two shapes.
bool verify_response_preservation(const CsvShape& before, const CsvShape& after,
                                  const Instance& inst,
                                  bool partial_sources_active_state = false);

CsvShape shape_of(const Csv& c);

}  // namespace varsel
