#pragma once
// Backward-chaining planner: Group-SV preprocessing of a learned model and
// recursive upstream construction of an action network from which an
// immediately-applicable action is chosen.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "varsel/sv_core.hpp"

namespace varsel {

// Grouping of BSVs that collectively act as a CSV source or whose events are
// collectively predicted by a CSV.
struct Gsv {
    int32_t idx = -1;
    std::vector<int32_t> members;        // BSV idxs, sorted
    std::vector<int32_t> constituencies; // GSVs whose member set strictly contains this one
};

// Planner-side node reference: model SVs plus GSVs.
struct PRef {
    enum class Kind : int8_t { Bsv, Dsv, Csv, Gsv } kind;
    int32_t idx;
    auto operator<=>(const PRef&) const = default;
};

// The model augmented with GSVs: CSV source lists rewired through groups and
// collectively-predicted events attached to group pseudo-DSVs.
struct PlanningModel {
    const Model* model = nullptr;
    std::vector<Gsv> gsvs;
    // Per CSV idx: rewired positive source list (grouped BSVs replaced by one
    // Gsv entry; DSVs and ungrouped BSVs individual).
    std::map<int32_t, std::vector<PRef>> csv_sources;
    // (gsv idx, kind) -> CSVs predicting that collective event.
    std::map<std::pair<int32_t, int>, std::vector<int32_t>> event_conditioners;
    // BSV idx -> GSVs containing it.
    std::map<int32_t, std::vector<int32_t>> memberships;

    int32_t find_gsv(const std::vector<int32_t>& members) const;
};

PlanningModel build_gsvs(const Model& m);

// Desired condition on a node: event (A/D) or steady state (1/0).
enum class TargetMode : int8_t { Activate, Deactivate, Active, Nonactive, None };

struct AnNode {
    PRef sv;
    TargetMode mode = TargetMode::None;  // None for CSV nodes
    bool satisfied = false;              // satisfied by current actives (root)
    bool failed = false;                 // no pathway / depth cap hit
    int depth = 0;
};

struct ActionNetwork {
    std::vector<AnNode> nodes;
    std::vector<std::pair<int32_t, int32_t>> edges;  // upstream -> downstream
    int32_t goal_node = -1;
    bool goal_satisfied = false;

    int32_t find(PRef sv, TargetMode mode) const;
};

struct PlannerConfig {
    int depth_cap = 12;
};

// Builds the upstream action network for the goal. Expansion stops at nodes
// satisfied by current actives; existing nodes are never reopened; branches
// past the depth cap are treated as unreachable.
ActionNetwork generate_action_network(const PlanningModel& pm, const Model& m,
                                      std::pair<int32_t, TargetMode> goal,
                                      PlannerConfig cfg = {});

// Collects actions appearing as positive sources of AN CSVs whose remaining
// non-action source requirements are all actualized in the current states;
// returns a uniform choice, an epsilon-random action, or a random fallback
// when no action qualifies.
int32_t choose_action(const ActionNetwork& an, const Model& m,
                      const std::vector<int32_t>& action_bsvs, std::mt19937_64& rng,
                      double epsilon);

// DOT rendering of an action network for debugging.
std::string action_network_to_dot(const ActionNetwork& an, const PlanningModel& pm);

}  // namespace varsel
