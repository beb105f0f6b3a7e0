#pragma once
// Three-valued state-variable ontology: BSVs (external observations),
// DSVs (activation/deactivation events of BSVs), CSVs (learned conditioning
// units relating sources to targets), and the Model container that owns them.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "varsel/significance.hpp"

namespace varsel {

enum class SvState : int8_t { Active, Inactive, Unobserved };

// Qualitative certainty marker. Transitions only ever advance:
// Unconditional -> Conditional -> PossiblyConditional.
enum class Flag : int8_t { Unconditional, Conditional, PossiblyConditional };

enum class DsvKind : int8_t { Activation, Deactivation };

enum class SvKind : int8_t { Bsv, Dsv, Csv };

// Tagged index into one of the model's three collections.
struct SvRef {
    SvKind kind;
    int32_t idx;
    auto operator<=>(const SvRef&) const = default;
};

inline SvRef bsv_ref(int32_t i) { return {SvKind::Bsv, i}; }
inline SvRef dsv_ref(int32_t i) { return {SvKind::Dsv, i}; }
inline SvRef csv_ref(int32_t i) { return {SvKind::Csv, i}; }

// Sorted-unique vector used for all source/target sets: deterministic
// iteration order everywhere is what makes runs reproducible.
using RefSet = std::vector<SvRef>;

inline bool contains(const RefSet& s, SvRef r) {
    return std::binary_search(s.begin(), s.end(), r);
}
inline void insert(RefSet& s, SvRef r) {
    auto it = std::lower_bound(s.begin(), s.end(), r);
    if (it == s.end() || *it != r) s.insert(it, r);
}
inline void erase(RefSet& s, SvRef r) {
    auto it = std::lower_bound(s.begin(), s.end(), r);
    if (it != s.end() && *it == r) s.erase(it);
}

struct Bsv {
    int32_t idx = -1;
    std::string name;
    bool is_action = false;
    SvState state = SvState::Inactive;
    SvState prev_state = SvState::Inactive;
    // DSV indices; -1 for action BSVs (their transitions are agent-controlled
    // and are not modelled).
    int32_t activation_dsv = -1;
    int32_t deactivation_dsv = -1;
};

struct Dsv {
    int32_t idx = -1;
    std::string name;
    int32_t parent_bsv = -1;
    DsvKind kind = DsvKind::Activation;
    SvState state = SvState::Unobserved;
    SvState prev_state = SvState::Unobserved;
    // Event variables are never "expected always active", so they need
    // conditioning explanations from the start.
    Flag flag = Flag::Conditional;
    std::vector<int32_t> conditioners;  // CSVs that have this DSV as target
};

struct Csv {
    int32_t idx = -1;
    std::string name;
    bool alive = true;
    RefSet pos_sources;  // BSV/DSV refs only
    RefSet neg_sources;  // BSV/DSV refs only
    RefSet targets;      // DSV/CSV refs only
    SvState state = SvState::Unobserved;
    SvState prev_state = SvState::Unobserved;
    Flag flag = Flag::Unconditional;
    bool neg_connections_formed = false;
    std::vector<int32_t> conditioners;   // CSVs that have this CSV as target
    std::map<SvRef, NceStats> stats;     // per-target event statistics
    int32_t level = 0;                   // conditioning depth, set by add_computation_levels
    bool blocked = false;                // significance policy mark, recomputed each step
};

// Full model: SV collections plus the computation-level layering that orders
// CSV state deduction (targets before conditioners). Single-writer per step.
class Model {
public:
    int32_t add_bsv(const std::string& name, bool is_action = false);

    const std::vector<Bsv>& bsvs() const { return bsvs_; }
    const std::vector<Dsv>& dsvs() const { return dsvs_; }
    const std::vector<Csv>& csvs() const { return csvs_; }
    Bsv& bsv(int32_t i) { return bsvs_.at(i); }
    const Bsv& bsv(int32_t i) const { return bsvs_.at(i); }
    Dsv& dsv(int32_t i) { return dsvs_.at(i); }
    const Dsv& dsv(int32_t i) const { return dsvs_.at(i); }
    Csv& csv(int32_t i) { return csvs_.at(i); }
    const Csv& csv(int32_t i) const { return csvs_.at(i); }

    int32_t find_bsv(const std::string& name) const;  // -1 if absent

    SvState state(SvRef r) const;
    SvState prev_state(SvRef r) const;
    Flag flag(SvRef r) const;  // BSVs have no flag: contract violation

    int alive_csv_count() const;

    // Rolls current states into prev states for every SV. Start of a step.
    void roll_states();

    // Assigns observed states to non-action BSVs. Unknown id or action BSV
    // in the map, or an Unobserved assignment, is a contract violation.
    void assign_bsv_states(const std::vector<std::pair<int32_t, SvState>>& observations);

    // Sets action BSV states (one-hot supplied by the caller each step).
    void assign_action_states(const std::vector<std::pair<int32_t, SvState>>& actions);

    // Per-step DSV deduction table. If no observation BSV changed state this
    // step, all DSV states persist from the previous step instead.
    void deduce_dsv_states();

    // Recomputes the topological layering of CSVs by conditioning depth.
    // A cycle in the conditioning graph is a structural error.
    void add_computation_levels();
    const std::vector<std::vector<int32_t>>& computation_levels() const { return levels_; }

    // Registers a new CSV (assigns idx/name, wires conditioner back-links).
    int32_t add_csv(Csv c);
    void remove_csv(int32_t idx);  // unlinks from targets; marks dead

    // Re-points every CSV that targets `from` to target `to` instead
    // (used by duplicate merges; `to` may be two refs for splits).
    void repoint_target(SvRef from, const RefSet& to);

    std::vector<int32_t>& conditioners_of(SvRef target);

private:
    std::vector<Bsv> bsvs_;
    std::vector<Dsv> dsvs_;
    std::vector<Csv> csvs_;
    std::vector<std::vector<int32_t>> levels_;
    bool baseline_observed_ = false;
};

// True iff every positive source was Active and no negative source was Active
// in the previous step. Dangling source refs raise an identifier error.
bool sources_satisfied(const Model& m, const Csv& c);

}  // namespace varsel
