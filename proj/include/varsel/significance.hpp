#pragma once
// Per-(CSV, target) event statistics and the normalized causal effect (NCE):
// the relative increase in target incidence probability given source
// satisfaction. Used to block conditioner formation on insignificant units.

#include <cstdint>
#include <optional>
#include <vector>

namespace varsel {

enum class SvState : int8_t;

struct NceStats {
    int64_t n_observed = 0;     // steps with the target observed (state +/-1)
    int64_t n_incidence = 0;    // ... and target active
    int64_t n_ss = 0;           // sources satisfied while target observed
    int64_t n_concurrence = 0;  // sources satisfied and target active

    NceStats& operator+=(const NceStats& o) {
        n_observed += o.n_observed;
        n_incidence += o.n_incidence;
        n_ss += o.n_ss;
        n_concurrence += o.n_concurrence;
        return *this;
    }
};

// No-op when the target is Unobserved: an unobserved target leaves the
// statistics (and hence the NCE) bit-identical, so nothing decays in
// environments that stop exhibiting the relationship.
void record(NceStats& stats, bool sources_satisfied, SvState target_state);

// (P(I|SS) - P(I)) / P(I); empty when any of the three denominator events
// has never occurred. Undefined is a value, not a fault.
std::optional<double> nce(const NceStats& stats);

class Model;

// Marks CSVs whose defined |NCE| against any target falls below the threshold.
// Blocked CSVs are excluded from the unexplained list (no further conditioner
// formation); nothing is removed, and the mark is recomputed each call so a
// later rise above the threshold unblocks. Returns blocked CSV indices.
std::vector<int32_t> apply_significance_policy(Model& m, double threshold);

}  // namespace varsel
