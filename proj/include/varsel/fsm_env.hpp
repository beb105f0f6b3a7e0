#pragma once
// Two-cell finite-state-machine test environment with RS/SGS/NEG subtypes,
// vanilla and random variants. Observations are one BSV per (cell, symbol)
// pair plus the previous-action one-hot.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace varsel {

enum class CellSym : int8_t { E, DC, DO, W, SG1, SG2, G, X };
enum class Subtype : int8_t { RS, SGS, NEG, Complete };

const char* to_string(CellSym s);
const char* to_string(Subtype s);
CellSym cell_sym_from_string(const std::string& s);
Subtype subtype_from_string(const std::string& s);

struct FsmRule {
    Subtype subtype;
    CellSym pre1, pre2;
    int action;
    CellSym post1, post2;
    bool operator==(const FsmRule&) const = default;
};

class FsmEnv {
public:
    static constexpr int kNumActions = 20;

    FsmEnv(Subtype subtype, bool random_variant, uint64_t seed,
           std::vector<FsmRule> table = default_transition_table());

    static std::vector<FsmRule> default_transition_table();
    static std::vector<FsmRule> load_transition_table(std::istream& in);
    static void write_transition_table(std::ostream& out, const std::vector<FsmRule>& table);

    // The 16 observation BSV names, cell-major: 1E,1DC,...,1X,2E,...,2X.
    static const std::vector<std::string>& observation_names();
    static std::string action_name(int a);

    Subtype subtype() const { return subtype_; }
    void set_subtype(Subtype s);  // takes effect with an episode reset
    void reset_episode();

    CellSym cell1() const { return cell1_; }
    CellSym cell2() const { return cell2_; }
    bool at_goal() const { return cell1_ == CellSym::G; }

    // Observation BSV states aligned with observation_names(), followed by
    // the 20 action BSV states reflecting the previous action one-hot.
    std::vector<bool> observe() const;

    void step(int action);  // out-of-range action is a contract violation

    int episode_steps() const { return episode_steps_; }
    int64_t total_steps() const { return total_steps_; }
    int episode_count() const { return episode_count_; }

private:
    CellSym start1() const;
    CellSym start2() const;
    bool rule_applies(const FsmRule& r) const;

    Subtype subtype_;
    bool random_variant_;
    std::mt19937_64 rng_;
    std::vector<FsmRule> table_;
    CellSym cell1_, cell2_;
    bool noise1_ = false, noise2_ = false;
    int prev_action_ = -1;
    int episode_steps_ = 0;
    int64_t total_steps_ = 0;
    int episode_count_ = 0;
};

}  // namespace varsel
