#include "varsel/fsm_env.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace varsel {

const char* to_string(CellSym s) {
    switch (s) {
        case CellSym::E: return "E";
        case CellSym::DC: return "DC";
        case CellSym::DO: return "DO";
        case CellSym::W: return "W";
        case CellSym::SG1: return "SG1";
        case CellSym::SG2: return "SG2";
        case CellSym::G: return "G";
        case CellSym::X: return "X";
    }
    return "?";
}

const char* to_string(Subtype s) {
    switch (s) {
        case Subtype::RS: return "RS";
        case Subtype::SGS: return "SGS";
        case Subtype::NEG: return "NEG";
        case Subtype::Complete: return "Complete";
    }
    return "?";
}

CellSym cell_sym_from_string(const std::string& s) {
    for (int i = 0; i < 8; ++i)
        if (s == to_string(static_cast<CellSym>(i))) return static_cast<CellSym>(i);
    throw std::runtime_error("unknown cell symbol: " + s);
}

Subtype subtype_from_string(const std::string& s) {
    for (int i = 0; i < 4; ++i)
        if (s == to_string(static_cast<Subtype>(i))) return static_cast<Subtype>(i);
    throw std::runtime_error("unknown subtype: " + s);
}

// Actions: a0 advance from the empty state (draws a subtype-specific
// alternative), a1 open door, a2 pass through (the DO-deactivation that also
// clears W), a3 slam (the wrong DO-deactivation: W stays), a4 advance a
// subgoal in place, a5 trigger the goal from X (only when cell 2 is not X),
// a6 grab the goal from SG2, a7 disable the cell-2 X. The remaining actions
// are inert, making the goal hard to reach by chance.
std::vector<FsmRule> FsmEnv::default_transition_table() {
    using S = Subtype;
    using C = CellSym;
    return {
        {S::RS, C::E, C::E, 0, C::DC, C::W},
        {S::RS, C::E, C::E, 0, C::G, C::E},
        {S::RS, C::DC, C::W, 1, C::DO, C::W},
        {S::RS, C::DO, C::W, 2, C::E, C::E},
        {S::RS, C::DO, C::W, 3, C::DC, C::W},
        {S::SGS, C::E, C::E, 0, C::SG1, C::E},
        {S::SGS, C::E, C::E, 0, C::E, C::SG1},
        {S::SGS, C::SG1, C::E, 4, C::SG2, C::E},
        {S::SGS, C::E, C::SG1, 4, C::E, C::SG2},
        {S::SGS, C::SG2, C::E, 6, C::G, C::E},
        {S::SGS, C::E, C::SG2, 6, C::G, C::E},
        {S::NEG, C::E, C::E, 0, C::X, C::E},
        {S::NEG, C::E, C::E, 0, C::X, C::X},
        {S::NEG, C::X, C::E, 5, C::G, C::E},
        {S::NEG, C::X, C::X, 7, C::X, C::E},
    };
}

std::vector<FsmRule> FsmEnv::load_transition_table(std::istream& in) {
    std::vector<FsmRule> table;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string sub, p1, p2, act, q1, q2;
        if (!(ls >> sub >> p1 >> p2 >> act >> q1 >> q2)) continue;
        if (act.empty() || act[0] != 'a') throw std::runtime_error("bad action token: " + act);
        FsmRule r;
        r.subtype = subtype_from_string(sub);
        r.pre1 = cell_sym_from_string(p1);
        r.pre2 = cell_sym_from_string(p2);
        r.action = std::stoi(act.substr(1));
        r.post1 = cell_sym_from_string(q1);
        r.post2 = cell_sym_from_string(q2);
        table.push_back(r);
    }
    return table;
}

void FsmEnv::write_transition_table(std::ostream& out, const std::vector<FsmRule>& table) {
    out << "# subtype precondition-cell1 precondition-cell2 action post-cell1 post-cell2\n";
    out << "# multiple rows with the same precondition and action are drawn uniformly\n";
    for (const auto& r : table)
        out << to_string(r.subtype) << ' ' << to_string(r.pre1) << ' ' << to_string(r.pre2)
            << " a" << r.action << ' ' << to_string(r.post1) << ' ' << to_string(r.post2)
            << '\n';
}

const std::vector<std::string>& FsmEnv::observation_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (int cell = 1; cell <= 2; ++cell)
            for (int s = 0; s < 8; ++s)
                v.push_back(std::to_string(cell) + to_string(static_cast<CellSym>(s)));
        return v;
    }();
    return names;
}

std::string FsmEnv::action_name(int a) { return "a" + std::to_string(a); }

FsmEnv::FsmEnv(Subtype subtype, bool random_variant, uint64_t seed, std::vector<FsmRule> table)
    : subtype_(subtype), random_variant_(random_variant), rng_(seed), table_(std::move(table)) {
    cell1_ = start1();
    cell2_ = start2();
}

CellSym FsmEnv::start1() const { return subtype_ == Subtype::RS ? CellSym::DC : CellSym::E; }
CellSym FsmEnv::start2() const { return subtype_ == Subtype::RS ? CellSym::W : CellSym::E; }

void FsmEnv::set_subtype(Subtype s) {
    subtype_ = s;
    reset_episode();
}

void FsmEnv::reset_episode() {
    cell1_ = start1();
    cell2_ = start2();
    episode_steps_ = 0;
    ++episode_count_;
}

bool FsmEnv::rule_applies(const FsmRule& r) const {
    if (subtype_ != Subtype::Complete && r.subtype != subtype_) return false;
    return r.pre1 == cell1_ && r.pre2 == cell2_;
}

std::vector<bool> FsmEnv::observe() const {
    std::vector<bool> obs(16 + kNumActions, false);
    obs[static_cast<int>(cell1_)] = true;
    obs[8 + static_cast<int>(cell2_)] = true;
    if (random_variant_) {
        if (noise1_) obs[static_cast<int>(CellSym::X)] = true;
        if (noise2_) obs[8 + static_cast<int>(CellSym::X)] = true;
    }
    if (prev_action_ >= 0) obs[16 + prev_action_] = true;
    return obs;
}

void FsmEnv::step(int action) {
    if (action < 0 || action >= kNumActions)
        throw std::invalid_argument("action out of range: " + std::to_string(action));
    std::vector<const FsmRule*> matches;
    for (const auto& r : table_)
        if (rule_applies(r) && r.action == action) matches.push_back(&r);
    if (!matches.empty()) {
        const FsmRule* chosen = matches[0];
        if (matches.size() > 1) {
            std::uniform_int_distribution<size_t> d(0, matches.size() - 1);
            chosen = matches[d(rng_)];
        }
        cell1_ = chosen->post1;
        cell2_ = chosen->post2;
    }
    if (random_variant_) {
        std::bernoulli_distribution half(0.5);
        noise1_ = half(rng_);
        noise2_ = half(rng_);
    }
    prev_action_ = action;
    ++episode_steps_;
    ++total_steps_;
}

}  // namespace varsel
