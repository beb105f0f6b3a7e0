#include "varsel/planner.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace varsel {

namespace {

std::vector<int32_t> bsv_members_of(const RefSet& refs) {
    std::vector<int32_t> members;
    for (SvRef r : refs)
        if (r.kind == SvKind::Bsv) members.push_back(r.idx);
    return members;  // RefSet order keeps these sorted
}

}  // namespace

int32_t PlanningModel::find_gsv(const std::vector<int32_t>& members) const {
    for (const auto& g : gsvs)
        if (g.members == members) return g.idx;
    return -1;
}

PlanningModel build_gsvs(const Model& m) {
    PlanningModel pm;
    pm.model = &m;

    auto intern = [&](const std::vector<int32_t>& members) -> int32_t {
        int32_t found = pm.find_gsv(members);
        if (found >= 0) return found;
        Gsv g;
        g.idx = static_cast<int32_t>(pm.gsvs.size());
        g.members = members;
        pm.gsvs.push_back(g);
        return g.idx;
    };

    for (const auto& c : m.csvs()) {
        if (!c.alive) continue;
        // Positive-source grouping feeds the rewired source list.
        auto pos_members = bsv_members_of(c.pos_sources);
        std::vector<PRef> srcs;
        if (pos_members.size() >= 2) {
            int32_t g = intern(pos_members);
            srcs.push_back({PRef::Kind::Gsv, g});
        } else {
            for (int32_t b : pos_members) srcs.push_back({PRef::Kind::Bsv, b});
        }
        for (SvRef r : c.pos_sources)
            if (r.kind == SvKind::Dsv) srcs.push_back({PRef::Kind::Dsv, r.idx});
        pm.csv_sources[c.idx] = std::move(srcs);

        auto neg_members = bsv_members_of(c.neg_sources);
        if (neg_members.size() >= 2) intern(neg_members);

        // Collectively-predicted events, grouped per event kind.
        for (int k = 0; k < 2; ++k) {
            std::vector<int32_t> parents;
            for (SvRef t : c.targets)
                if (t.kind == SvKind::Dsv &&
                    m.dsv(t.idx).kind == static_cast<DsvKind>(k))
                    parents.push_back(m.dsv(t.idx).parent_bsv);
            std::sort(parents.begin(), parents.end());
            parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
            if (parents.size() >= 2) {
                int32_t g = intern(parents);
                pm.event_conditioners[{g, k}].push_back(c.idx);
            }
        }
    }

    for (const auto& g : pm.gsvs)
        for (int32_t b : g.members) pm.memberships[b].push_back(g.idx);

    // Constituency: strict containment of member sets.
    for (auto& g : pm.gsvs)
        for (const auto& h : pm.gsvs)
            if (h.idx != g.idx && h.members.size() > g.members.size() &&
                std::includes(h.members.begin(), h.members.end(), g.members.begin(),
                              g.members.end()))
                g.constituencies.push_back(h.idx);

    return pm;
}

namespace {

TargetMode precondition_of(TargetMode t) {
    switch (t) {
        case TargetMode::Activate: return TargetMode::Nonactive;
        case TargetMode::Deactivate: return TargetMode::Active;
        case TargetMode::Active: return TargetMode::Activate;
        case TargetMode::Nonactive: return TargetMode::Deactivate;
        case TargetMode::None: break;
    }
    throw std::logic_error("no precondition for CSV nodes");
}

struct Expander {
    const PlanningModel& pm;
    const Model& m;
    PlannerConfig cfg;
    ActionNetwork an;
    std::map<std::pair<PRef, TargetMode>, int32_t> index;

    bool satisfied_by_current(PRef sv, TargetMode mode) const {
        switch (sv.kind) {
            case PRef::Kind::Bsv: {
                const Bsv& b = m.bsv(sv.idx);
                switch (mode) {
                    case TargetMode::Active: return b.state == SvState::Active;
                    case TargetMode::Nonactive: return b.state != SvState::Active;
                    case TargetMode::Activate:
                        return b.activation_dsv >= 0 &&
                               m.dsv(b.activation_dsv).state == SvState::Active;
                    case TargetMode::Deactivate:
                        return b.deactivation_dsv >= 0 &&
                               m.dsv(b.deactivation_dsv).state == SvState::Active;
                    default: return false;
                }
            }
            case PRef::Kind::Gsv: {
                const Gsv& g = pm.gsvs[sv.idx];
                for (int32_t b : g.members) {
                    bool ok = false;
                    switch (mode) {
                        case TargetMode::Active: ok = m.bsv(b).state == SvState::Active; break;
                        case TargetMode::Nonactive:
                            // A group is nonactive as soon as one member is.
                            if (m.bsv(b).state != SvState::Active) return true;
                            ok = false;
                            break;
                        case TargetMode::Activate:
                            ok = m.bsv(b).activation_dsv >= 0 &&
                                 m.dsv(m.bsv(b).activation_dsv).state == SvState::Active;
                            break;
                        case TargetMode::Deactivate:
                            ok = m.bsv(b).deactivation_dsv >= 0 &&
                                 m.dsv(m.bsv(b).deactivation_dsv).state == SvState::Active;
                            break;
                        default: return false;
                    }
                    if (!ok) return false;
                }
                return mode != TargetMode::Nonactive;
            }
            case PRef::Kind::Csv: {
                // Ready to fire: source conditions hold in the current states.
                const Csv& c = m.csv(sv.idx);
                for (SvRef r : c.pos_sources)
                    if (m.state(r) != SvState::Active) return false;
                for (SvRef r : c.neg_sources)
                    if (m.state(r) == SvState::Active) return false;
                return true;
            }
            case PRef::Kind::Dsv: break;  // DSVs enter as (Bsv, A/D) nodes
        }
        return false;
    }

    int32_t open(PRef sv, TargetMode mode, int depth) {
        auto key = std::pair(sv, mode);
        auto it = index.find(key);
        if (it != index.end()) return it->second;  // no reopening
        int32_t id = static_cast<int32_t>(an.nodes.size());
        index[key] = id;
        an.nodes.push_back({sv, mode, false, false, depth});
        expand(id);
        return id;
    }

    void expand(int32_t id) {
        // an.nodes may reallocate during recursion; index by id throughout.
        if (satisfied_by_current(an.nodes[id].sv, an.nodes[id].mode)) {
            an.nodes[id].satisfied = true;
            return;
        }
        if (an.nodes[id].depth >= cfg.depth_cap) {
            an.nodes[id].failed = true;
            return;
        }
        const PRef sv = an.nodes[id].sv;
        const TargetMode mode = an.nodes[id].mode;
        const int depth = an.nodes[id].depth;
        std::vector<std::pair<PRef, TargetMode>> pathways;

        if (sv.kind == PRef::Kind::Bsv || sv.kind == PRef::Kind::Gsv) {
            pathways.push_back({sv, precondition_of(mode)});
            if (sv.kind == PRef::Kind::Gsv) {
                for (int32_t b : pm.gsvs[sv.idx].members)
                    pathways.push_back({{PRef::Kind::Bsv, b}, mode});
                for (int32_t g : pm.gsvs[sv.idx].constituencies)
                    pathways.push_back({{PRef::Kind::Gsv, g}, mode});
            } else {
                auto mit = pm.memberships.find(sv.idx);
                if (mit != pm.memberships.end())
                    for (int32_t g : mit->second) pathways.push_back({{PRef::Kind::Gsv, g}, mode});
            }
            if (mode == TargetMode::Activate || mode == TargetMode::Deactivate) {
                if (sv.kind == PRef::Kind::Bsv) {
                    const Bsv& b = m.bsv(sv.idx);
                    int32_t d = (mode == TargetMode::Activate) ? b.activation_dsv
                                                               : b.deactivation_dsv;
                    if (d >= 0)
                        for (int32_t ci : m.dsv(d).conditioners)
                            if (m.csv(ci).alive)
                                pathways.push_back({{PRef::Kind::Csv, ci}, TargetMode::None});
                } else {
                    int k = (mode == TargetMode::Activate) ? 0 : 1;
                    auto eit = pm.event_conditioners.find({sv.idx, k});
                    if (eit != pm.event_conditioners.end())
                        for (int32_t ci : eit->second)
                            pathways.push_back({{PRef::Kind::Csv, ci}, TargetMode::None});
                }
            }
        } else if (sv.kind == PRef::Kind::Csv) {
            auto sit = pm.csv_sources.find(sv.idx);
            if (sit != pm.csv_sources.end()) {
                for (PRef src : sit->second) {
                    if (src.kind == PRef::Kind::Dsv) {
                        const Dsv& d = m.dsv(src.idx);
                        pathways.push_back({{PRef::Kind::Bsv, d.parent_bsv},
                                            d.kind == DsvKind::Activation
                                                ? TargetMode::Activate
                                                : TargetMode::Deactivate});
                    } else {
                        pathways.push_back({src, TargetMode::Active});
                    }
                }
            }
            for (int32_t up : m.csv(sv.idx).conditioners)
                if (m.csv(up).alive) pathways.push_back({{PRef::Kind::Csv, up}, TargetMode::None});
        }

        if (pathways.empty()) {
            an.nodes[id].failed = true;
            return;
        }
        for (const auto& [usv, umode] : pathways) {
            int32_t uid = open(usv, umode, depth + 1);
            an.edges.push_back({uid, id});
        }
    }
};

}  // namespace

int32_t ActionNetwork::find(PRef sv, TargetMode mode) const {
    for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].sv == sv && nodes[i].mode == mode) return static_cast<int32_t>(i);
    return -1;
}

ActionNetwork generate_action_network(const PlanningModel& pm, const Model& m,
                                      std::pair<int32_t, TargetMode> goal, PlannerConfig cfg) {
    if (goal.first < 0 || goal.first >= static_cast<int32_t>(m.bsvs().size()))
        throw std::out_of_range("goal BSV does not exist");
    Expander ex{pm, m, cfg, {}, {}};
    int32_t g = ex.open({PRef::Kind::Bsv, goal.first}, goal.second, 0);
    ex.an.goal_node = g;
    ex.an.goal_satisfied = ex.an.nodes[g].satisfied;
    return std::move(ex.an);
}

namespace {

// A conditional unit only fires with an upstream conditioner active; an
// action through it is immediately useful only if some conditioner is itself
// ready (active now, or actionless with its own sources actualized).
bool negatives_clear(const Model& m, const Csv& c) {
    for (SvRef r : c.neg_sources)
        if (m.state(r) == SvState::Active) return false;
    return true;
}

bool conditioner_ready(const Model& m, const Csv& c, std::set<int32_t>& visiting) {
    if (c.flag == Flag::Unconditional) return true;
    for (int32_t up : c.conditioners) {
        const Csv& k = m.csv(up);
        if (!k.alive || visiting.count(up)) continue;
        if (k.state == SvState::Active) return true;
        if (!negatives_clear(m, k)) continue;
        bool actionless_ready = true;
        for (SvRef r : k.pos_sources) {
            if (r.kind == SvKind::Bsv && m.bsv(r.idx).is_action) {
                actionless_ready = false;
                break;
            }
            if (m.state(r) != SvState::Active) {
                actionless_ready = false;
                break;
            }
        }
        if (!actionless_ready) continue;
        visiting.insert(up);
        bool ok = conditioner_ready(m, k, visiting);
        visiting.erase(up);
        if (ok) return true;
    }
    return false;
}

}  // namespace

int32_t choose_action(const ActionNetwork& an, const Model& m,
                      const std::vector<int32_t>& action_bsvs, std::mt19937_64& rng,
                      double epsilon) {
    if (action_bsvs.empty()) throw std::invalid_argument("no action BSVs");
    auto random_action = [&]() {
        std::uniform_int_distribution<size_t> d(0, action_bsvs.size() - 1);
        return action_bsvs[d(rng)];
    };
    if (epsilon > 0) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng) < epsilon) return random_action();
    }

    // Tier 1: actions through units the model predicts will fire (sources
    // actualized and, for conditional units, a ready conditioner). Tier 2:
    // actions whose unit sources are actualized but whose firing is uncertain.
    std::vector<int32_t> ready, uncertain;
    for (const auto& node : an.nodes) {
        if (node.sv.kind != PRef::Kind::Csv) continue;
        const Csv& c = m.csv(node.sv.idx);
        if (!c.alive) continue;
        bool has_action = false, rest_actualized = true;
        for (SvRef r : c.pos_sources) {
            if (r.kind == SvKind::Bsv && m.bsv(r.idx).is_action) {
                has_action = true;
                continue;
            }
            if (m.state(r) != SvState::Active) {
                rest_actualized = false;
                break;
            }
        }
        if (!has_action || !rest_actualized || !negatives_clear(m, c)) continue;
        std::set<int32_t> visiting{node.sv.idx};
        auto& bucket = conditioner_ready(m, c, visiting) ? ready : uncertain;
        for (SvRef r : c.pos_sources)
            if (r.kind == SvKind::Bsv && m.bsv(r.idx).is_action) bucket.push_back(r.idx);
    }
    (void)uncertain;  // probe A: ready-else-random
    std::sort(ready.begin(), ready.end());
    ready.erase(std::unique(ready.begin(), ready.end()), ready.end());
    if (!ready.empty()) {
        std::uniform_int_distribution<size_t> d(0, ready.size() - 1);
        return ready[d(rng)];
    }
    return random_action();
}

std::string action_network_to_dot(const ActionNetwork& an, const PlanningModel& pm) {
    const Model& m = *pm.model;
    auto mode_str = [](TargetMode t) {
        switch (t) {
            case TargetMode::Activate: return "(A)";
            case TargetMode::Deactivate: return "(D)";
            case TargetMode::Active: return "(1)";
            case TargetMode::Nonactive: return "(0)";
            case TargetMode::None: return "";
        }
        return "";
    };
    std::ostringstream out;
    out << "digraph action_network {\n  rankdir=LR;\n";
    for (size_t i = 0; i < an.nodes.size(); ++i) {
        const auto& n = an.nodes[i];
        std::string label;
        switch (n.sv.kind) {
            case PRef::Kind::Bsv: label = m.bsv(n.sv.idx).name; break;
            case PRef::Kind::Dsv: label = m.dsv(n.sv.idx).name; break;
            case PRef::Kind::Csv: label = m.csv(n.sv.idx).name; break;
            case PRef::Kind::Gsv: label = "G" + std::to_string(n.sv.idx); break;
        }
        label += mode_str(n.mode);
        out << "  n" << i << " [label=\"" << label << "\"";
        if (n.satisfied) out << ", style=filled, fillcolor=palegreen";
        if (n.failed) out << ", style=filled, fillcolor=lightcoral";
        if (static_cast<int32_t>(i) == an.goal_node) out << ", penwidth=3";
        out << "];\n";
    }
    for (const auto& [u, v] : an.edges) out << "  n" << u << " -> n" << v << ";\n";
    out << "}\n";
    return out.str();
}

}  // namespace varsel
