#include "varsel/learner.hpp"

#include <cassert>

#include "varsel/significance.hpp"

namespace varsel {

namespace {

bool any_pos_source_active(const Model& m, const Csv& c) {
    for (SvRef r : c.pos_sources)
        if (m.prev_state(r) == SvState::Active) return true;
    return false;
}

bool all_pos_sources_active(const Model& m, const Csv& c) {
    for (SvRef r : c.pos_sources)
        if (m.prev_state(r) != SvState::Active) return false;
    return true;
}

bool any_neg_source_active(const Model& m, const Csv& c) {
    for (SvRef r : c.neg_sources)
        if (m.prev_state(r) == SvState::Active) return true;
    return false;
}

bool any_target_in_state(const Model& m, const Csv& c, SvState s) {
    for (SvRef t : c.targets)
        if (m.state(t) == s) return true;
    return false;
}

// Advances a flag, never backward.
template <typename Sv>
bool advance_flag(Sv& sv, Flag to) {
    if (static_cast<int>(to) > static_cast<int>(sv.flag)) {
        sv.flag = to;
        return true;
    }
    return false;
}

bool conditioner_active(const Model& m, const std::vector<int32_t>& conds) {
    for (int32_t ci : conds) {
        const Csv& c = m.csv(ci);
        if (c.alive && c.state == SvState::Active) return true;
    }
    return false;
}

void record_target_stats(const Model& m, Csv& c, bool ss) {
    for (SvRef t : c.targets) record(c.stats[t], ss, m.state(t));
}

}  // namespace

bool StepRecord::has_event_on(EventKind k, SvRef sv) const {
    for (const auto& e : events)
        if (e.kind == k && e.sv == sv) return true;
    return false;
}

RefSet trivial_sources_of(const Model& m, SvRef target) {
    RefSet closure;
    std::vector<SvRef> worklist{target};
    while (!worklist.empty()) {
        SvRef s = worklist.back();
        worklist.pop_back();
        if (contains(closure, s)) continue;
        insert(closure, s);
        if (s.kind == SvKind::Dsv) {
            insert(closure, bsv_ref(m.dsv(s.idx).parent_bsv));
        } else if (s.kind == SvKind::Csv) {
            for (SvRef t : m.csv(s.idx).targets) worklist.push_back(t);
        }
    }
    RefSet result = closure;
    for (SvRef s : closure) {
        if (s.kind != SvKind::Csv) continue;
        const Csv& c = m.csv(s.idx);
        for (SvRef r : c.pos_sources) insert(result, r);
        for (SvRef r : c.neg_sources) insert(result, r);
    }
    return result;
}

EligibilityResult source_eligibility(const Model& m, const RefSet& candidates,
                                     const RefSet& prospective_targets, EligibilityMode mode,
                                     const Csv* for_csv) {
    std::vector<RefSet> trivial;
    trivial.reserve(prospective_targets.size());
    for (SvRef t : prospective_targets) trivial.push_back(trivial_sources_of(m, t));

    RefSet upstream_pos;
    if (mode == EligibilityMode::Negative) {
        if (!for_csv) throw std::invalid_argument("negative eligibility needs a CSV");
        // Cumulative positive sources of the CSV and all its transitive
        // conditioners: an instance with those present has already been
        // observed alongside this CSV, so they cannot explain suppression.
        std::vector<int32_t> wl{for_csv->idx};
        RefSet seen;
        while (!wl.empty()) {
            int32_t ci = wl.back();
            wl.pop_back();
            if (contains(seen, csv_ref(ci))) continue;
            insert(seen, csv_ref(ci));
            const Csv& c = m.csv(ci);
            for (SvRef r : c.pos_sources) insert(upstream_pos, r);
            for (int32_t up : c.conditioners)
                if (m.csv(up).alive) wl.push_back(up);
        }
    }

    EligibilityResult res;
    for (SvRef cand : candidates) {
        if (mode == EligibilityMode::Negative && contains(upstream_pos, cand)) continue;
        bool informative = false;
        for (const auto& tr : trivial)
            if (!contains(tr, cand)) {
                informative = true;
                break;
            }
        if (informative) res.sources.push_back(cand);
    }
    for (size_t i = 0; i < prospective_targets.size(); ++i) {
        bool has_source = false;
        for (SvRef cand : res.sources)
            if (!contains(trivial[i], cand)) {
                has_source = true;
                break;
            }
        if (has_source) res.targets.push_back(prospective_targets[i]);
    }
    return res;
}

StepRecord Learner::process_environment_step(
    Model& m, const std::vector<std::pair<int32_t, SvState>>& observations,
    const std::vector<std::pair<int32_t, SvState>>& actions) {
    begin_step(m, observations);
    set_actions(m, actions);
    return finish_step(m);
}

void Learner::begin_step(Model& m, const std::vector<std::pair<int32_t, SvState>>& observations) {
    pending_ = StepRecord{};
    pending_.step_index = step_index_;

    m.roll_states();
    m.assign_bsv_states(observations);

    if (cfg_.record_step_states) {
        for (const auto& b : m.bsvs())
            pending_.states_before.push_back({bsv_ref(b.idx), b.prev_state});
        for (const auto& d : m.dsvs())
            pending_.states_before.push_back({dsv_ref(d.idx), d.prev_state});
        for (const auto& c : m.csvs())
            if (c.alive) pending_.states_before.push_back({csv_ref(c.idx), c.prev_state});
    }

    m.deduce_dsv_states();
}

void Learner::set_actions(Model& m, const std::vector<std::pair<int32_t, SvState>>& actions) {
    m.assign_action_states(actions);
}

StepRecord Learner::finish_step(Model& m) {
    StepRecord rec = std::move(pending_);
    pending_ = StepRecord{};

    // Targets before conditioners: ascending conditioning depth.
    const auto levels = m.computation_levels();
    for (const auto& level : levels)
        for (int32_t ci : level)
            if (m.csv(ci).alive) compute_csv_state(m, ci, rec);

    if (cfg_.nce_filtering) apply_significance_policy(m, cfg_.nce_cutoff);

    // Unexplained actives: DSVs first, then CSVs by ascending level.
    std::vector<SvRef> unexplained;
    for (const auto& d : m.dsvs())
        if (d.state == SvState::Active && d.flag == Flag::Conditional &&
            !conditioner_active(m, d.conditioners))
            unexplained.push_back(dsv_ref(d.idx));
    {
        std::vector<int32_t> order;
        for (const auto& c : m.csvs())
            if (c.alive) order.push_back(c.idx);
        std::stable_sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
            return std::pair(m.csv(a).level, a) < std::pair(m.csv(b).level, b);
        });
        for (int32_t ci : order) {
            const Csv& c = m.csv(ci);
            if (c.state == SvState::Active && c.flag == Flag::Conditional && !c.blocked &&
                !conditioner_active(m, c.conditioners))
                unexplained.push_back(csv_ref(ci));
        }
    }

    generate_explanatory_csv(m, unexplained, rec);

    model_refinement(m, rec);
    m.add_computation_levels();

    // Instances are logged at exposures where the unit responded (state +/-1):
    // the encounters whose responses the refinement rules keep invariant.
    if (cfg_.instance_ring > 0)
        for (const auto& c : m.csvs())
            if (c.alive && c.state != SvState::Unobserved) record_instance(m, c);

    if (cfg_.record_step_states) {
        for (const auto& b : m.bsvs()) rec.states_after.push_back({bsv_ref(b.idx), b.state});
        for (const auto& d : m.dsvs()) rec.states_after.push_back({dsv_ref(d.idx), d.state});
        for (const auto& c : m.csvs())
            if (c.alive) rec.states_after.push_back({csv_ref(c.idx), c.state});
    }
    step_index_++;
    return rec;
}

void Learner::observe_frozen(Model& m,
                             const std::vector<std::pair<int32_t, SvState>>& observations,
                             const std::vector<std::pair<int32_t, SvState>>& actions) {
    begin_step(m, observations);
    set_actions(m, actions);
    finish_frozen(m);
}

void Learner::finish_frozen(Model& m) {
    pending_ = StepRecord{};
    for (const auto& level : m.computation_levels()) {
        for (int32_t ci : level) {
            Csv& c = m.csv(ci);
            if (!c.alive) continue;
            if (!any_pos_source_active(m, c)) {
                c.state = SvState::Unobserved;
            } else if (any_target_in_state(m, c, SvState::Active)) {
                c.state = SvState::Active;
            } else if (any_target_in_state(m, c, SvState::Inactive)) {
                if (!all_pos_sources_active(m, c))
                    c.state = cfg_.partial_sources_active_state ? SvState::Active
                                                                : SvState::Unobserved;
                else if (any_neg_source_active(m, c))
                    c.state = SvState::Unobserved;
                else
                    c.state = SvState::Inactive;
            } else {
                c.state = SvState::Unobserved;
            }
        }
    }
}

void Learner::compute_csv_state(Model& m, int32_t ci, StepRecord& rec) {
    {
        Csv& c = m.csv(ci);
        const bool satisfied_entry = sources_satisfied(m, c);
        if (!any_pos_source_active(m, c)) {
            c.state = SvState::Unobserved;
            record_target_stats(m, c, satisfied_entry);
            return;
        }
    }
    if (any_target_in_state(m, m.csv(ci), SvState::Active) &&
        any_target_in_state(m, m.csv(ci), SvState::Inactive)) {
        auto [a, b] = separate_targets(m, ci, rec);
        compute_csv_state(m, a, rec);
        compute_csv_state(m, b, rec);
        return;
    }
    const bool satisfied_entry = sources_satisfied(m, m.csv(ci));
    apply_csv_state_rules(m, ci, satisfied_entry, rec);
}

void Learner::apply_csv_state_rules(Model& m, int32_t ci, bool satisfied_entry,
                                    StepRecord& rec) {
    Csv& c = m.csv(ci);
    if (any_target_in_state(m, c, SvState::Active)) {
        c.state = SvState::Active;
        // Sources observed unnecessary for the modelled effect are removed.
        RefSet pos;
        for (SvRef r : c.pos_sources)
            if (m.prev_state(r) == SvState::Active) pos.push_back(r);
        if (pos.size() != c.pos_sources.size()) {
            c.pos_sources = std::move(pos);
            rec.events.push_back({EventKind::PosRefined, csv_ref(ci), -1});
        }
        RefSet neg;
        for (SvRef r : c.neg_sources)
            if (m.prev_state(r) != SvState::Active) neg.push_back(r);
        if (neg.size() != c.neg_sources.size()) {
            c.neg_sources = std::move(neg);
            rec.events.push_back({EventKind::NegRefined, csv_ref(ci), -1});
        }
    } else if (any_target_in_state(m, c, SvState::Inactive)) {
        if (!all_pos_sources_active(m, c)) {
            c.state = cfg_.partial_sources_active_state ? SvState::Active : SvState::Unobserved;
        } else if (any_neg_source_active(m, c)) {
            c.state = SvState::Unobserved;
            // Negative sources not needed for the observed suppression go.
            RefSet neg;
            for (SvRef r : c.neg_sources)
                if (m.prev_state(r) == SvState::Active) neg.push_back(r);
            if (neg.size() != c.neg_sources.size()) {
                c.neg_sources = std::move(neg);
                rec.events.push_back({EventKind::NegRefined, csv_ref(ci), -1});
            }
        } else {
            c.state = SvState::Inactive;  // no negative source explains the inactivity
        }
    } else {
        c.state = SvState::Unobserved;  // all targets unobserved
    }

    if (m.csv(ci).state == SvState::Inactive) {
        if (m.csv(ci).neg_connections_formed) {
            if (advance_flag(m.csv(ci), Flag::Conditional))
                rec.events.push_back({EventKind::FlagChanged, csv_ref(ci), -1});
        } else {
            form_negative_connections(m, ci, rec);
        }
    }
    record_target_stats(m, m.csv(ci), satisfied_entry);
}

std::pair<int32_t, int32_t> Learner::separate_targets(Model& m, int32_t ci, StepRecord& rec) {
    const Csv orig = m.csv(ci);  // copy; the original is retired below
    auto make_copy = [&](SvState excluded) {
        Csv n;
        n.pos_sources = orig.pos_sources;
        n.neg_sources = orig.neg_sources;
        n.state = orig.state;
        n.prev_state = orig.prev_state;
        n.flag = orig.flag;
        n.neg_connections_formed = orig.neg_connections_formed;
        for (SvRef t : orig.targets) {
            if (m.state(t) == excluded) continue;
            n.targets.push_back(t);
            auto it = orig.stats.find(t);
            if (it != orig.stats.end()) n.stats[t] = it->second;
        }
        return n;
    };
    Csv a = make_copy(SvState::Inactive);  // active + unobserved targets
    Csv b = make_copy(SvState::Active);    // inactive + unobserved targets
    int32_t ai = m.add_csv(std::move(a));
    int32_t bi = m.add_csv(std::move(b));
    m.csv(ai).level = orig.level;
    m.csv(bi).level = orig.level;
    m.repoint_target(csv_ref(ci), {csv_ref(ai), csv_ref(bi)});
    m.remove_csv(ci);
    rec.events.push_back({EventKind::Duplicated, csv_ref(ai), ci});
    rec.events.push_back({EventKind::Duplicated, csv_ref(bi), ci});
    if (cfg_.instance_ring > 0) {
        auto it = instance_log_.find(ci);
        if (it != instance_log_.end()) {
            instance_log_[ai] = it->second;
            instance_log_[bi] = it->second;
            instance_log_.erase(it);
        }
    }
    return {ai, bi};
}

void Learner::form_negative_connections(Model& m, int32_t ci, StepRecord& rec) {
    if (m.csv(ci).neg_connections_formed)
        throw std::logic_error("negative connections already formed on " + m.csv(ci).name);

    // Undefined targets are split off first so they are untouched by the
    // change; the inactive targets stay with this CSV.
    if (any_target_in_state(m, m.csv(ci), SvState::Unobserved)) {
        const Csv orig = m.csv(ci);  // copy: add_csv below may reallocate
        Csv prot;
        prot.pos_sources = orig.pos_sources;
        prot.neg_sources = orig.neg_sources;
        prot.flag = orig.flag;
        prot.neg_connections_formed = false;
        prot.state = SvState::Unobserved;
        prot.prev_state = orig.prev_state;
        RefSet keep;
        for (SvRef t : orig.targets) {
            if (m.state(t) == SvState::Unobserved) {
                prot.targets.push_back(t);
                auto it = orig.stats.find(t);
                if (it != orig.stats.end()) prot.stats[t] = it->second;
            } else {
                keep.push_back(t);
            }
        }
        int32_t pi = m.add_csv(std::move(prot));
        m.csv(pi).level = orig.level;
        // Conditioners of the original now condition both parts.
        for (int32_t up : m.csv(ci).conditioners) {
            Csv& u = m.csv(up);
            insert(u.targets, csv_ref(pi));
            u.stats[csv_ref(pi)] += u.stats.count(csv_ref(ci)) ? u.stats[csv_ref(ci)] : NceStats{};
            m.csv(pi).conditioners.push_back(up);
        }
        Csv& c = m.csv(ci);
        for (SvRef t : c.targets)
            if (!contains(keep, t)) {
                auto& conds = m.conditioners_of(t);
                conds.erase(std::remove(conds.begin(), conds.end(), ci), conds.end());
                c.stats.erase(t);
            }
        c.targets = keep;
        rec.events.push_back({EventKind::Duplicated, csv_ref(pi), ci});
        if (cfg_.instance_ring > 0) {
            auto it = instance_log_.find(ci);
            if (it != instance_log_.end()) instance_log_[pi] = it->second;
        }
    }

    Csv& c = m.csv(ci);
    RefSet actives;
    for (const auto& b : m.bsvs())
        if (b.prev_state == SvState::Active) insert(actives, bsv_ref(b.idx));
    for (const auto& d : m.dsvs())
        if (d.prev_state == SvState::Active) insert(actives, dsv_ref(d.idx));

    auto elig = source_eligibility(m, actives, c.targets, EligibilityMode::Negative, &c);
    c.neg_connections_formed = true;  // the single chance is consumed either way
    if (!elig.sources.empty()) {
        c.neg_sources = elig.sources;
        rec.events.push_back({EventKind::NegFormed, csv_ref(ci), -1});
        // Past instances predate the one allowed response-changing event and
        // carry no preservation guarantee.
        instance_log_.erase(ci);
    } else {
        if (advance_flag(c, Flag::Conditional))
            rec.events.push_back({EventKind::FlagChanged, csv_ref(ci), -1});
    }
}

int32_t Learner::generate_explanatory_csv(Model& m, const std::vector<SvRef>& unexplained,
                                          StepRecord& rec) {
    if (unexplained.empty()) return -1;

    RefSet prospective(unexplained.begin(), unexplained.end());
    std::sort(prospective.begin(), prospective.end());

    RefSet actives;
    for (const auto& b : m.bsvs())
        if (b.prev_state == SvState::Active) insert(actives, bsv_ref(b.idx));
    for (const auto& d : m.dsvs())
        if (d.prev_state == SvState::Active) insert(actives, dsv_ref(d.idx));

    auto elig = source_eligibility(m, actives, prospective, EligibilityMode::Positive);

    auto mark_possibly_conditional = [&](SvRef sv) {
        bool changed = false;
        if (sv.kind == SvKind::Dsv)
            changed = advance_flag(m.dsv(sv.idx), Flag::PossiblyConditional);
        else
            changed = advance_flag(m.csv(sv.idx), Flag::PossiblyConditional);
        if (changed) rec.events.push_back({EventKind::FlagChanged, sv, -1});
    };

    if (elig.sources.empty() || elig.targets.empty()) {
        for (SvRef sv : prospective) mark_possibly_conditional(sv);
        return -1;
    }
    for (SvRef sv : prospective)
        if (!contains(elig.targets, sv)) mark_possibly_conditional(sv);

    Csv n;
    n.pos_sources = elig.sources;
    n.targets = elig.targets;
    n.flag = Flag::Unconditional;
    // The relationship was just observed: sources were active in the previous
    // step and targets are active now, so the unit starts in the active state
    // and its formation counts as a concurrence.
    n.state = SvState::Active;
    n.prev_state = SvState::Unobserved;
    for (SvRef t : n.targets) n.stats[t] = NceStats{1, 1, 1, 1};
    int32_t idx = m.add_csv(std::move(n));
    rec.events.push_back({EventKind::CsvCreated, csv_ref(idx), -1});
    return idx;
}

void Learner::model_refinement(Model& m, StepRecord& rec) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& c : m.csvs()) {
            if (!c.alive) continue;
            if (c.pos_sources.empty() || c.targets.empty()) {
                m.remove_csv(c.idx);
                rec.events.push_back({EventKind::CsvRemoved, csv_ref(c.idx), -1});
                changed = true;
            }
        }
        // Duplicates (identical sources and targets) merge into the older id.
        // Rebuilt after every merge: re-pointing mutates other target sets.
        std::map<std::tuple<RefSet, RefSet, RefSet>, int32_t> seen;
        for (const auto& c : m.csvs()) {
            if (!c.alive) continue;
            auto key = std::tuple(c.pos_sources, c.neg_sources, c.targets);
            auto [it, fresh] = seen.try_emplace(key, c.idx);
            if (fresh) continue;
            Csv& keeper = m.csv(it->second);
            for (const auto& [t, st] : c.stats) keeper.stats[t] += st;
            keeper.flag = std::max(keeper.flag, c.flag);
            keeper.neg_connections_formed |= c.neg_connections_formed;
            if (keeper.state == SvState::Unobserved) keeper.state = c.state;
            m.repoint_target(csv_ref(c.idx), {csv_ref(it->second)});
            m.remove_csv(c.idx);
            rec.events.push_back({EventKind::CsvRemoved, csv_ref(c.idx), it->second});
            changed = true;
            break;
        }
    }
}

void Learner::record_instance(const Model& m, const Csv& c) {
    Instance inst;
    inst.step = step_index_;
    for (SvRef r : c.pos_sources) inst.source_states.push_back({r, m.prev_state(r)});
    for (SvRef r : c.neg_sources) inst.source_states.push_back({r, m.prev_state(r)});
    std::sort(inst.source_states.begin(), inst.source_states.end());
    for (SvRef t : c.targets) inst.target_states.push_back({t, m.state(t)});
    std::sort(inst.target_states.begin(), inst.target_states.end());
    // Keep exposures whose response against the end-of-step composition is an
    // observed one; a formation step, for example, leaves an instance whose
    // re-encounter already reads differently.
    if (replay_response(shape_of(c), inst, cfg_.partial_sources_active_state) ==
        SvState::Unobserved)
        return;
    auto& ring = instance_log_[c.idx];
    ring.push_back(std::move(inst));
    while (static_cast<int>(ring.size()) > cfg_.instance_ring) ring.pop_front();
}

const std::deque<Instance>& Learner::instances(int32_t csv_idx) const {
    static const std::deque<Instance> empty;
    auto it = instance_log_.find(csv_idx);
    return it == instance_log_.end() ? empty : it->second;
}

namespace {

SvState lookup(const std::vector<std::pair<SvRef, SvState>>& states, SvRef r) {
    auto it = std::lower_bound(states.begin(), states.end(), std::pair(r, SvState::Active),
                               [](const auto& a, const auto& b) { return a.first < b.first; });
    if (it == states.end() || it->first != r)
        throw std::out_of_range("instance does not cover SV");
    return it->second;
}

bool covered(const std::vector<std::pair<SvRef, SvState>>& states, const RefSet& refs) {
    for (SvRef r : refs) {
        auto it = std::lower_bound(states.begin(), states.end(), std::pair(r, SvState::Active),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        if (it == states.end() || it->first != r) return false;
    }
    return true;
}

}  // namespace

bool instance_covers(const Instance& inst, const CsvShape& shape) {
    return covered(inst.source_states, shape.pos_sources) &&
           covered(inst.source_states, shape.neg_sources) &&
           covered(inst.target_states, shape.targets);
}

SvState replay_response(const CsvShape& shape, const Instance& inst,
                        bool partial_sources_active_state) {
    bool any_pos = false, all_pos = true;
    for (SvRef r : shape.pos_sources) {
        if (lookup(inst.source_states, r) == SvState::Active)
            any_pos = true;
        else
            all_pos = false;
    }
    if (shape.pos_sources.empty() || !any_pos) return SvState::Unobserved;
    bool any_active = false, any_inactive = false;
    for (SvRef t : shape.targets) {
        SvState s = lookup(inst.target_states, t);
        if (s == SvState::Active) any_active = true;
        if (s == SvState::Inactive) any_inactive = true;
    }
    if (any_active && !any_inactive) return SvState::Active;
    if (any_inactive && !any_active) {
        if (!all_pos)
            return partial_sources_active_state ? SvState::Active : SvState::Unobserved;
        for (SvRef r : shape.neg_sources)
            if (lookup(inst.source_states, r) == SvState::Active) return SvState::Unobserved;
        return SvState::Inactive;
    }
    // Heterogeneous targets would have split the CSV; for replay purposes an
    // active target dominates, mirroring the deduction order.
    if (any_active) return SvState::Active;
    return SvState::Unobserved;
}

bool verify_response_preservation(const CsvShape& before, const CsvShape& after,
                                  const Instance& inst, bool partial_sources_active_state) {
    return replay_response(before, inst, partial_sources_active_state) ==
           replay_response(after, inst, partial_sources_active_state);
}

CsvShape shape_of(const Csv& c) { return {c.pos_sources, c.neg_sources, c.targets}; }

}  // namespace varsel
