#include "varsel/sv_core.hpp"

namespace varsel {

int32_t Model::add_bsv(const std::string& name, bool is_action) {
    Bsv b;
    b.idx = static_cast<int32_t>(bsvs_.size());
    b.name = name;
    b.is_action = is_action;
    if (!is_action) {
        Dsv a;
        a.idx = static_cast<int32_t>(dsvs_.size());
        a.name = name + "_A";
        a.parent_bsv = b.idx;
        a.kind = DsvKind::Activation;
        dsvs_.push_back(a);
        b.activation_dsv = a.idx;

        Dsv d;
        d.idx = static_cast<int32_t>(dsvs_.size());
        d.name = name + "_D";
        d.parent_bsv = b.idx;
        d.kind = DsvKind::Deactivation;
        dsvs_.push_back(d);
        b.deactivation_dsv = d.idx;
    }
    bsvs_.push_back(b);
    return b.idx;
}

int32_t Model::find_bsv(const std::string& name) const {
    for (const auto& b : bsvs_)
        if (b.name == name) return b.idx;
    return -1;
}

SvState Model::state(SvRef r) const {
    switch (r.kind) {
        case SvKind::Bsv: return bsvs_.at(r.idx).state;
        case SvKind::Dsv: return dsvs_.at(r.idx).state;
        case SvKind::Csv: return csvs_.at(r.idx).state;
    }
    throw std::logic_error("bad SvRef kind");
}

SvState Model::prev_state(SvRef r) const {
    switch (r.kind) {
        case SvKind::Bsv: return bsvs_.at(r.idx).prev_state;
        case SvKind::Dsv: return dsvs_.at(r.idx).prev_state;
        case SvKind::Csv: return csvs_.at(r.idx).prev_state;
    }
    throw std::logic_error("bad SvRef kind");
}

Flag Model::flag(SvRef r) const {
    switch (r.kind) {
        case SvKind::Dsv: return dsvs_.at(r.idx).flag;
        case SvKind::Csv: return csvs_.at(r.idx).flag;
        case SvKind::Bsv: break;
    }
    throw std::invalid_argument("BSVs carry no unconditionality flag");
}

int Model::alive_csv_count() const {
    int n = 0;
    for (const auto& c : csvs_)
        if (c.alive) ++n;
    return n;
}

void Model::roll_states() {
    for (auto& b : bsvs_) b.prev_state = b.state;
    for (auto& d : dsvs_) d.prev_state = d.state;
    for (auto& c : csvs_) c.prev_state = c.state;
}

void Model::assign_bsv_states(const std::vector<std::pair<int32_t, SvState>>& observations) {
    for (const auto& [id, st] : observations) {
        if (id < 0 || id >= static_cast<int32_t>(bsvs_.size()))
            throw std::out_of_range("unknown BSV id " + std::to_string(id));
        if (bsvs_[id].is_action)
            throw std::invalid_argument("observation supplied for action BSV " + bsvs_[id].name);
        if (st == SvState::Unobserved)
            throw std::invalid_argument("BSV state must be Active or Inactive");
        bsvs_[id].state = st;
    }
}

void Model::assign_action_states(const std::vector<std::pair<int32_t, SvState>>& actions) {
    for (const auto& [id, st] : actions) {
        if (id < 0 || id >= static_cast<int32_t>(bsvs_.size()))
            throw std::out_of_range("unknown BSV id " + std::to_string(id));
        if (!bsvs_[id].is_action)
            throw std::invalid_argument(bsvs_[id].name + " is not an action BSV");
        if (st == SvState::Unobserved)
            throw std::invalid_argument("BSV state must be Active or Inactive");
        bsvs_[id].state = st;
    }
}

void Model::deduce_dsv_states() {
    if (!baseline_observed_) {
        // A transition needs a previous observation; the first one only sets
        // the baseline, so every DSV stays unobserved.
        for (auto& d : dsvs_) d.state = SvState::Unobserved;
        baseline_observed_ = true;
        return;
    }
    for (auto& d : dsvs_) {
        const Bsv& b = bsvs_[d.parent_bsv];
        if (d.kind == DsvKind::Activation) {
            if (b.prev_state == SvState::Active)
                d.state = SvState::Unobserved;  // already active
            else
                d.state = (b.state == SvState::Active) ? SvState::Active : SvState::Inactive;
        } else {
            if (b.prev_state == SvState::Inactive)
                d.state = SvState::Unobserved;  // already inactive
            else
                d.state = (b.state == SvState::Inactive) ? SvState::Active : SvState::Inactive;
        }
    }
}

int32_t Model::add_csv(Csv c) {
    c.idx = static_cast<int32_t>(csvs_.size());
    if (c.name.empty()) c.name = "C" + std::to_string(c.idx);
    c.alive = true;
    for (SvRef t : c.targets) {
        if (t.kind == SvKind::Bsv)
            throw std::invalid_argument("CSV targets may not be BSVs");
        conditioners_of(t).push_back(c.idx);
    }
    csvs_.push_back(std::move(c));
    return csvs_.back().idx;
}

void Model::remove_csv(int32_t idx) {
    Csv& c = csvs_.at(idx);
    if (!c.alive) return;
    for (SvRef t : c.targets) {
        auto& conds = conditioners_of(t);
        conds.erase(std::remove(conds.begin(), conds.end(), idx), conds.end());
    }
    repoint_target(csv_ref(idx), {});  // strip from upstream target sets
    c.alive = false;
    c.targets.clear();
    c.pos_sources.clear();
    c.neg_sources.clear();
    c.conditioners.clear();
    c.stats.clear();
}

void Model::repoint_target(SvRef from, const RefSet& to) {
    if (from.kind != SvKind::Csv) throw std::logic_error("only CSV targets are re-pointed");
    const auto holders = csvs_.at(from.idx).conditioners;  // copy: we mutate links
    for (int32_t h : holders) {
        Csv& up = csvs_.at(h);
        erase(up.targets, from);
        auto st = up.stats.find(from);
        NceStats carried = (st != up.stats.end()) ? st->second : NceStats{};
        if (st != up.stats.end()) up.stats.erase(st);
        for (SvRef t : to) {
            insert(up.targets, t);
            up.stats[t] += carried;
            auto& conds = conditioners_of(t);
            if (std::find(conds.begin(), conds.end(), h) == conds.end()) conds.push_back(h);
        }
    }
    csvs_.at(from.idx).conditioners.clear();
}

std::vector<int32_t>& Model::conditioners_of(SvRef target) {
    switch (target.kind) {
        case SvKind::Dsv: return dsvs_.at(target.idx).conditioners;
        case SvKind::Csv: return csvs_.at(target.idx).conditioners;
        case SvKind::Bsv: break;
    }
    throw std::invalid_argument("BSVs have no conditioners");
}

void Model::add_computation_levels() {
    // level(c) = 1 + max level over CSV targets; 0 when all targets are DSVs.
    // Conditioning edges always point from newer CSVs to older ones, so the
    // graph is acyclic by construction; a cycle here indicates a learner bug.
    std::vector<int32_t> level(csvs_.size(), -1);
    std::vector<int8_t> visiting(csvs_.size(), 0);
    std::vector<int32_t> stack;
    for (const auto& c : csvs_) {
        if (!c.alive || level[c.idx] >= 0) continue;
        stack.push_back(c.idx);
        while (!stack.empty()) {
            int32_t i = stack.back();
            const Csv& cur = csvs_[i];
            if (visiting[i] == 0) {
                visiting[i] = 1;
                for (SvRef t : cur.targets)
                    if (t.kind == SvKind::Csv && level[t.idx] < 0) {
                        if (visiting[t.idx] == 1)
                            throw std::logic_error("cycle in conditioning graph");
                        stack.push_back(t.idx);
                    }
            } else {
                int32_t lv = 0;
                for (SvRef t : cur.targets)
                    if (t.kind == SvKind::Csv) lv = std::max(lv, level[t.idx] + 1);
                level[i] = lv;
                visiting[i] = 2;
                stack.pop_back();
            }
        }
    }
    levels_.clear();
    for (auto& c : csvs_) {
        if (!c.alive) continue;
        c.level = level[c.idx];
        if (c.level >= static_cast<int32_t>(levels_.size())) levels_.resize(c.level + 1);
        levels_[c.level].push_back(c.idx);
    }
}

bool sources_satisfied(const Model& m, const Csv& c) {
    for (SvRef r : c.pos_sources)
        if (m.prev_state(r) != SvState::Active) return false;
    for (SvRef r : c.neg_sources)
        if (m.prev_state(r) == SvState::Active) return false;
    return true;
}

}  // namespace varsel
