#include "varsel/mnr.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace varsel {

MnrModel::MnrModel(std::vector<int> class_labels, MnrConfig cfg)
    : cfg_(cfg), rng_(cfg.seed) {
    for (int label : class_labels) classes_.push_back({label, 0});
    class_pos_.resize(classes_.size());
}

int MnrModel::alive_count() const {
    int n = 0;
    for (const auto& c : csvs_)
        if (c.alive) ++n;
    return n;
}

int MnrModel::class_slot_of(int label) const {
    for (size_t i = 0; i < classes_.size(); ++i)
        if (classes_[i].label == label) return static_cast<int>(i);
    return -1;
}

void MnrModel::check_keys(const StatePolynetwork& spn) const {
    if (keys_.empty()) return;
    auto k = spn.keys();
    std::sort(k.begin(), k.end());
    auto mine = keys_;
    std::sort(mine.begin(), mine.end());
    if (k != mine) throw std::invalid_argument("SPN key set does not match the model");
}

int32_t MnrModel::add_unit(MnrCsv unit) {
    unit.id = static_cast<int32_t>(csvs_.size());
    unit.alive = true;
    int32_t id = unit.id;
    if (unit.target_csv >= 0)
        (unit.positive ? csvs_[unit.target_csv].pos_conditioners
                       : csvs_[unit.target_csv].neg_conditioners)
            .push_back(id);
    else if (unit.target_class >= 0)
        class_pos_[unit.target_class].push_back(id);
    else
        throw std::logic_error("unit without target");
    csvs_.push_back(std::move(unit));
    return id;
}

void MnrModel::remove_with_chain(int32_t ci) {
    MnrCsv& c = csvs_.at(ci);
    if (!c.alive) return;
    c.alive = false;
    for (int32_t up : c.pos_conditioners) remove_with_chain(up);
    for (int32_t up : c.neg_conditioners) remove_with_chain(up);
    c.pos_conditioners.clear();
    c.neg_conditioners.clear();
    if (c.target_csv >= 0 && csvs_[c.target_csv].alive) {
        auto& sibs = c.positive ? csvs_[c.target_csv].pos_conditioners
                                : csvs_[c.target_csv].neg_conditioners;
        sibs.erase(std::remove(sibs.begin(), sibs.end(), ci), sibs.end());
    } else if (c.target_class >= 0) {
        auto& sibs = class_pos_[c.target_class];
        sibs.erase(std::remove(sibs.begin(), sibs.end(), ci), sibs.end());
    }
}

MnrModel::EvalOutcome MnrModel::process_unit(int32_t ci, const StatePolynetwork& spn,
                                             bool root_active, const Assignment* seed) {
    MnrCsv& c = csvs_.at(ci);
    AssignmentSearchConfig acfg{cfg_.population, cfg_.distance_scale};
    Assignment f = generate_assignments(c.source, spn, acfg, rng_, seed);
    const bool sat = (f.mismatch == 0);
    const bool correct = c.positive ? root_active : !root_active;

    c.n_evaluated++;
    if (sat) {
        c.n_satisfied++;
        if (correct) c.n_fired_correct++;
    }
    if (!sat) return {false, std::move(f)};

    if (!correct) c.unconditional = false;  // first wrong firing deactivates the flag

    // Upstream subvariants are observed whenever this unit fires; the
    // downstream assignment seeds their search.
    bool any_up_sat = false;
    for (int32_t up : std::vector<int32_t>(c.pos_conditioners.begin(), c.pos_conditioners.end()))
        if (csvs_[up].alive && process_unit(up, spn, root_active, &f).satisfied) any_up_sat = true;
    bool any_neg_sat = false;
    for (int32_t nn : std::vector<int32_t>(c.neg_conditioners.begin(), c.neg_conditioners.end()))
        if (csvs_[nn].alive && process_unit(nn, spn, root_active, &f).satisfied) any_neg_sat = true;

    MnrCsv& cc = csvs_.at(ci);  // recursion may have grown the vector
    if (correct) {
        // Fired in its modelled context: refine the source toward the shared
        // part. A refinement that discarded detail not captured upstream
        // spawns a subvariant preserving the pre-refinement source.
        StatePolynetwork pre = cc.source;
        int removed = statistical_refine(cc.source, spn, f, cfg_.t_ref);
        if (removed > 0 && !any_up_sat) {
            MnrCsv sub;
            sub.source = std::move(pre);
            sub.target_csv = ci;
            sub.positive = true;
            sub.depth = cc.depth + 1;
            sub.n_evaluated = sub.n_satisfied = sub.n_fired_correct = 1;
            add_unit(std::move(sub));
        }
    } else if (!any_neg_sat) {
        // Wrong firing with no suppressor catching it: form one from this
        // observation.
        MnrCsv neg;
        neg.source = spn;
        neg.target_csv = ci;
        neg.positive = false;
        neg.depth = cc.depth + 1;
        neg.n_evaluated = neg.n_satisfied = neg.n_fired_correct = 1;
        add_unit(std::move(neg));
    }
    return {true, std::move(f)};
}

void MnrModel::learn_sample(const StatePolynetwork& spn, int label) {
    check_keys(spn);
    if (keys_.empty()) keys_ = spn.keys();
    int slot = class_slot_of(label);
    if (slot < 0) throw std::invalid_argument("label not part of this run");
    classes_[slot].incidences++;

    for (size_t d = 0; d < classes_.size(); ++d) {
        const bool active = static_cast<int>(d) == slot;
        bool any_sat = false;
        bool any_uncond = false;
        for (int32_t ci : std::vector<int32_t>(class_pos_[d].begin(), class_pos_[d].end())) {
            if (!csvs_[ci].alive) continue;
            if (csvs_[ci].unconditional) any_uncond = true;
            if (process_unit(ci, spn, active, nullptr).satisfied) any_sat = true;
        }
        if (active && !any_sat && !any_uncond) {
            MnrCsv unit;
            unit.source = spn;
            unit.target_class = static_cast<int>(d);
            unit.positive = true;
            unit.depth = 0;
            unit.n_evaluated = unit.n_satisfied = unit.n_fired_correct = 1;
            add_unit(std::move(unit));
        }
    }

    filter_insignificant(cfg_.t_sign);
}

void MnrModel::filter_insignificant(double t_sign) {
    if (t_sign <= 0.0 || t_sign >= 1.0) throw std::invalid_argument("t_sign must lie in (0,1)");
    for (auto& c : csvs_) {
        if (!c.alive) continue;
        if (c.source.total_nodes() == 0 || c.satisfaction_ratio() < t_sign)
            remove_with_chain(c.id);
    }
}

double MnrModel::predict_unit(int32_t ci, const StatePolynetwork& spn, std::mt19937_64& rng,
                              const Assignment* seed) const {
    const MnrCsv& c = csvs_.at(ci);
    AssignmentSearchConfig acfg{cfg_.population, cfg_.distance_scale};
    Assignment f = generate_assignments(c.source, spn, acfg, rng, seed);
    if (f.mismatch != 0) return 0.0;  // unsatisfied: the unit is inactive

    double p_pos = -1.0, p_neg = 0.0;
    for (int32_t up : c.pos_conditioners) {
        if (!csvs_[up].alive) continue;
        p_pos = std::max(p_pos, predict_unit(up, spn, rng, &f));
    }
    for (int32_t nn : c.neg_conditioners) {
        if (!csvs_[nn].alive) continue;
        p_neg = std::max(p_neg, predict_unit(nn, spn, rng, &f));
    }
    if (p_pos < 0.0) p_pos = c.reliability();  // no positive conditioners: own record
    return (1.0 - p_neg) * p_pos;
}

std::vector<double> MnrModel::predict_scores(const StatePolynetwork& spn,
                                             std::mt19937_64& rng) const {
    check_keys(spn);
    std::vector<double> scores(classes_.size(), 0.0);
    for (size_t d = 0; d < classes_.size(); ++d)
        for (int32_t ci : class_pos_[d]) {
            if (!csvs_[ci].alive) continue;
            scores[d] = std::max(scores[d], predict_unit(ci, spn, rng, nullptr));
        }
    return scores;
}

int MnrModel::predict(const StatePolynetwork& spn, std::mt19937_64& rng) const {
    auto scores = predict_scores(spn, rng);
    int best = -1;
    double best_score = 0.0;
    for (size_t d = 0; d < scores.size(); ++d)
        if (scores[d] > best_score) {
            best_score = scores[d];
            best = static_cast<int>(d);
        }
    return best;  // -1 = abstention (every pathway inactive)
}

std::string MnrModel::serialize() const {
    std::ostringstream out;
    out << "mnr " << classes_.size() << ' ' << alive_count() << "\n";
    for (const auto& cls : classes_) out << "class " << cls.label << ' ' << cls.incidences << "\n";
    for (const auto& c : csvs_) {
        if (!c.alive) continue;
        out << "unit " << c.id << ' ' << (c.positive ? "pos" : "neg") << ' ' << c.depth << ' '
            << c.target_class << ' ' << c.target_csv << ' ' << (c.unconditional ? 1 : 0) << ' '
            << c.n_evaluated << ' ' << c.n_satisfied << ' ' << c.n_fired_correct << "\n";
        out << c.source.serialize();
    }
    return out.str();
}

}  // namespace varsel
