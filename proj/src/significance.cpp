#include "varsel/significance.hpp"

#include "varsel/sv_core.hpp"

namespace varsel {

void record(NceStats& stats, bool sources_satisfied, SvState target_state) {
    if (target_state == SvState::Unobserved) return;
    stats.n_observed++;
    if (target_state == SvState::Active) stats.n_incidence++;
    if (sources_satisfied) {
        stats.n_ss++;
        if (target_state == SvState::Active) stats.n_concurrence++;
    }
}

std::optional<double> nce(const NceStats& s) {
    if (s.n_observed == 0 || s.n_ss == 0 || s.n_incidence == 0) return std::nullopt;
    const double p_i = static_cast<double>(s.n_incidence) / static_cast<double>(s.n_observed);
    const double p_i_ss = static_cast<double>(s.n_concurrence) / static_cast<double>(s.n_ss);
    return (p_i_ss - p_i) / p_i;
}

std::vector<int32_t> apply_significance_policy(Model& m, double threshold) {
    if (threshold <= 0) throw std::invalid_argument("NCE threshold must be positive");
    std::vector<int32_t> blocked;
    for (const auto& cc : m.csvs()) {
        if (!cc.alive) continue;
        bool block = false;
        for (const auto& [target, st] : cc.stats) {
            auto v = nce(st);
            if (v && std::abs(*v) < threshold) {
                block = true;
                break;
            }
        }
        m.csv(cc.idx).blocked = block;
        if (block) blocked.push_back(cc.idx);
    }
    return blocked;
}

}  // namespace varsel
