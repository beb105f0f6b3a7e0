#include "varsel/export.hpp"

#include <set>
#include <sstream>

#include "varsel/significance.hpp"

namespace varsel {

namespace {

std::string ref_id(SvRef r) {
    switch (r.kind) {
        case SvKind::Bsv: return "b" + std::to_string(r.idx);
        case SvKind::Dsv: return "d" + std::to_string(r.idx);
        case SvKind::Csv: return "c" + std::to_string(r.idx);
    }
    return "?";
}

// Everything that can influence the SV's prediction: its DSVs, their
// conditioners, and transitively the sources and conditioners of those CSVs.
std::set<SvRef> predictive_pathway(const Model& m, int32_t bsv) {
    std::set<SvRef> keep;
    std::vector<SvRef> wl;
    keep.insert(bsv_ref(bsv));
    const Bsv& b = m.bsv(bsv);
    for (int32_t d : {b.activation_dsv, b.deactivation_dsv})
        if (d >= 0) {
            keep.insert(dsv_ref(d));
            wl.push_back(dsv_ref(d));
        }
    while (!wl.empty()) {
        SvRef r = wl.back();
        wl.pop_back();
        const auto& conds = r.kind == SvKind::Dsv ? m.dsv(r.idx).conditioners
                                                  : m.csv(r.idx).conditioners;
        for (int32_t ci : conds) {
            if (!m.csv(ci).alive || keep.count(csv_ref(ci))) continue;
            keep.insert(csv_ref(ci));
            wl.push_back(csv_ref(ci));
            for (SvRef s : m.csv(ci).pos_sources) {
                if (keep.insert(s).second && s.kind == SvKind::Dsv)
                    keep.insert(bsv_ref(m.dsv(s.idx).parent_bsv));
            }
            for (SvRef s : m.csv(ci).neg_sources) {
                if (keep.insert(s).second && s.kind == SvKind::Dsv)
                    keep.insert(bsv_ref(m.dsv(s.idx).parent_bsv));
            }
        }
    }
    return keep;
}

}  // namespace

std::string model_to_dot(const Model& m, const DotExportOptions& opts) {
    std::set<SvRef> filter;
    bool filtered = false;
    if (!opts.pathway_filter.empty()) {
        int32_t b = m.find_bsv(opts.pathway_filter);
        if (b < 0) throw std::out_of_range("no BSV named " + opts.pathway_filter);
        filter = predictive_pathway(m, b);
        filtered = true;
    }
    auto want = [&](SvRef r) { return !filtered || filter.count(r) > 0; };
    auto csv_wanted = [&](const Csv& c) {
        return c.alive && want(csv_ref(c.idx)) && (!opts.reliable_only || c.flag == Flag::Unconditional);
    };

    std::set<SvRef> connected;
    for (const auto& c : m.csvs()) {
        if (!csv_wanted(c)) continue;
        connected.insert(csv_ref(c.idx));
        for (SvRef s : c.pos_sources) connected.insert(s);
        for (SvRef s : c.neg_sources) connected.insert(s);
        for (SvRef t : c.targets) connected.insert(t);
    }
    for (const auto& d : m.dsvs())
        if (connected.count(dsv_ref(d.idx))) connected.insert(bsv_ref(d.parent_bsv));

    std::ostringstream out;
    out << "digraph model {\n  rankdir=LR;\n  node [style=filled];\n";

    for (const auto& b : m.bsvs()) {
        if (!want(bsv_ref(b.idx))) continue;
        if (opts.skip_disconnected && !connected.count(bsv_ref(b.idx))) continue;
        out << "  " << ref_id(bsv_ref(b.idx)) << " [label=\"" << b.name
            << "\", fillcolor=burlywood3, shape=box];\n";
    }
    for (const auto& d : m.dsvs()) {
        if (!want(dsv_ref(d.idx))) continue;
        if (opts.skip_disconnected && !connected.count(dsv_ref(d.idx))) continue;
        out << "  " << ref_id(dsv_ref(d.idx)) << " [label=\"" << d.name
            << "\", fillcolor=lightblue2];\n";
        out << "  " << ref_id(bsv_ref(d.parent_bsv)) << " -> " << ref_id(dsv_ref(d.idx))
            << " [style=dotted, color=gray70, arrowhead=none];\n";
    }
    for (const auto& c : m.csvs()) {
        if (!csv_wanted(c)) continue;
        bool reliable = c.flag == Flag::Unconditional;
        out << "  " << ref_id(csv_ref(c.idx)) << " [label=\"" << c.name;
        if (c.flag == Flag::PossiblyConditional) out << "?";
        out << "\", fillcolor=" << (reliable ? "palegreen" : "gray90");
        if (reliable) out << ", penwidth=2.5";
        out << "];\n";
        for (SvRef s : c.pos_sources)
            out << "  " << ref_id(s) << " -> " << ref_id(csv_ref(c.idx))
                << " [color=gray50];\n";
        for (SvRef s : c.neg_sources)
            out << "  " << ref_id(s) << " -> " << ref_id(csv_ref(c.idx))
                << " [color=orange3, style=dashed];\n";
        for (SvRef t : c.targets) {
            if (filtered && !want(t)) continue;
            out << "  " << ref_id(csv_ref(c.idx)) << " -> " << ref_id(t) << " [color=black";
            if (reliable) out << ", penwidth=2.5";
            if (opts.include_nce) {
                auto it = c.stats.find(t);
                if (it != c.stats.end())
                    if (auto v = nce(it->second))
                        out << ", label=\"" << *v << "\", fontsize=9";
            }
            out << "];\n";
        }
    }
    out << "}\n";
    return out.str();
}

std::string mnr_model_to_dot(const MnrModel& m) {
    std::ostringstream out;
    out << "digraph mnr_model {\n  rankdir=RL;\n  node [style=filled];\n";
    for (size_t d = 0; d < m.classes().size(); ++d)
        out << "  cls" << d << " [label=\"class " << m.classes()[d].label
            << "\", shape=box, fillcolor=burlywood3];\n";
    for (const auto& c : m.csvs()) {
        if (!c.alive) continue;
        out << "  u" << c.id << " [label=\"U" << c.id << " d" << c.depth << " n"
            << c.source.total_nodes() << "\\np=" << c.reliability() << "\", fillcolor="
            << (c.positive ? (c.unconditional ? "palegreen" : "gray90") : "lightsalmon")
            << "];\n";
        std::string target = c.target_class >= 0 ? "cls" + std::to_string(c.target_class)
                                                 : "u" + std::to_string(c.target_csv);
        out << "  u" << c.id << " -> " << target
            << (c.positive ? " [color=black]" : " [color=orange3, style=dashed]") << ";\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace varsel
