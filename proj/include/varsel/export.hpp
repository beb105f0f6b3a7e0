#pragma once
// DOT rendering of learned models for inspection: BSV/DSV/CSV node classes,
// source vs conditioning edge styles, reliable (unconditional) pathways
// emphasized, plus reliable-only and single-SV pathway filters.

#include <string>

#include "varsel/mnr.hpp"
#include "varsel/sv_core.hpp"

namespace varsel {

struct DotExportOptions {
    bool reliable_only = false;       // emit only Unconditional CSVs
    std::string pathway_filter;       // BSV name: restrict to its predictive pathway
    bool include_nce = true;          // annotate conditioning edges with NCE values
    bool skip_disconnected = true;    // drop SVs with no connections
};

// Unknown pathway_filter name raises an identifier error.
std::string model_to_dot(const Model& m, const DotExportOptions& opts = {});

std::string mnr_model_to_dot(const MnrModel& m);

}  // namespace varsel
