#pragma once
// State networks and polynetworks: typed directed graphs with presence
// statistics, satisfaction under partial assignments, network refinement
// with rerelation, statistical refinement, and population assignment search.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace varsel {

struct SpnNode {
    std::string type;
    std::optional<std::array<double, 2>> pos;
    int64_t times_present = 1;
    int64_t times_checked = 1;

    double absence_ratio() const {
        return times_checked == 0
                   ? 0.0
                   : 1.0 - static_cast<double>(times_present) / static_cast<double>(times_checked);
    }
};

struct SpnEdgeStats {
    int64_t times_present = 1;
    int64_t times_checked = 1;

    double absence_ratio() const {
        return times_checked == 0
                   ? 0.0
                   : 1.0 - static_cast<double>(times_present) / static_cast<double>(times_checked);
    }
};

class StateNetwork {
public:
    StateNetwork() = default;
    explicit StateNetwork(std::string key) : key_(std::move(key)) {}

    const std::string& key() const { return key_; }

    int32_t add_node(const std::string& type,
                     std::optional<std::array<double, 2>> pos = std::nullopt);
    void add_node_with_id(int32_t id, SpnNode node);
    bool has_node(int32_t id) const { return nodes_.count(id) > 0; }
    void remove_node(int32_t id);  // edges must have been removed first
    const SpnNode& node(int32_t id) const;
    SpnNode& node(int32_t id);
    const std::map<int32_t, SpnNode>& nodes() const { return nodes_; }

    void add_edge(int32_t from, int32_t to, SpnEdgeStats stats = {});
    bool has_edge(int32_t from, int32_t to) const { return edges_.count({from, to}) > 0; }
    void remove_edge(int32_t from, int32_t to);
    const std::map<std::pair<int32_t, int32_t>, SpnEdgeStats>& edges() const { return edges_; }
    SpnEdgeStats& edge(int32_t from, int32_t to);

    std::vector<int32_t> predecessors(int32_t id) const;
    std::vector<int32_t> successors(int32_t id) const;

    bool operator==(const StateNetwork& o) const {
        if (key_ != o.key_ || nodes_.size() != o.nodes_.size() || edges_.size() != o.edges_.size())
            return false;
        auto it = o.nodes_.begin();
        for (const auto& [id, n] : nodes_) {
            if (it->first != id || it->second.type != n.type) return false;
            ++it;
        }
        auto eit = o.edges_.begin();
        for (const auto& [e, s] : edges_) {
            (void)s;
            if (eit->first != e) return false;
            ++eit;
        }
        return true;
    }

private:
    std::string key_;
    int32_t next_id_ = 0;
    std::map<int32_t, SpnNode> nodes_;
    std::map<std::pair<int32_t, int32_t>, SpnEdgeStats> edges_;
};

class StatePolynetwork {
public:
    StateNetwork& add_network(const std::string& key);
    StateNetwork* find(const std::string& key);
    const StateNetwork* find(const std::string& key) const;
    std::vector<std::pair<std::string, StateNetwork>>& entries() { return entries_; }
    const std::vector<std::pair<std::string, StateNetwork>>& entries() const { return entries_; }

    std::vector<std::string> keys() const;
    bool same_keys(const StatePolynetwork& o) const;
    int total_nodes() const;
    int total_edges() const;

    std::string serialize() const;
    static StatePolynetwork parse(std::istream& in);
    static StatePolynetwork parse(const std::string& text);

    bool operator==(const StatePolynetwork& o) const { return entries_ == o.entries_; }

private:
    std::vector<std::pair<std::string, StateNetwork>> entries_;
};

// Directed reachability within one SN, rebuilt per refinement/satisfaction
// call (the refiner is immutable while in use).
class Reachability {
public:
    explicit Reachability(const StateNetwork& sn);
    // Path of length >= 1 from a to b.
    bool path(int32_t a, int32_t b) const;

private:
    std::map<int32_t, int> slot_;
    std::vector<std::vector<bool>> reach_;
};

// Partial node mapping between same-key SNs of two SPNs, injective per SN and
// type-preserving, with the total mismatch it would leave unrefined.
struct Assignment {
    std::map<std::string, std::map<int32_t, int32_t>> mapping;
    int mismatch = 0;

    std::optional<int32_t> image(const std::string& key, int32_t node) const;
    void set(const std::string& key, int32_t node, int32_t to) { mapping[key][node] = to; }
};

// Nodes without image plus edges without a connecting path between images.
int mismatch_score(const StatePolynetwork& p0, const StatePolynetwork& p1, const Assignment& f);

// True iff every node of p0 is mapped and every edge of p0 has a directed
// path between the images within the same-key SN of p1. Key mismatch is a
// contract violation.
bool is_satisfied_by(const StatePolynetwork& p0, const StatePolynetwork& p1, const Assignment& f);

// Removes edge (n0, n1), bridging predecessors of n0 to successors of n1.
// Self-loops are discarded; tombstoned pairs are not re-created.
void remove_with_rerelation(StateNetwork& sn, int32_t n0, int32_t n1,
                            std::set<std::pair<int32_t, int32_t>>* tombstones = nullptr);

// Exact refinement: removes unmapped nodes (rerelating their edges) and edges
// whose images lack a path, rechecking rerelation-created edges, until the
// result is satisfied by p1 under the restricted assignment.
void refine_by(StatePolynetwork& p0, const StatePolynetwork& p1, const Assignment& f);

// Statistical refinement: updates presence statistics and removes only the
// elements absent this exposure whose absence ratio exceeds t_ref. Returns
// the number of removed nodes and edges (rerelation replacements excluded).
int statistical_refine(StatePolynetwork& p0, const StatePolynetwork& p1, const Assignment& f,
                       double t_ref);

struct AssignmentSearchConfig {
    int population = 10;
    // Softmax scale for positional proximity; <= 0 means the refiner's
    // bounding-box diagonal.
    double distance_scale = 0.0;
};

// Samples `population` type-compatible candidate assignments weighted by
// positional proximity and returns the one with the lowest mismatch (ties:
// first generated). `seed` pins mappings propagated from another assignment.
Assignment generate_assignments(const StatePolynetwork& p0, const StatePolynetwork& p1,
                                const AssignmentSearchConfig& cfg, std::mt19937_64& rng,
                                const Assignment* seed = nullptr);

}  // namespace varsel
