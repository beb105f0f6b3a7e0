#include "varsel/spn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace varsel {

int32_t StateNetwork::add_node(const std::string& type, std::optional<std::array<double, 2>> pos) {
    int32_t id = next_id_++;
    nodes_[id] = SpnNode{type, pos, 1, 1};
    return id;
}

void StateNetwork::add_node_with_id(int32_t id, SpnNode node) {
    if (nodes_.count(id)) throw std::invalid_argument("duplicate node id");
    next_id_ = std::max(next_id_, id + 1);
    nodes_[id] = std::move(node);
}

void StateNetwork::remove_node(int32_t id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw std::out_of_range("no such node");
    for (const auto& [e, s] : edges_) {
        (void)s;
        if (e.first == id || e.second == id)
            throw std::logic_error("node removed while edges remain");
    }
    nodes_.erase(it);
}

const SpnNode& StateNetwork::node(int32_t id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw std::out_of_range("no such node");
    return it->second;
}

SpnNode& StateNetwork::node(int32_t id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw std::out_of_range("no such node");
    return it->second;
}

void StateNetwork::add_edge(int32_t from, int32_t to, SpnEdgeStats stats) {
    if (!has_node(from) || !has_node(to)) throw std::out_of_range("edge endpoint missing");
    if (from == to) return;  // self-loops are never stored
    edges_.emplace(std::pair(from, to), stats);
}

void StateNetwork::remove_edge(int32_t from, int32_t to) {
    auto it = edges_.find({from, to});
    if (it == edges_.end()) throw std::out_of_range("no such edge");
    edges_.erase(it);
}

SpnEdgeStats& StateNetwork::edge(int32_t from, int32_t to) {
    auto it = edges_.find({from, to});
    if (it == edges_.end()) throw std::out_of_range("no such edge");
    return it->second;
}

std::vector<int32_t> StateNetwork::predecessors(int32_t id) const {
    std::vector<int32_t> out;
    for (const auto& [e, s] : edges_) {
        (void)s;
        if (e.second == id) out.push_back(e.first);
    }
    return out;
}

std::vector<int32_t> StateNetwork::successors(int32_t id) const {
    std::vector<int32_t> out;
    for (const auto& [e, s] : edges_) {
        (void)s;
        if (e.first == id) out.push_back(e.second);
    }
    return out;
}

StateNetwork& StatePolynetwork::add_network(const std::string& key) {
    if (find(key)) throw std::invalid_argument("duplicate SN key: " + key);
    entries_.emplace_back(key, StateNetwork(key));
    return entries_.back().second;
}

StateNetwork* StatePolynetwork::find(const std::string& key) {
    for (auto& [k, sn] : entries_)
        if (k == key) return &sn;
    return nullptr;
}

const StateNetwork* StatePolynetwork::find(const std::string& key) const {
    for (const auto& [k, sn] : entries_)
        if (k == key) return &sn;
    return nullptr;
}

std::vector<std::string> StatePolynetwork::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, sn] : entries_) {
        (void)sn;
        out.push_back(k);
    }
    return out;
}

bool StatePolynetwork::same_keys(const StatePolynetwork& o) const {
    auto a = keys(), b = o.keys();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

int StatePolynetwork::total_nodes() const {
    int n = 0;
    for (const auto& [k, sn] : entries_) {
        (void)k;
        n += static_cast<int>(sn.nodes().size());
    }
    return n;
}

int StatePolynetwork::total_edges() const {
    int n = 0;
    for (const auto& [k, sn] : entries_) {
        (void)k;
        n += static_cast<int>(sn.edges().size());
    }
    return n;
}

std::string StatePolynetwork::serialize() const {
    std::ostringstream out;
    out << "spn " << entries_.size() << "\n";
    for (const auto& [k, sn] : entries_) {
        out << "network " << k << "\n";
        out << "nodes " << sn.nodes().size() << "\n";
        for (const auto& [id, n] : sn.nodes()) {
            out << id << ' ' << n.type << ' ';
            if (n.pos)
                out << 1 << ' ' << (*n.pos)[0] << ' ' << (*n.pos)[1];
            else
                out << 0 << " 0 0";
            out << ' ' << n.times_present << ' ' << n.times_checked << "\n";
        }
        out << "edges " << sn.edges().size() << "\n";
        for (const auto& [e, s] : sn.edges())
            out << e.first << ' ' << e.second << ' ' << s.times_present << ' ' << s.times_checked
                << "\n";
    }
    return out.str();
}

StatePolynetwork StatePolynetwork::parse(std::istream& in) {
    StatePolynetwork p;
    std::string tok;
    size_t n_keys = 0;
    if (!(in >> tok >> n_keys) || tok != "spn") throw std::runtime_error("bad SPN header");
    for (size_t k = 0; k < n_keys; ++k) {
        std::string key;
        if (!(in >> tok >> key) || tok != "network") throw std::runtime_error("bad SN header");
        StateNetwork& sn = p.add_network(key);
        size_t n_nodes = 0;
        if (!(in >> tok >> n_nodes) || tok != "nodes") throw std::runtime_error("bad node count");
        for (size_t i = 0; i < n_nodes; ++i) {
            int32_t id;
            std::string type;
            int has_pos;
            double x, y;
            SpnNode node;
            if (!(in >> id >> type >> has_pos >> x >> y >> node.times_present >>
                  node.times_checked))
                throw std::runtime_error("bad node row");
            node.type = type;
            if (has_pos) node.pos = {{x, y}};
            sn.add_node_with_id(id, std::move(node));
        }
        size_t n_edges = 0;
        if (!(in >> tok >> n_edges) || tok != "edges") throw std::runtime_error("bad edge count");
        for (size_t i = 0; i < n_edges; ++i) {
            int32_t a, b;
            SpnEdgeStats s;
            if (!(in >> a >> b >> s.times_present >> s.times_checked))
                throw std::runtime_error("bad edge row");
            sn.add_edge(a, b, s);
        }
    }
    return p;
}

StatePolynetwork StatePolynetwork::parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

Reachability::Reachability(const StateNetwork& sn) {
    int n = 0;
    for (const auto& [id, node] : sn.nodes()) {
        (void)node;
        slot_[id] = n++;
    }
    std::vector<std::vector<int>> adj(n);
    for (const auto& [e, s] : sn.edges()) {
        (void)s;
        adj[slot_[e.first]].push_back(slot_[e.second]);
    }
    reach_.assign(n, std::vector<bool>(n, false));
    std::vector<int> stack;
    for (int s0 = 0; s0 < n; ++s0) {
        stack.assign(adj[s0].begin(), adj[s0].end());
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            if (reach_[s0][v]) continue;
            reach_[s0][v] = true;
            for (int w : adj[v]) stack.push_back(w);
        }
    }
}

bool Reachability::path(int32_t a, int32_t b) const {
    auto ia = slot_.find(a), ib = slot_.find(b);
    if (ia == slot_.end() || ib == slot_.end()) return false;
    return reach_[ia->second][ib->second];
}

std::optional<int32_t> Assignment::image(const std::string& key, int32_t node) const {
    auto mit = mapping.find(key);
    if (mit == mapping.end()) return std::nullopt;
    auto it = mit->second.find(node);
    if (it == mit->second.end()) return std::nullopt;
    return it->second;
}

int mismatch_score(const StatePolynetwork& p0, const StatePolynetwork& p1, const Assignment& f) {
    int score = 0;
    for (const auto& [key, sn0] : p0.entries()) {
        const StateNetwork* sn1 = p1.find(key);
        if (!sn1) throw std::invalid_argument("SPN key sets differ: " + key);
        Reachability reach(*sn1);
        for (const auto& [id, node] : sn0.nodes()) {
            (void)node;
            if (!f.image(key, id)) ++score;
        }
        for (const auto& [e, s] : sn0.edges()) {
            (void)s;
            auto a = f.image(key, e.first), b = f.image(key, e.second);
            if (!a || !b || !reach.path(*a, *b)) ++score;
        }
    }
    return score;
}

bool is_satisfied_by(const StatePolynetwork& p0, const StatePolynetwork& p1,
                     const Assignment& f) {
    if (!p0.same_keys(p1)) throw std::invalid_argument("SPN key sets differ");
    for (const auto& [key, sn0] : p0.entries()) {
        const StateNetwork* sn1 = p1.find(key);
        Reachability reach(*sn1);
        for (const auto& [id, node] : sn0.nodes()) {
            (void)node;
            if (!f.image(key, id)) return false;
        }
        for (const auto& [e, s] : sn0.edges()) {
            (void)s;
            auto a = f.image(key, e.first), b = f.image(key, e.second);
            if (!a || !b || !reach.path(*a, *b)) return false;
        }
    }
    return true;
}

void remove_with_rerelation(StateNetwork& sn, int32_t n0, int32_t n1,
                            std::set<std::pair<int32_t, int32_t>>* tombstones) {
    if (!sn.has_edge(n0, n1)) throw std::out_of_range("no such edge to remove");
    const auto preds = sn.predecessors(n0);
    const auto succs = sn.successors(n1);
    sn.remove_edge(n0, n1);
    if (tombstones) tombstones->insert({n0, n1});
    for (int32_t p : preds)
        for (int32_t s : succs) {
            if (p == s) continue;
            if (tombstones && tombstones->count({p, s})) continue;
            if (sn.has_edge(p, s)) continue;
            sn.add_edge(p, s, SpnEdgeStats{1, 1});
        }
}

void refine_by(StatePolynetwork& p0, const StatePolynetwork& p1, const Assignment& f) {
    if (!p0.same_keys(p1)) throw std::invalid_argument("SPN key sets differ");
    for (auto& [key, sn0] : p0.entries()) {
        const StateNetwork* sn1 = p1.find(key);
        Reachability reach(*sn1);
        std::set<std::pair<int32_t, int32_t>> tombstones;

        std::vector<int32_t> ids;
        for (const auto& [id, node] : sn0.nodes()) {
            (void)node;
            ids.push_back(id);
        }
        for (int32_t id : ids) {
            if (f.image(key, id)) continue;
            std::vector<std::pair<int32_t, int32_t>> incident;
            for (const auto& [e, s] : sn0.edges()) {
                (void)s;
                if (e.first == id || e.second == id) incident.push_back(e);
            }
            for (const auto& [a, b] : incident)
                if (sn0.has_edge(a, b)) remove_with_rerelation(sn0, a, b, &tombstones);
            sn0.remove_node(id);
        }

        bool changed = true;
        while (changed) {
            changed = false;
            std::vector<std::pair<int32_t, int32_t>> edges;
            for (const auto& [e, s] : sn0.edges()) {
                (void)s;
                edges.push_back(e);
            }
            for (const auto& [a, b] : edges) {
                if (!sn0.has_edge(a, b)) continue;
                auto ia = f.image(key, a), ib = f.image(key, b);
                if (ia && ib && reach.path(*ia, *ib)) continue;
                remove_with_rerelation(sn0, a, b, &tombstones);
                changed = true;
            }
        }
    }
}

int statistical_refine(StatePolynetwork& p0, const StatePolynetwork& p1, const Assignment& f,
                       double t_ref) {
    if (t_ref < 0.0 || t_ref >= 1.0) throw std::invalid_argument("t_ref must lie in [0,1)");
    if (!p0.same_keys(p1)) throw std::invalid_argument("SPN key sets differ");
    int removed = 0;
    for (auto& [key, sn0] : p0.entries()) {
        const StateNetwork* sn1 = p1.find(key);
        Reachability reach(*sn1);
        std::set<std::pair<int32_t, int32_t>> tombstones;

        std::vector<int32_t> absent_nodes;
        std::vector<int32_t> ids;
        for (const auto& [id, node] : sn0.nodes()) {
            (void)node;
            ids.push_back(id);
        }
        for (int32_t id : ids) {
            SpnNode& node = sn0.node(id);
            node.times_checked++;
            if (f.image(key, id))
                node.times_present++;
            else
                absent_nodes.push_back(id);
        }
        std::vector<std::pair<int32_t, int32_t>> edge_list;
        for (const auto& [e, s] : sn0.edges()) {
            (void)s;
            edge_list.push_back(e);
        }
        std::vector<std::pair<int32_t, int32_t>> absent_edges;
        for (const auto& [a, b] : edge_list) {
            SpnEdgeStats& stats = sn0.edge(a, b);
            stats.times_checked++;
            auto ia = f.image(key, a), ib = f.image(key, b);
            if (ia && ib && reach.path(*ia, *ib))
                stats.times_present++;
            else
                absent_edges.push_back({a, b});
        }

        for (int32_t id : absent_nodes) {
            if (sn0.node(id).absence_ratio() <= t_ref) continue;
            std::vector<std::pair<int32_t, int32_t>> incident;
            for (const auto& [e, s] : sn0.edges()) {
                (void)s;
                if (e.first == id || e.second == id) incident.push_back(e);
            }
            for (const auto& [a, b] : incident)
                if (sn0.has_edge(a, b)) remove_with_rerelation(sn0, a, b, &tombstones);
            sn0.remove_node(id);
            ++removed;
        }
        for (const auto& [a, b] : absent_edges) {
            if (!sn0.has_edge(a, b)) continue;  // went with a removed node
            if (sn0.edge(a, b).absence_ratio() <= t_ref) continue;
            remove_with_rerelation(sn0, a, b, &tombstones);
            ++removed;
        }
    }
    return removed;
}

namespace {

double bounding_diagonal(const StatePolynetwork& p) {
    double lo_x = 0, lo_y = 0, hi_x = 0, hi_y = 0;
    bool any = false;
    for (const auto& [k, sn] : p.entries()) {
        (void)k;
        for (const auto& [id, n] : sn.nodes()) {
            (void)id;
            if (!n.pos) continue;
            if (!any) {
                lo_x = hi_x = (*n.pos)[0];
                lo_y = hi_y = (*n.pos)[1];
                any = true;
            } else {
                lo_x = std::min(lo_x, (*n.pos)[0]);
                hi_x = std::max(hi_x, (*n.pos)[0]);
                lo_y = std::min(lo_y, (*n.pos)[1]);
                hi_y = std::max(hi_y, (*n.pos)[1]);
            }
        }
    }
    if (!any) return 1.0;
    double dx = hi_x - lo_x, dy = hi_y - lo_y;
    double d = std::sqrt(dx * dx + dy * dy);
    return d > 1e-9 ? d : 1.0;
}

}  // namespace

Assignment generate_assignments(const StatePolynetwork& p0, const StatePolynetwork& p1,
                                const AssignmentSearchConfig& cfg, std::mt19937_64& rng,
                                const Assignment* seed) {
    if (cfg.population < 1) throw std::invalid_argument("population must be >= 1");
    if (!p0.same_keys(p1)) throw std::invalid_argument("SPN key sets differ");
    const double scale = cfg.distance_scale > 0 ? cfg.distance_scale : bounding_diagonal(p1);

    Assignment best;
    bool have_best = false;
    std::vector<double> weights;
    std::vector<int32_t> cands;

    for (int trial = 0; trial < cfg.population; ++trial) {
        Assignment f;
        for (const auto& [key, sn0] : p0.entries()) {
            const StateNetwork* sn1 = p1.find(key);
            std::set<int32_t> used;
            if (seed) {
                auto mit = seed->mapping.find(key);
                if (mit != seed->mapping.end())
                    for (const auto& [from, to] : mit->second) {
                        if (!sn0.has_node(from) || !sn1->has_node(to)) continue;
                        if (sn0.node(from).type != sn1->node(to).type) continue;
                        if (used.count(to)) continue;
                        f.set(key, from, to);
                        used.insert(to);
                    }
            }
            for (const auto& [id, n0] : sn0.nodes()) {
                if (f.image(key, id)) continue;
                cands.clear();
                weights.clear();
                for (const auto& [cid, n1] : sn1->nodes()) {
                    if (used.count(cid) || n1.type != n0.type) continue;
                    cands.push_back(cid);
                    double w = 1.0;
                    if (n0.pos && n1.pos) {
                        double dx = (*n0.pos)[0] - (*n1.pos)[0];
                        double dy = (*n0.pos)[1] - (*n1.pos)[1];
                        w = std::exp(-std::sqrt(dx * dx + dy * dy) / scale);
                    }
                    weights.push_back(w);
                }
                if (cands.empty()) continue;  // stays unmapped
                std::discrete_distribution<size_t> pick(weights.begin(), weights.end());
                int32_t chosen = cands[pick(rng)];
                f.set(key, id, chosen);
                used.insert(chosen);
            }
        }
        f.mismatch = mismatch_score(p0, p1, f);
        if (!have_best || f.mismatch < best.mismatch) {
            best = std::move(f);
            have_best = true;
        }
        if (best.mismatch == 0) break;  // cannot improve on a perfect match
    }
    return best;
}

}  // namespace varsel
