#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "wifiepi/geo.hpp"

namespace wifiepi {

// Immutable radius graph: an edge connects two nodes iff their great-circle
// distance is <= interaction_radius_m. Adjacency is CSR with sorted
// neighbor lists, no self-loops, symmetric by construction.
struct ProximityGraph {
    std::vector<GeoPoint> positions;
    std::vector<int64_t> offsets;   // size N+1
    std::vector<int32_t> neighbors; // grouped per node, ascending
    double interaction_radius_m = 0.0;

    int32_t node_count() const { return static_cast<int32_t>(positions.size()); }
    int64_t edge_count() const { return static_cast<int64_t>(neighbors.size()) / 2; }
    int32_t degree(int32_t v) const {
        return static_cast<int32_t>(offsets[v + 1] - offsets[v]);
    }
    std::span<const int32_t> neighbors_of(int32_t v) const {
        return {neighbors.data() + offsets[v],
                static_cast<size_t>(offsets[v + 1] - offsets[v])};
    }
};

namespace detail {

inline int64_t cell_key(int32_t cx, int32_t cy) {
    return (static_cast<int64_t>(cx) << 32) ^ static_cast<int64_t>(static_cast<uint32_t>(cy));
}

} // namespace detail

// Builds the exact radius graph with a uniform grid over a local
// equirectangular projection (meters east/north of the corpus centroid).
// The cell size is inflated by the worst-case east-west distortion across
// the corpus so that the 3x3 cell neighborhood provably contains every
// true pair; every candidate is re-verified with the haversine distance.
inline ProximityGraph build_graph(const std::vector<GeoPoint>& positions,
                                  double interaction_radius_m) {
    if (interaction_radius_m <= 0.0)
        throw std::invalid_argument("interaction radius must be positive");

    ProximityGraph g;
    g.positions = positions;
    g.interaction_radius_m = interaction_radius_m;
    const int32_t n = g.node_count();
    g.offsets.assign(static_cast<size_t>(n) + 1, 0);
    if (n == 0) return g;

    double lat_sum = 0.0, lon_sum = 0.0, min_cos = 1.0;
    for (const auto& p : positions) {
        lat_sum += p.lat;
        lon_sum += p.lon;
        min_cos = std::min(min_cos, std::cos(deg2rad(p.lat)));
    }
    const double lat0 = lat_sum / n;
    const double lon0 = lon_sum / n;
    const double cos0 = std::cos(deg2rad(lat0));
    min_cos = std::max(min_cos, 1e-9);

    const double cell = interaction_radius_m *
                        std::max(1.0, cos0 / min_cos) * (1.0 + 1e-6);

    std::vector<double> px(n), py(n);
    std::unordered_map<int64_t, std::vector<int32_t>> grid;
    grid.reserve(static_cast<size_t>(n) * 2);
    for (int32_t i = 0; i < n; ++i) {
        px[i] = kEarthRadiusM * deg2rad(positions[i].lon - lon0) * cos0;
        py[i] = kEarthRadiusM * deg2rad(positions[i].lat - lat0);
        const auto cx = static_cast<int32_t>(std::floor(px[i] / cell));
        const auto cy = static_cast<int32_t>(std::floor(py[i] / cell));
        grid[detail::cell_key(cx, cy)].push_back(i);
    }

    std::vector<std::vector<int32_t>> adj(static_cast<size_t>(n));
    for (int32_t i = 0; i < n; ++i) {
        const auto cx = static_cast<int32_t>(std::floor(px[i] / cell));
        const auto cy = static_cast<int32_t>(std::floor(py[i] / cell));
        for (int32_t dx = -1; dx <= 1; ++dx) {
            for (int32_t dy = -1; dy <= 1; ++dy) {
                auto it = grid.find(detail::cell_key(cx + dx, cy + dy));
                if (it == grid.end()) continue;
                for (int32_t j : it->second) {
                    if (j <= i) continue; // each pair checked once
                    if (geo_distance_m(positions[i], positions[j]) <=
                        interaction_radius_m) {
                        adj[i].push_back(j);
                        adj[j].push_back(i);
                    }
                }
            }
        }
    }

    for (int32_t i = 0; i < n; ++i) {
        std::sort(adj[i].begin(), adj[i].end());
        g.offsets[i + 1] = g.offsets[i] + static_cast<int64_t>(adj[i].size());
    }
    g.neighbors.reserve(static_cast<size_t>(g.offsets[n]));
    for (const auto& nb : adj)
        g.neighbors.insert(g.neighbors.end(), nb.begin(), nb.end());
    return g;
}

// Partition of node ids into connected components. Component ids are dense
// and assigned in order of each component's smallest node id.
inline std::vector<int32_t> connected_components(const ProximityGraph& g) {
    const int32_t n = g.node_count();
    std::vector<int32_t> comp(static_cast<size_t>(n), -1);
    std::vector<int32_t> stack;
    int32_t next_id = 0;
    for (int32_t s = 0; s < n; ++s) {
        if (comp[s] != -1) continue;
        comp[s] = next_id;
        stack.push_back(s);
        while (!stack.empty()) {
            int32_t v = stack.back();
            stack.pop_back();
            for (int32_t w : g.neighbors_of(v)) {
                if (comp[w] == -1) {
                    comp[w] = next_id;
                    stack.push_back(w);
                }
            }
        }
        ++next_id;
    }
    return comp;
}

// Largest connected component as a densely re-indexed subgraph, with the
// mapping back to original node ids. Size ties go to the component whose
// smallest contained node id is smallest.
struct GiantComponent {
    ProximityGraph graph;
    std::vector<int32_t> original_ids; // new id -> original id
};

inline GiantComponent giant_component(const ProximityGraph& g) {
    GiantComponent out;
    out.graph.interaction_radius_m = g.interaction_radius_m;
    out.graph.offsets.assign(1, 0);
    const int32_t n = g.node_count();
    if (n == 0) return out;

    const auto comp = connected_components(g);
    std::vector<int64_t> size(static_cast<size_t>(*std::max_element(comp.begin(), comp.end())) + 1, 0);
    for (int32_t c : comp) ++size[c];
    // component ids follow ascending smallest-node order, so the first
    // maximal component wins ties
    int32_t giant = static_cast<int32_t>(
        std::max_element(size.begin(), size.end()) - size.begin());

    std::vector<int32_t> new_id(static_cast<size_t>(n), -1);
    for (int32_t v = 0; v < n; ++v) {
        if (comp[v] == giant) {
            new_id[v] = static_cast<int32_t>(out.original_ids.size());
            out.original_ids.push_back(v);
        }
    }
    auto& sub = out.graph;
    sub.positions.reserve(out.original_ids.size());
    sub.offsets.assign(out.original_ids.size() + 1, 0);
    for (size_t i = 0; i < out.original_ids.size(); ++i) {
        const int32_t v = out.original_ids[i];
        sub.positions.push_back(g.positions[v]);
        sub.offsets[i + 1] = sub.offsets[i] + g.degree(v);
        for (int32_t w : g.neighbors_of(v))
            sub.neighbors.push_back(new_id[w]);
    }
    return out;
}

struct DegreeStats {
    int32_t k_max = 0;
    double mean_degree = 0.0;
    double fluctuation_ratio = 0.0; // sum(k^2)/sum(k); 0 for an edgeless graph
    std::map<int32_t, int64_t> histogram;
};

inline DegreeStats degree_stats(const ProximityGraph& g) {
    DegreeStats s;
    const int32_t n = g.node_count();
    if (n == 0) return s;
    int64_t sum_k = 0, sum_k2 = 0;
    for (int32_t v = 0; v < n; ++v) {
        const int64_t k = g.degree(v);
        sum_k += k;
        sum_k2 += k * k;
        s.k_max = std::max(s.k_max, static_cast<int32_t>(k));
        ++s.histogram[static_cast<int32_t>(k)];
    }
    s.mean_degree = static_cast<double>(sum_k) / static_cast<double>(n);
    s.fluctuation_ratio =
        sum_k == 0 ? 0.0 : static_cast<double>(sum_k2) / static_cast<double>(sum_k);
    return s;
}

} // namespace wifiepi
