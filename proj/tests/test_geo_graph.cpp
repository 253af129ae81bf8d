#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "oracles.hpp"
#include "wifiepi/graph.hpp"
#include "wifiepi/rng.hpp"

using namespace wifiepi;

namespace {

std::vector<GeoPoint> random_city(Rng& rng, int n, double lat0, double lon0,
                                  double span_deg) {
    std::vector<GeoPoint> pts;
    pts.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        pts.push_back({rng.uniform(lat0, lat0 + span_deg),
                       rng.uniform(lon0, lon0 + span_deg)});
    return pts;
}

std::set<std::pair<int32_t, int32_t>> edge_set(const ProximityGraph& g) {
    std::set<std::pair<int32_t, int32_t>> edges;
    for (int32_t u = 0; u < g.node_count(); ++u)
        for (int32_t v : g.neighbors_of(u))
            if (u < v) edges.emplace(u, v);
    return edges;
}

} // namespace

TEST_CASE("haversine distance basics") {
    GeoPoint a{41.88, -87.63};
    CHECK(geo_distance_m(a, a) == 0.0);

    // pure-longitude arc on the equator: length = R * dlon
    GeoPoint p{0.0, 0.0}, q{0.0, 0.001};
    const double expected = kEarthRadiusM * deg2rad(0.001);
    CHECK_THAT(geo_distance_m(p, q),
               Catch::Matchers::WithinRel(expected, 1e-9));
    CHECK_THAT(geo_distance_m(p, q), Catch::Matchers::WithinAbs(111.195, 1e-3));
}

TEST_CASE("haversine symmetry on random pairs") {
    Rng rng(2024);
    for (int i = 0; i < 10000; ++i) {
        GeoPoint a{rng.uniform(-80.0, 80.0), rng.uniform(-180.0, 180.0)};
        GeoPoint b{rng.uniform(-80.0, 80.0), rng.uniform(-180.0, 180.0)};
        REQUIRE(geo_distance_m(a, b) == geo_distance_m(b, a));
    }
}

TEST_CASE("radius threshold is inclusive") {
    GeoPoint a{41.88, -87.63};
    GeoPoint b44 = geo_offset(a, 0.0, 44.0);
    GeoPoint b46 = geo_offset(a, 0.0, 46.0);

    auto g1 = build_graph({a, b44}, 45.0);
    CHECK(g1.edge_count() == 1);

    auto g0 = build_graph({a, b46}, 45.0);
    CHECK(g0.edge_count() == 0);

    // boundary: build with the exact measured distance, edge must exist
    const double d = geo_distance_m(a, b44);
    auto gb = build_graph({a, b44}, d);
    CHECK(gb.edge_count() == 1);
}

TEST_CASE("build_graph rejects non-positive radius") {
    CHECK_THROWS_AS(build_graph({{0, 0}}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_graph({{0, 0}}, -5.0), std::invalid_argument);
}

TEST_CASE("grid-built edges match the all-pairs oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 50 + static_cast<int>(rng.below(451));
        const double radius = rng.uniform(10.0, 120.0);
        const double span = rng.uniform(0.002, 0.02);
        auto pts = random_city(rng, n, 41.5 + rng.uniform(0.0, 1.0),
                               -88.0 + rng.uniform(0.0, 1.0), span);
        auto g = build_graph(pts, radius);
        REQUIRE(edge_set(g) == oracles::brute_force_edges(pts, radius));
    }
}

TEST_CASE("adjacency is symmetric, sorted, and loop free") {
    Rng rng(99);
    auto pts = random_city(rng, 400, 41.8, -87.7, 0.01);
    auto g = build_graph(pts, 60.0);
    for (int32_t u = 0; u < g.node_count(); ++u) {
        int32_t prev = -1;
        for (int32_t v : g.neighbors_of(u)) {
            REQUIRE(v != u);
            REQUIRE(v > prev);
            prev = v;
            auto nb = g.neighbors_of(v);
            REQUIRE(std::find(nb.begin(), nb.end(), u) != nb.end());
        }
    }
}

TEST_CASE("connected components: hand-checkable cases") {
    GeoPoint a{41.88, -87.63};
    // path of 3 nodes 40 m apart, plus one far-away node
    std::vector<GeoPoint> pts{a, geo_offset(a, 0.0, 40.0), geo_offset(a, 0.0, 80.0),
                              geo_offset(a, 5000.0, 0.0)};
    auto g = build_graph(pts, 45.0);
    auto comp = connected_components(g);
    REQUIRE(comp.size() == 4);
    CHECK(comp[0] == comp[1]);
    CHECK(comp[1] == comp[2]);
    CHECK(comp[3] != comp[0]);

    auto giant = giant_component(g);
    CHECK(giant.graph.node_count() == 3);
    CHECK(giant.original_ids == std::vector<int32_t>{0, 1, 2});
}

TEST_CASE("isolated nodes form singleton components") {
    GeoPoint a{41.88, -87.63};
    std::vector<GeoPoint> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(geo_offset(a, i * 1000.0, 0.0));
    auto g = build_graph(pts, 45.0);
    auto comp = connected_components(g);
    std::set<int32_t> ids(comp.begin(), comp.end());
    CHECK(ids.size() == 10);
    CHECK(giant_component(g).graph.node_count() == 1);
}

TEST_CASE("empty graph yields empty partition") {
    auto g = build_graph({}, 45.0);
    CHECK(connected_components(g).empty());
    CHECK(giant_component(g).graph.node_count() == 0);
}

TEST_CASE("giant component ties break toward the smallest node id") {
    GeoPoint a{41.88, -87.63};
    // two 2-node components; the one containing node 0 must win
    std::vector<GeoPoint> pts{a, geo_offset(a, 10.0, 0.0),
                              geo_offset(a, 9000.0, 0.0),
                              geo_offset(a, 9010.0, 0.0)};
    auto g = build_graph(pts, 45.0);
    auto giant = giant_component(g);
    REQUIRE(giant.graph.node_count() == 2);
    CHECK(giant.original_ids == std::vector<int32_t>{0, 1});
}

TEST_CASE("components match flood fill on a random geometric graph") {
    Rng rng(3);
    auto pts = random_city(rng, 300, 41.8, -87.7, 0.012);
    auto g = build_graph(pts, 45.0);
    auto expected =
        oracles::flood_fill_components(300, oracles::brute_force_edges(pts, 45.0));
    auto actual = connected_components(g);
    // both assign dense ids in order of first appearance, so they agree exactly
    REQUIRE(actual == expected);
}

TEST_CASE("degree stats on a 3-node path") {
    GeoPoint a{41.88, -87.63};
    std::vector<GeoPoint> pts{a, geo_offset(a, 0.0, 40.0), geo_offset(a, 0.0, 80.0)};
    auto g = build_graph(pts, 45.0);
    auto s = degree_stats(g);
    CHECK(s.k_max == 2);
    CHECK_THAT(s.mean_degree, Catch::Matchers::WithinAbs(4.0 / 3.0, 1e-15));
    CHECK_THAT(s.fluctuation_ratio, Catch::Matchers::WithinAbs(1.5, 1e-15));
    CHECK(s.histogram.at(1) == 2);
    CHECK(s.histogram.at(2) == 1);
}

TEST_CASE("degree stats on an edgeless graph") {
    GeoPoint a{41.88, -87.63};
    std::vector<GeoPoint> pts{a, geo_offset(a, 1000.0, 0.0)};
    auto g = build_graph(pts, 45.0);
    auto s = degree_stats(g);
    CHECK(s.mean_degree == 0.0);
    CHECK(s.fluctuation_ratio == 0.0);
    CHECK(s.k_max == 0);
}

TEST_CASE("degree histogram accounting") {
    Rng rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        auto pts = random_city(rng, 200 + static_cast<int>(rng.below(200)), 41.8,
                               -87.7, 0.01);
        auto g = build_graph(pts, rng.uniform(20.0, 80.0));
        auto s = degree_stats(g);
        int64_t total = 0, weighted = 0;
        for (const auto& [k, c] : s.histogram) {
            total += c;
            weighted += static_cast<int64_t>(k) * c;
        }
        REQUIRE(total == g.node_count());
        REQUIRE(weighted == 2 * g.edge_count());
    }
}

TEST_CASE("giant component grows with the interaction radius") {
    Rng rng(11);
    auto pts = random_city(rng, 800, 41.8, -87.7, 0.02);
    int64_t prev = 0;
    for (double radius : {15.0, 30.0, 45.0, 100.0}) {
        auto g = build_graph(pts, radius);
        const int64_t gc = giant_component(g).graph.node_count();
        REQUIRE(gc >= prev);
        prev = gc;
    }
}

TEST_CASE("grid matches oracle on a clustered corpus") {
    Rng rng(5150);
    std::vector<GeoPoint> pts;
    GeoPoint center{41.9, -87.65};
    for (int i = 0; i < 300; ++i)
        pts.push_back(geo_offset(center, rng.normal() * 80.0, rng.normal() * 80.0));
    // stack of records at one exact location, as dense buildings produce
    for (int i = 0; i < 15; ++i) pts.push_back(center);
    auto g = build_graph(pts, 45.0);
    REQUIRE(edge_set(g) == oracles::brute_force_edges(pts, 45.0));
}
