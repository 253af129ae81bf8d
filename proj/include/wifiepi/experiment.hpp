#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "wifiepi/epidemic.hpp"
#include "wifiepi/graph.hpp"
#include "wifiepi/ingest.hpp"
#include "wifiepi/rng.hpp"

namespace wifiepi {

struct ExperimentConfig {
    int layout_randomizations = 5;
    int runs_per_layout = 20; // 5 x 20 = the default 100 realizations
    double ci_level = 0.90;
    double interaction_radius_m = 45.0;
    uint64_t master_seed = 0;
    int worker_count = 0; // 0 = hardware concurrency

    int total_runs() const { return layout_randomizations * runs_per_layout; }

    void validate() const {
        if (layout_randomizations < 1 || runs_per_layout < 1)
            throw std::invalid_argument("ensemble needs at least one layout and one run");
        if (ci_level <= 0.0 || ci_level >= 1.0)
            throw std::invalid_argument("ci_level must lie in (0, 1)");
        if (interaction_radius_m <= 0.0)
            throw std::invalid_argument("interaction radius must be positive");
    }
};

// Table-style indicators of one layout's giant component.
struct LayoutStats {
    int layout = 0;
    int64_t graph_nodes = 0;
    int64_t gc_nodes = 0;
    int64_t gc_edges = 0;
    double f_encr = 0.0; // encrypted fraction within the giant component
    DegreeStats degrees; // of the giant component
    bool skipped = false;
};

struct RunSummary {
    int layout = 0;
    int run = 0;
    double final_attack_rate = 0.0;
    // medians over nodes infected during the run, by initial security class;
    // -1 when no such node was infected
    double median_open_infection_step = -1.0;
    double median_wep_infection_step = -1.0;
};

struct EnsembleResult {
    double tau_minutes = 5.0;
    std::vector<LayoutStats> layouts;
    std::vector<RunSummary> runs;                 // in (layout, run) order
    std::vector<std::vector<double>> run_curves;  // attack rate, per run
    std::vector<double> ar_mean, ar_lower, ar_upper;
    std::vector<std::array<double, kCompartmentCount>> mean_counts;
    double mean_final_attack_rate = 0.0;
    std::vector<std::string> warnings;
};

// Pointwise empirical percentile band with linear interpolation between
// order statistics. Requires at least two curves.
inline std::pair<std::vector<double>, std::vector<double>>
confidence_band(const std::vector<std::vector<double>>& curves, double level) {
    if (curves.size() < 2)
        throw std::invalid_argument("confidence band needs at least two curves");
    if (level <= 0.0 || level >= 1.0)
        throw std::invalid_argument("level must lie in (0, 1)");
    const size_t len = curves.front().size();
    for (const auto& c : curves)
        if (c.size() != len)
            throw std::invalid_argument("curves must have equal length");

    auto percentile = [](std::vector<double>& sorted, double q) {
        const double h = q * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<size_t>(std::floor(h));
        const double frac = h - static_cast<double>(lo);
        if (lo + 1 >= sorted.size()) return sorted.back();
        return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
    };

    std::vector<double> lower(len), upper(len), column(curves.size());
    const double q = (1.0 - level) / 2.0;
    for (size_t t = 0; t < len; ++t) {
        for (size_t r = 0; r < curves.size(); ++r) column[r] = curves[r][t];
        std::sort(column.begin(), column.end());
        lower[t] = percentile(column, q);
        upper[t] = percentile(column, 1.0 - q);
    }
    return {std::move(lower), std::move(upper)};
}

// Pearson correlation; empty when fewer than two points or zero variance.
inline std::optional<double> pearson(const std::vector<double>& xs,
                                     const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

struct FinalAttackRateCorrelation {
    std::optional<double> vs_mean_degree;
    std::optional<double> vs_fluctuation_ratio;
};

// Correlates per-corpus final attack rates against the degree indicators
// of their substrates (one point per corpus).
inline FinalAttackRateCorrelation
correlate_final_ar(const std::vector<std::pair<double, DegreeStats>>& items) {
    if (items.size() < 3)
        throw std::invalid_argument("correlation needs at least three corpora");
    std::vector<double> ar, mean_k, fluct;
    for (const auto& [final_ar, stats] : items) {
        ar.push_back(final_ar);
        mean_k.push_back(stats.mean_degree);
        fluct.push_back(stats.fluctuation_ratio);
    }
    return {pearson(mean_k, ar), pearson(fluct, ar)};
}

namespace detail {

inline void parallel_for(int64_t task_count, int worker_count,
                         const std::function<void(int64_t)>& body) {
    int workers = worker_count > 0
                      ? worker_count
                      : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = static_cast<int>(
        std::min<int64_t>(workers, std::max<int64_t>(task_count, 1)));
    if (workers == 1) {
        for (int64_t i = 0; i < task_count; ++i) body(i);
        return;
    }
    std::atomic<int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int64_t i = next.fetch_add(1);
                if (i >= task_count) return;
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

inline double median(std::vector<double> v) {
    if (v.empty()) return -1.0;
    std::sort(v.begin(), v.end());
    const size_t mid = v.size() / 2;
    if (v.size() % 2 == 1) return v[mid];
    return 0.5 * (v[mid - 1] + v[mid]);
}

} // namespace detail

// One layout's simulation substrate: the giant component and the profiles
// of its nodes (indexed by giant-component node id).
struct Substrate {
    ProximityGraph gc;
    std::vector<NodeProfile> profiles;
    LayoutStats stats;
};

// Rebuilds positions, profiles, graph and giant component for one layout
// index. Draw order off the layout substream is fixed: positions first,
// then profiles, so sweeps that reuse positions stay aligned.
inline Substrate build_substrate(const std::vector<RouterRecord>& capped,
                                 int layout,
                                 const ExperimentConfig& xcfg,
                                 const IngestConfig& icfg) {
    Rng layout_rng = substream(xcfg.master_seed, StreamKind::Layout,
                               static_cast<uint64_t>(layout));
    const auto positioned =
        randomize_positions(capped, icfg.randomization_radius_m, layout_rng);
    const auto profiles = assign_profiles(positioned, icfg, layout_rng);

    std::vector<GeoPoint> positions;
    positions.reserve(positioned.size());
    for (const auto& r : positioned) positions.push_back(r.pos);
    const auto graph = build_graph(positions, xcfg.interaction_radius_m);
    auto giant = giant_component(graph);

    Substrate sub;
    sub.stats.layout = layout;
    sub.stats.graph_nodes = graph.node_count();
    sub.stats.gc_nodes = giant.graph.node_count();
    sub.stats.gc_edges = giant.graph.edge_count();
    sub.stats.degrees = degree_stats(giant.graph);
    int64_t encrypted = 0;
    sub.profiles.reserve(giant.original_ids.size());
    for (size_t i = 0; i < giant.original_ids.size(); ++i) {
        NodeProfile p = profiles[static_cast<size_t>(giant.original_ids[i])];
        p.node_id = static_cast<int32_t>(i);
        if (p.encryption != Encryption::Open) ++encrypted;
        sub.profiles.push_back(p);
    }
    sub.stats.f_encr = sub.stats.gc_nodes == 0
                           ? 0.0
                           : static_cast<double>(encrypted) /
                                 static_cast<double>(sub.stats.gc_nodes);
    sub.gc = std::move(giant.graph);
    return sub;
}

namespace detail {

struct RunData {
    RunSummary summary;
    std::vector<double> ar_curve;
    std::vector<std::array<int64_t, kCompartmentCount>> count_curve;
};

inline RunData execute_run(const Substrate& sub, int layout, int run_index,
                           const ExperimentConfig& xcfg,
                           const EpidemicParams& params) {
    RunData data;
    data.summary.layout = layout;
    data.summary.run = run_index;

    SimState state(sub.gc, sub.profiles, params,
                   substream(xcfg.master_seed, StreamKind::Run,
                             static_cast<uint64_t>(layout),
                             static_cast<uint64_t>(run_index)));
    const TimeSeries series = run(state, params.horizon_steps);

    data.ar_curve.reserve(series.snapshots.size());
    data.count_curve.reserve(series.snapshots.size());
    for (const auto& snap : series.snapshots) {
        data.ar_curve.push_back(attack_rate(snap));
        data.count_curve.push_back(snap.counts);
    }
    data.summary.final_attack_rate = data.ar_curve.back();

    std::vector<double> open_steps, wep_steps;
    for (int32_t v = 0; v < state.node_count(); ++v) {
        if (state.infection_step(v) < 0) continue;
        const auto enc = sub.profiles[static_cast<size_t>(v)].encryption;
        if (enc == Encryption::Open)
            open_steps.push_back(static_cast<double>(state.infection_step(v)));
        else if (enc == Encryption::Wep)
            wep_steps.push_back(static_cast<double>(state.infection_step(v)));
    }
    data.summary.median_open_infection_step = median(std::move(open_steps));
    data.summary.median_wep_infection_step = median(std::move(wep_steps));
    return data;
}

inline EnsembleResult reduce_runs(std::vector<RunData>&& runs,
                                  const ExperimentConfig& xcfg,
                                  const EpidemicParams& params) {
    EnsembleResult result;
    result.tau_minutes = params.tau_minutes;
    const size_t len = runs.front().ar_curve.size();
    const auto n_runs = static_cast<double>(runs.size());

    result.ar_mean.assign(len, 0.0);
    std::vector<std::array<int64_t, kCompartmentCount>> count_sum(
        len, std::array<int64_t, kCompartmentCount>{});
    for (const auto& r : runs) {
        result.runs.push_back(r.summary);
        result.run_curves.push_back(r.ar_curve);
        for (size_t t = 0; t < len; ++t) {
            result.ar_mean[t] += r.ar_curve[t];
            for (size_t c = 0; c < kCompartmentCount; ++c)
                count_sum[t][c] += r.count_curve[t][c];
        }
    }
    for (auto& v : result.ar_mean) v /= n_runs;
    result.mean_counts.assign(len, {});
    for (size_t t = 0; t < len; ++t)
        for (size_t c = 0; c < kCompartmentCount; ++c)
            result.mean_counts[t][c] =
                static_cast<double>(count_sum[t][c]) / n_runs;

    if (runs.size() >= 2) {
        auto [lower, upper] = confidence_band(result.run_curves, xcfg.ci_level);
        result.ar_lower = std::move(lower);
        result.ar_upper = std::move(upper);
    } else {
        result.ar_lower = result.ar_mean; // singleton ensemble: band collapses
        result.ar_upper = result.ar_mean;
    }

    double final_sum = 0.0;
    for (const auto& r : result.runs) final_sum += r.final_attack_rate;
    result.mean_final_attack_rate = final_sum / n_runs;
    return result;
}

} // namespace detail

// Runs the full ensemble over prebuilt substrates (one per layout).
// Run (layout, run) draws its own substream of the master seed, so the
// result is independent of scheduling and worker count.
inline EnsembleResult run_ensemble_prebuilt(const std::vector<Substrate>& substrates,
                                            const ExperimentConfig& xcfg,
                                            const EpidemicParams& params) {
    xcfg.validate();
    params.validate();

    EnsembleResult result;
    std::vector<const Substrate*> usable;
    for (const auto& sub : substrates) {
        result.layouts.push_back(sub.stats);
        int64_t non_immune = 0;
        for (const auto& p : sub.profiles)
            if (p.encryption != Encryption::Wpa) ++non_immune;
        if (non_immune < params.seed_count) {
            result.layouts.back().skipped = true;
            result.warnings.push_back(
                "layout " + std::to_string(sub.stats.layout) +
                " skipped: giant component smaller than seed count");
            continue;
        }
        usable.push_back(&sub);
    }
    if (usable.empty())
        throw std::runtime_error("all layouts skipped: no giant component can host the seeds");

    const int64_t tasks = static_cast<int64_t>(usable.size()) * xcfg.runs_per_layout;
    std::vector<detail::RunData> runs(static_cast<size_t>(tasks));
    detail::parallel_for(tasks, xcfg.worker_count, [&](int64_t i) {
        const auto* sub = usable[static_cast<size_t>(i) / xcfg.runs_per_layout];
        const int run_index = static_cast<int>(i % xcfg.runs_per_layout);
        runs[static_cast<size_t>(i)] =
            detail::execute_run(*sub, sub->stats.layout, run_index, xcfg, params);
    });

    auto reduced = detail::reduce_runs(std::move(runs), xcfg, params);
    reduced.layouts = std::move(result.layouts);
    reduced.warnings = std::move(result.warnings);
    return reduced;
}

// Full pipeline ensemble: probe filtering and dedup once, then per layout
// re-randomized positions, profiles, graph and giant component.
inline EnsembleResult run_ensemble(const std::vector<RouterRecord>& records,
                                   const ExperimentConfig& xcfg,
                                   const IngestConfig& icfg,
                                   const EpidemicParams& params) {
    xcfg.validate();
    icfg.validate();
    params.validate();
    if (records.empty()) throw std::runtime_error("corpus is empty");

    const auto capped = dedupe_and_cap(filter_probes(records), icfg.overlap_cap);
    if (capped.empty()) throw std::runtime_error("no records survive filtering");

    std::vector<Substrate> substrates;
    substrates.reserve(static_cast<size_t>(xcfg.layout_randomizations));
    for (int layout = 0; layout < xcfg.layout_randomizations; ++layout)
        substrates.push_back(build_substrate(capped, layout, xcfg, icfg));
    return run_ensemble_prebuilt(substrates, xcfg, params);
}

// Giant-component sizes across interaction radii, reusing identical
// randomized positions per layout index for every radius.
struct RadiusSweepRow {
    double radius_m = 0.0;
    std::vector<int64_t> gc_per_layout;
    double mean_gc = 0.0;
};

inline std::vector<RadiusSweepRow>
radius_sweep(const std::vector<RouterRecord>& records,
             const std::vector<double>& radii,
             const ExperimentConfig& xcfg, const IngestConfig& icfg) {
    if (radii.empty()) throw std::invalid_argument("radius sweep list is empty");
    for (double r : radii)
        if (r <= 0.0) throw std::invalid_argument("interaction radius must be positive");
    const auto capped = dedupe_and_cap(filter_probes(records), icfg.overlap_cap);
    if (capped.empty()) throw std::runtime_error("no records survive filtering");

    std::vector<std::vector<GeoPoint>> layout_positions;
    for (int layout = 0; layout < xcfg.layout_randomizations; ++layout) {
        Rng layout_rng = substream(xcfg.master_seed, StreamKind::Layout,
                                   static_cast<uint64_t>(layout));
        const auto positioned =
            randomize_positions(capped, icfg.randomization_radius_m, layout_rng);
        std::vector<GeoPoint> positions;
        positions.reserve(positioned.size());
        for (const auto& r : positioned) positions.push_back(r.pos);
        layout_positions.push_back(std::move(positions));
    }

    std::vector<RadiusSweepRow> rows;
    for (double radius : radii) {
        RadiusSweepRow row;
        row.radius_m = radius;
        int64_t total = 0;
        for (const auto& positions : layout_positions) {
            const auto graph = build_graph(positions, radius);
            const auto gc = giant_component(graph);
            row.gc_per_layout.push_back(gc.graph.node_count());
            total += gc.graph.node_count();
        }
        row.mean_gc = static_cast<double>(total) /
                      static_cast<double>(layout_positions.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

// Immunization (site-percolation) sweep. On top of the profile-derived WPA
// immunity, a fraction of all graph nodes is flagged immune uniformly at
// random; the flagged set is a prefix of one per-layout permutation, so it
// grows monotonically with the fraction. Reported per fraction: the giant
// component of the subgraph induced on non-immune nodes, and the ensemble
// mean final attack rate (0 when the seeds no longer fit).
struct ImmunizationLayoutRow {
    int layout = 0;
    int64_t nonimmune_gc = 0;
    double mean_final_attack_rate = 0.0;
};

struct ImmunizationRow {
    double fraction = 0.0;
    double mean_nonimmune_gc = 0.0;
    double mean_final_attack_rate = 0.0;
    std::vector<ImmunizationLayoutRow> per_layout;
};

inline std::vector<ImmunizationRow>
immunization_sweep(const std::vector<RouterRecord>& records,
                   const std::vector<double>& fractions,
                   const ExperimentConfig& xcfg, const IngestConfig& icfg,
                   const EpidemicParams& params) {
    xcfg.validate();
    icfg.validate();
    params.validate();
    if (fractions.empty())
        throw std::invalid_argument("immunization sweep list is empty");
    for (double f : fractions)
        if (f < 0.0 || f > 1.0)
            throw std::invalid_argument("immunization fractions must lie in [0, 1]");

    const auto capped = dedupe_and_cap(filter_probes(records), icfg.overlap_cap);
    if (capped.empty()) throw std::runtime_error("no records survive filtering");

    struct LayoutContext {
        ProximityGraph graph;
        std::vector<NodeProfile> profiles;   // full graph indexing
        std::vector<int32_t> permutation;    // immunization order
        GiantComponent giant;
    };
    std::vector<LayoutContext> layouts;
    for (int layout = 0; layout < xcfg.layout_randomizations; ++layout) {
        Rng layout_rng = substream(xcfg.master_seed, StreamKind::Layout,
                                   static_cast<uint64_t>(layout));
        const auto positioned =
            randomize_positions(capped, icfg.randomization_radius_m, layout_rng);
        LayoutContext ctx;
        ctx.profiles = assign_profiles(positioned, icfg, layout_rng);
        std::vector<GeoPoint> positions;
        positions.reserve(positioned.size());
        for (const auto& r : positioned) positions.push_back(r.pos);
        ctx.graph = build_graph(positions, xcfg.interaction_radius_m);
        ctx.giant = giant_component(ctx.graph);
        ctx.permutation.resize(static_cast<size_t>(ctx.graph.node_count()));
        for (int32_t v = 0; v < ctx.graph.node_count(); ++v)
            ctx.permutation[static_cast<size_t>(v)] = v;
        Rng perm_rng = substream(xcfg.master_seed, StreamKind::Immunization,
                                 static_cast<uint64_t>(layout));
        perm_rng.shuffle(ctx.permutation);
        layouts.push_back(std::move(ctx));
    }

    // largest connected component among non-immune nodes
    auto nonimmune_gc_size = [](const ProximityGraph& g,
                                const std::vector<uint8_t>& immune) {
        const int32_t n = g.node_count();
        std::vector<uint8_t> seen(static_cast<size_t>(n), 0);
        std::vector<int32_t> stack;
        int64_t best = 0;
        for (int32_t s = 0; s < n; ++s) {
            if (seen[s] || immune[s]) continue;
            int64_t size = 0;
            seen[s] = 1;
            stack.push_back(s);
            while (!stack.empty()) {
                const int32_t v = stack.back();
                stack.pop_back();
                ++size;
                for (int32_t w : g.neighbors_of(v)) {
                    if (!seen[w] && !immune[w]) {
                        seen[w] = 1;
                        stack.push_back(w);
                    }
                }
            }
            best = std::max(best, size);
        }
        return best;
    };

    std::vector<ImmunizationRow> rows;
    for (double fraction : fractions) {
        ImmunizationRow row;
        row.fraction = fraction;
        double gc_sum = 0.0, ar_sum = 0.0;
        int64_t ar_count = 0;
        for (size_t layout = 0; layout < layouts.size(); ++layout) {
            const auto& ctx = layouts[layout];
            const auto n = static_cast<int64_t>(ctx.graph.node_count());
            const auto extra =
                static_cast<int64_t>(std::floor(fraction * static_cast<double>(n)));
            std::vector<uint8_t> immune(static_cast<size_t>(n), 0);
            for (int64_t i = 0; i < extra; ++i)
                immune[static_cast<size_t>(ctx.permutation[static_cast<size_t>(i)])] = 1;
            for (int32_t v = 0; v < ctx.graph.node_count(); ++v)
                if (ctx.profiles[static_cast<size_t>(v)].encryption == Encryption::Wpa)
                    immune[static_cast<size_t>(v)] = 1;

            ImmunizationLayoutRow lrow;
            lrow.layout = static_cast<int>(layout);
            lrow.nonimmune_gc = nonimmune_gc_size(ctx.graph, immune);
            gc_sum += static_cast<double>(lrow.nonimmune_gc);

            // simulate on the giant component with flagged nodes forced immune
            std::vector<NodeProfile> gc_profiles;
            gc_profiles.reserve(ctx.giant.original_ids.size());
            int64_t non_immune_gc_nodes = 0;
            for (size_t i = 0; i < ctx.giant.original_ids.size(); ++i) {
                NodeProfile p =
                    ctx.profiles[static_cast<size_t>(ctx.giant.original_ids[i])];
                p.node_id = static_cast<int32_t>(i);
                if (immune[static_cast<size_t>(ctx.giant.original_ids[i])])
                    p.encryption = Encryption::Wpa;
                if (p.encryption != Encryption::Wpa) ++non_immune_gc_nodes;
                gc_profiles.push_back(p);
            }

            double layout_ar_sum = 0.0;
            for (int r = 0; r < xcfg.runs_per_layout; ++r) {
                double final_ar = 0.0; // reported 0 when seeds cannot be placed
                if (non_immune_gc_nodes >= params.seed_count) {
                    SimState state(ctx.giant.graph, gc_profiles, params,
                                   substream(xcfg.master_seed, StreamKind::Run,
                                             static_cast<uint64_t>(lrow.layout),
                                             static_cast<uint64_t>(r)));
                    const TimeSeries series = run(state, params.horizon_steps);
                    final_ar = attack_rate(series.snapshots.back());
                }
                layout_ar_sum += final_ar;
                ar_sum += final_ar;
                ++ar_count;
            }
            lrow.mean_final_attack_rate =
                layout_ar_sum / static_cast<double>(xcfg.runs_per_layout);
            row.per_layout.push_back(lrow);
        }
        row.mean_nonimmune_gc = gc_sum / static_cast<double>(layouts.size());
        row.mean_final_attack_rate =
            ar_count == 0 ? 0.0 : ar_sum / static_cast<double>(ar_count);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace wifiepi
