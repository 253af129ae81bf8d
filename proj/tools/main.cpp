// wifiepi command line: synth, graph, simulate, sweep, report.
// Every command writes its outputs plus a manifest.json into --out-dir;
// re-running a command with --config <manifest.json> reproduces the same
// outputs byte for byte.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wifiepi/epidemic.hpp"
#include "wifiepi/experiment.hpp"
#include "wifiepi/graph.hpp"
#include "wifiepi/ingest.hpp"
#include "wifiepi/io.hpp"
#include "wifiepi/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wifiepi;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Loads --config: either a plain config object or a manifest, in which
// case its "config" section is used.
json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    json j = json::parse(read_file(path));
    if (j.contains("config") && j.contains("command")) return j["config"];
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    return j;
}

// Option values resolve as: command line > config file > default.
struct ConfigResolver {
    const CLI::App* cmd;
    json file;
    json echo = json::object();

    template <typename T>
    void resolve(const char* flag, const char* key, T& value) {
        const auto* opt = cmd->get_option_no_throw(flag);
        const bool on_cmdline = opt != nullptr && opt->count() > 0;
        if (!on_cmdline && file.contains(key)) value = file[key].get<T>();
        echo[key] = value;
    }
};

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("unparseable number in list: " + item);
        }
    }
    return out;
}

std::vector<RouterRecord> load_corpus(const std::string& path, ParseReport& report) {
    const std::string bytes = read_file(path);
    std::istringstream in(bytes);
    auto records = parse_records(in, report);
    if (!report.row_errors.empty()) {
        std::cerr << "warning: " << report.row_errors.size()
                  << " malformed rows skipped (first at line "
                  << report.row_errors.front().line << ": "
                  << report.row_errors.front().message << ")\n";
    }
    if (report.unknown_encryption > 0) {
        std::cerr << "warning: " << report.unknown_encryption
                  << " rows with unknown encryption treated as open\n";
    }
    return records;
}

void write_output(const fs::path& dir, const std::string& name,
                  const std::string& content, ManifestBuilder& manifest) {
    write_file(dir / name, content);
    manifest.add_output(name);
}

void finish(const fs::path& dir, ManifestBuilder& manifest) {
    manifest.add_output("manifest.json");
    write_file(dir / "manifest.json", manifest.dump());
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
    int nodes = 0;
    double encrypted = 0.30;
    std::string bbox_flag;
    int clusters = 0;
    double cluster_sigma_m = 300.0;
    double cluster_fraction = 0.5;
    uint64_t seed = 0;
    std::string out_dir = ".";
    std::string config_path;
};

// Default box: a square centered on a downtown-like coordinate, sized so a
// 45 m interaction radius gives mean degree about 20 at this node count.
BoundingBox auto_bbox(int nodes) {
    const double density = 20.0 / (kPi * 45.0 * 45.0); // nodes per m^2
    const double side_m = std::sqrt(static_cast<double>(nodes) / density);
    const GeoPoint center{41.88, -87.63};
    const double dlat = rad2deg(side_m / 2.0 / kEarthRadiusM);
    const double dlon =
        rad2deg(side_m / 2.0 / (kEarthRadiusM * std::cos(deg2rad(center.lat))));
    return {center.lat - dlat, center.lon - dlon, center.lat + dlat, center.lon + dlon};
}

int cmd_synth(const CLI::App* cmd, SynthArgs& a) {
    ConfigResolver cfg{cmd, load_config_file(a.config_path)};
    cfg.resolve("--nodes", "nodes", a.nodes);
    cfg.resolve("--encrypted", "encrypted", a.encrypted);
    cfg.resolve("--clusters", "clusters", a.clusters);
    cfg.resolve("--cluster-sigma", "cluster_sigma_m", a.cluster_sigma_m);
    cfg.resolve("--cluster-frac", "cluster_fraction", a.cluster_fraction);
    cfg.resolve("--seed", "seed", a.seed);
    if (a.nodes < 1) throw UsageError("--nodes must be >= 1");

    BoundingBox box;
    const auto* bbox_opt = cmd->get_option_no_throw("--bbox");
    if (bbox_opt != nullptr && bbox_opt->count() > 0) {
        auto vals = parse_double_list(a.bbox_flag);
        if (vals.size() != 4)
            throw UsageError("--bbox needs lat_min,lon_min,lat_max,lon_max");
        box = {vals[0], vals[1], vals[2], vals[3]};
    } else if (cfg.file.contains("bbox")) {
        auto vals = cfg.file["bbox"].get<std::vector<double>>();
        if (vals.size() != 4) throw UsageError("config bbox needs four numbers");
        box = {vals[0], vals[1], vals[2], vals[3]};
    } else {
        box = auto_bbox(a.nodes);
    }
    cfg.echo["bbox"] = {box.lat_min, box.lon_min, box.lat_max, box.lon_max};

    Rng rng = substream(a.seed, StreamKind::Synth);
    ClusterParams clusters{a.clusters, a.cluster_sigma_m, a.cluster_fraction};
    const auto records = synth_city(a.nodes, box, clusters, a.encrypted, rng);

    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    ManifestBuilder manifest("synth", cfg.echo);
    write_output(dir, "corpus.csv", corpus_csv(records), manifest);
    finish(dir, manifest);
    return 0;
}

// ---- shared ingest/experiment flag blocks ---------------------------------

struct IngestArgs {
    int overlap_cap = 20;
    double rand_radius = 10.0;
    double wpa_frac = 0.30;
    double nopass_frac = 0.50;
    double dict1_frac = 0.25;
    double dict2_frac = 0.11;
};

void add_ingest_flags(CLI::App* cmd, IngestArgs& a) {
    cmd->add_option("--rand-radius", a.rand_radius,
                    "position randomization radius, meters");
    cmd->add_option("--overlap-cap", a.overlap_cap,
                    "max routers kept per exact location");
    cmd->add_option("--wpa-frac", a.wpa_frac, "WPA share of encrypted routers");
    cmd->add_option("--nopass-frac", a.nopass_frac,
                    "default-password share of open routers");
    cmd->add_option("--dict1-frac", a.dict1_frac,
                    "passwords in the small dictionary");
    cmd->add_option("--dict2-frac", a.dict2_frac,
                    "passwords only in the large dictionary");
}

IngestConfig resolve_ingest(ConfigResolver& cfg, IngestArgs& a, uint64_t seed) {
    cfg.resolve("--rand-radius", "rand_radius_m", a.rand_radius);
    cfg.resolve("--overlap-cap", "overlap_cap", a.overlap_cap);
    cfg.resolve("--wpa-frac", "wpa_fraction_of_encrypted", a.wpa_frac);
    cfg.resolve("--nopass-frac", "nopass_fraction_of_open", a.nopass_frac);
    cfg.resolve("--dict1-frac", "dict1_fraction", a.dict1_frac);
    cfg.resolve("--dict2-frac", "dict2_fraction", a.dict2_frac);
    IngestConfig icfg;
    icfg.overlap_cap = a.overlap_cap;
    icfg.randomization_radius_m = a.rand_radius;
    icfg.wpa_fraction_of_encrypted = a.wpa_frac;
    icfg.nopass_fraction_of_open = a.nopass_frac;
    icfg.dict1_fraction = a.dict1_frac;
    icfg.dict2_fraction = a.dict2_frac;
    icfg.rng_seed = seed;
    icfg.validate();
    return icfg;
}

struct EpidemicArgs {
    double tau = 5.0;
    double tau1 = 10.5;
    double tau2 = 700.0;
    double tau_wep = 4320.0;
    int seeds = 5;
    int horizon = 4032;
    std::string preset = "average";
    bool deterministic_durations = false;
};

void add_epidemic_flags(CLI::App* cmd, EpidemicArgs& a) {
    cmd->add_option("--tau", a.tau, "direct takeover time, minutes");
    cmd->add_option("--tau1", a.tau1, "small-dictionary attack time, minutes");
    cmd->add_option("--tau2", a.tau2, "large-dictionary attack time, minutes");
    cmd->add_option("--tau-wep", a.tau_wep, "WEP crack time, minutes");
    cmd->add_option("--seeds", a.seeds, "initially infected routers");
    cmd->add_option("--horizon", a.horizon, "simulated steps");
    cmd->add_option("--preset", a.preset,
                    "time-scale preset: average, best-case, worst-case")
        ->check(CLI::IsMember({"average", "best-case", "worst-case"}));
    cmd->add_flag("--deterministic-durations", a.deterministic_durations,
                  "fixed mean phase durations instead of geometric draws");
}

EpidemicParams resolve_epidemic(ConfigResolver& cfg, const CLI::App* cmd,
                                EpidemicArgs& a) {
    auto flag_set = [&](const char* flag) {
        const auto* opt = cmd->get_option_no_throw(flag);
        return opt != nullptr && opt->count() > 0;
    };
    const bool preset_on_cmdline = flag_set("--preset");
    if (!preset_on_cmdline && cfg.file.contains("preset"))
        a.preset = cfg.file["preset"].get<std::string>();
    cfg.echo["preset"] = a.preset;

    double preset1 = 10.5, preset2 = 700.0, preset_wep = 4320.0;
    if (a.preset == "worst-case") { // attack-favorable end of every range
        preset1 = 6.0;
        preset2 = 400.0;
        preset_wep = 2880.0;
    } else if (a.preset == "best-case") {
        preset1 = 15.0;
        preset2 = 1000.0;
        preset_wep = 5760.0;
    } else if (a.preset != "average") {
        throw UsageError("unknown preset: " + a.preset);
    }
    // explicit time flags beat the preset; file values beat a preset that
    // came from the file itself, but not one requested on the command line
    auto resolve_tau = [&](const char* flag, const char* key, double& v,
                           double preset_val) {
        if (!flag_set(flag)) {
            if (!preset_on_cmdline && cfg.file.contains(key))
                v = cfg.file[key].get<double>();
            else
                v = preset_val;
        }
        cfg.echo[key] = v;
    };
    resolve_tau("--tau1", "tau1_minutes", a.tau1, preset1);
    resolve_tau("--tau2", "tau2_minutes", a.tau2, preset2);
    resolve_tau("--tau-wep", "tau_wep_minutes", a.tau_wep, preset_wep);
    cfg.resolve("--tau", "tau_minutes", a.tau);
    cfg.resolve("--seeds", "seed_count", a.seeds);
    cfg.resolve("--horizon", "horizon_steps", a.horizon);
    cfg.resolve("--deterministic-durations", "deterministic_durations",
                a.deterministic_durations);

    EpidemicParams params;
    params.tau_minutes = a.tau;
    params.tau1_minutes = a.tau1;
    params.tau2_minutes = a.tau2;
    params.tau_wep_minutes = a.tau_wep;
    params.seed_count = a.seeds;
    params.horizon_steps = a.horizon;
    params.deterministic_durations = a.deterministic_durations;
    params.validate();
    return params;
}

// ---- graph ----------------------------------------------------------------

struct GraphArgs {
    std::string input;
    double radius = 45.0;
    uint64_t seed = 0;
    bool with_tiers = false;
    std::string out_dir = ".";
    std::string config_path;
    IngestArgs ingest;
};

int cmd_graph(const CLI::App* cmd, GraphArgs& a) {
    ConfigResolver cfg{cmd, load_config_file(a.config_path)};
    cfg.resolve("--input", "input", a.input);
    cfg.resolve("--radius", "interaction_radius_m", a.radius);
    cfg.resolve("--seed", "seed", a.seed);
    cfg.resolve("--with-tiers", "with_tiers", a.with_tiers);
    const IngestConfig icfg = resolve_ingest(cfg, a.ingest, a.seed);
    if (a.radius <= 0.0) throw UsageError("--radius must be positive");
    if (a.input.empty()) throw UsageError("--input is required");

    const std::string input_bytes = read_file(a.input);
    ParseReport report;
    std::istringstream in(input_bytes);
    auto records = parse_records(in, report);
    if (!report.row_errors.empty())
        std::cerr << "warning: " << report.row_errors.size()
                  << " malformed rows skipped\n";

    const auto capped = dedupe_and_cap(filter_probes(records), icfg.overlap_cap);
    Rng layout_rng = substream(a.seed, StreamKind::Layout, 0);
    const auto positioned =
        randomize_positions(capped, icfg.randomization_radius_m, layout_rng);
    const auto profiles = assign_profiles(positioned, icfg, layout_rng);

    std::vector<GeoPoint> positions;
    positions.reserve(positioned.size());
    for (const auto& r : positioned) positions.push_back(r.pos);
    const auto graph = build_graph(positions, a.radius);
    const auto giant = giant_component(graph);

    std::vector<uint8_t> in_giant(positions.size(), 0);
    for (int32_t orig : giant.original_ids)
        in_giant[static_cast<size_t>(orig)] = 1;

    LayoutStats stats;
    stats.layout = 0;
    stats.graph_nodes = graph.node_count();
    stats.gc_nodes = giant.graph.node_count();
    stats.gc_edges = giant.graph.edge_count();
    stats.degrees = degree_stats(giant.graph);
    int64_t encrypted = 0;
    for (int32_t orig : giant.original_ids)
        if (profiles[static_cast<size_t>(orig)].encryption != Encryption::Open)
            ++encrypted;
    stats.f_encr = stats.gc_nodes == 0 ? 0.0
                                       : static_cast<double>(encrypted) /
                                             static_cast<double>(stats.gc_nodes);

    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    ManifestBuilder manifest("graph", cfg.echo);
    manifest.add_input(a.input, input_bytes);
    write_output(dir, "edges.csv", edge_list_csv(graph), manifest);
    write_output(dir, "nodes.csv", node_table_csv(profiles, in_giant, a.with_tiers),
                 manifest);
    write_output(dir, "stats.json", stats_json(stats, a.radius).dump(2) + "\n",
                 manifest);
    write_output(dir, "degree_hist.csv", degree_hist_csv(stats.degrees), manifest);
    finish(dir, manifest);
    std::cout << "graph: " << graph.node_count() << " nodes, " << graph.edge_count()
              << " edges, giant component " << giant.graph.node_count() << "\n";
    return 0;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string input;
    std::string nodes_file, edges_file;
    double radius = 45.0;
    int layouts = 5;
    int runs = 20;
    double ci = 0.90;
    uint64_t seed = 0;
    int threads = 0;
    int dump_every = 0;
    std::string out_dir = ".";
    std::string config_path;
    IngestArgs ingest;
    EpidemicArgs epidemic;
};

// Completes profiles loaded from a node table without a tier column.
void sample_missing_tiers(std::vector<NodeProfile>& profiles, const IngestConfig& icfg,
                          Rng& rng) {
    for (auto& p : profiles) {
        if (p.encryption == Encryption::Open && rng.bernoulli(icfg.nopass_fraction_of_open)) {
            p.tier = PasswordTier::Default;
        } else if (p.encryption == Encryption::Wpa) {
            p.tier = PasswordTier::Uncrackable;
        } else {
            const double u = rng.uniform01();
            if (u < icfg.dict1_fraction)
                p.tier = PasswordTier::InDict1;
            else if (u < icfg.dict1_fraction + icfg.dict2_fraction)
                p.tier = PasswordTier::InDict2;
            else
                p.tier = PasswordTier::Uncrackable;
        }
    }
}

int cmd_simulate(const CLI::App* cmd, SimulateArgs& a) {
    ConfigResolver cfg{cmd, load_config_file(a.config_path)};
    cfg.resolve("--input", "input", a.input);
    cfg.resolve("--nodes-file", "nodes_file", a.nodes_file);
    cfg.resolve("--edges-file", "edges_file", a.edges_file);
    cfg.resolve("--radius", "interaction_radius_m", a.radius);
    cfg.resolve("--layouts", "layouts", a.layouts);
    cfg.resolve("--runs", "runs_per_layout", a.runs);
    cfg.resolve("--ci", "ci_level", a.ci);
    cfg.resolve("--seed", "master_seed", a.seed);
    cfg.resolve("--dump-every", "dump_every", a.dump_every);
    const IngestConfig icfg = resolve_ingest(cfg, a.ingest, a.seed);
    const EpidemicParams params = resolve_epidemic(cfg, cmd, a.epidemic);

    const bool from_graph = !a.nodes_file.empty() || !a.edges_file.empty();
    if (from_graph && (a.nodes_file.empty() || a.edges_file.empty()))
        throw UsageError("--nodes-file and --edges-file must be given together");
    if (!from_graph && a.input.empty())
        throw UsageError("--input (or --nodes-file/--edges-file) is required");

    ExperimentConfig xcfg;
    xcfg.layout_randomizations = from_graph ? 1 : a.layouts;
    xcfg.runs_per_layout = a.runs;
    xcfg.ci_level = a.ci;
    xcfg.interaction_radius_m = a.radius;
    xcfg.master_seed = a.seed;
    xcfg.worker_count = a.threads;
    xcfg.validate();
    cfg.echo["total_runs"] = xcfg.total_runs();

    ManifestBuilder manifest("simulate", cfg.echo);

    std::vector<Substrate> substrates;
    if (from_graph) {
        const std::string nodes_bytes = read_file(a.nodes_file);
        const std::string edges_bytes = read_file(a.edges_file);
        manifest.add_input(a.nodes_file, nodes_bytes);
        manifest.add_input(a.edges_file, edges_bytes);
        std::istringstream nodes_in(nodes_bytes), edges_in(edges_bytes);
        LoadedGraph loaded = load_graph_csv(nodes_in, edges_in);
        if (!loaded.has_tiers) {
            Rng tier_rng = substream(a.seed, StreamKind::Layout, 0);
            sample_missing_tiers(loaded.profiles, icfg, tier_rng);
        }
        auto giant = giant_component(loaded.graph);
        Substrate sub;
        sub.stats.layout = 0;
        sub.stats.graph_nodes = loaded.graph.node_count();
        sub.stats.gc_nodes = giant.graph.node_count();
        sub.stats.gc_edges = giant.graph.edge_count();
        sub.stats.degrees = degree_stats(giant.graph);
        int64_t encrypted = 0;
        for (size_t i = 0; i < giant.original_ids.size(); ++i) {
            NodeProfile p = loaded.profiles[static_cast<size_t>(giant.original_ids[i])];
            p.node_id = static_cast<int32_t>(i);
            if (p.encryption != Encryption::Open) ++encrypted;
            sub.profiles.push_back(p);
        }
        sub.stats.f_encr = sub.stats.gc_nodes == 0
                               ? 0.0
                               : static_cast<double>(encrypted) /
                                     static_cast<double>(sub.stats.gc_nodes);
        sub.gc = std::move(giant.graph);
        substrates.push_back(std::move(sub));
    } else {
        const std::string input_bytes = read_file(a.input);
        manifest.add_input(a.input, input_bytes);
        ParseReport report;
        std::istringstream in(input_bytes);
        auto records = parse_records(in, report);
        const auto capped = dedupe_and_cap(filter_probes(records), icfg.overlap_cap);
        if (capped.empty()) throw std::runtime_error("no records survive filtering");
        for (int layout = 0; layout < xcfg.layout_randomizations; ++layout)
            substrates.push_back(build_substrate(capped, layout, xcfg, icfg));
    }

    const EnsembleResult result = run_ensemble_prebuilt(substrates, xcfg, params);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    write_output(dir, "means.csv", mean_curve_csv(result), manifest);
    write_output(dir, "ar_lower.csv", band_csv(result.ar_lower, result.tau_minutes),
                 manifest);
    write_output(dir, "ar_upper.csv", band_csv(result.ar_upper, result.tau_minutes),
                 manifest);
    write_output(dir, "finals.csv", finals_csv(result), manifest);

    if (a.dump_every > 0) {
        // replay of (layout 0, run 0), which shares its substream with the
        // ensemble, recording true classes every dump_every steps
        const Substrate* sub = nullptr;
        for (const auto& s : substrates)
            if (!s.stats.skipped) {
                sub = &s;
                break;
            }
        if (sub != nullptr) {
            std::string dump = "step,node_id,true_class\n";
            auto record = [&](const SimState& st, int64_t step) {
                for (int32_t v = 0; v < st.node_count(); ++v) {
                    dump += std::to_string(step);
                    dump += ',';
                    dump += std::to_string(v);
                    dump += ',';
                    dump += to_string(st.true_class(v));
                    dump += '\n';
                }
            };
            SimState state(sub->gc, sub->profiles, params,
                           substream(xcfg.master_seed, StreamKind::Run,
                                     static_cast<uint64_t>(sub->stats.layout), 0));
            record(state, 0);
            run(state, params.horizon_steps, [&](const SimState& st) {
                if (st.step_count() % a.dump_every == 0) record(st, st.step_count());
            });
            write_output(dir, "state_dump.csv", dump, manifest);
        }
    }

    json results;
    results["mean_final_attack_rate"] = result.mean_final_attack_rate;
    results["layouts"] = layout_stats_json(result.layouts);
    results["warnings"] = result.warnings;
    manifest.add_results(results);
    finish(dir, manifest);
    std::cout << "simulate: " << result.runs.size() << " runs, mean final attack rate "
              << fmt_double(result.mean_final_attack_rate) << "\n";
    return 0;
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
    std::string input;
    std::string radii_flag, wpa_flag;
    double radius = 45.0;
    int layouts = 5;
    int runs = 20;
    double ci = 0.90;
    uint64_t seed = 0;
    int threads = 0;
    std::string out_dir = ".";
    std::string config_path;
    IngestArgs ingest;
    EpidemicArgs epidemic;
};

int cmd_sweep(const CLI::App* cmd, SweepArgs& a) {
    ConfigResolver cfg{cmd, load_config_file(a.config_path)};
    cfg.resolve("--input", "input", a.input);
    cfg.resolve("--radius", "interaction_radius_m", a.radius);
    cfg.resolve("--layouts", "layouts", a.layouts);
    cfg.resolve("--runs", "runs_per_layout", a.runs);
    cfg.resolve("--ci", "ci_level", a.ci);
    cfg.resolve("--seed", "master_seed", a.seed);
    const IngestConfig icfg = resolve_ingest(cfg, a.ingest, a.seed);
    const EpidemicParams params = resolve_epidemic(cfg, cmd, a.epidemic);
    if (a.input.empty()) throw UsageError("--input is required");

    std::vector<double> radii, wpa;
    const auto* radii_opt = cmd->get_option_no_throw("--radii");
    const auto* wpa_opt = cmd->get_option_no_throw("--wpa");
    if (radii_opt != nullptr && radii_opt->count() > 0)
        radii = parse_double_list(a.radii_flag);
    else if (cfg.file.contains("radii"))
        radii = cfg.file["radii"].get<std::vector<double>>();
    if (wpa_opt != nullptr && wpa_opt->count() > 0) wpa = parse_double_list(a.wpa_flag);
    else if (cfg.file.contains("wpa_fractions"))
        wpa = cfg.file["wpa_fractions"].get<std::vector<double>>();

    if (radii.empty() == wpa.empty())
        throw UsageError("exactly one of --radii or --wpa must list at least one value");
    if (!radii.empty()) cfg.echo["radii"] = radii;
    if (!wpa.empty()) cfg.echo["wpa_fractions"] = wpa;

    ExperimentConfig xcfg;
    xcfg.layout_randomizations = a.layouts;
    xcfg.runs_per_layout = a.runs;
    xcfg.ci_level = a.ci;
    xcfg.interaction_radius_m = a.radius;
    xcfg.master_seed = a.seed;
    xcfg.worker_count = a.threads;
    xcfg.validate();

    const std::string input_bytes = read_file(a.input);
    ParseReport report;
    std::istringstream in(input_bytes);
    auto records = parse_records(in, report);

    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    ManifestBuilder manifest("sweep", cfg.echo);
    manifest.add_input(a.input, input_bytes);

    if (!radii.empty()) {
        for (double r : radii)
            if (r <= 0.0) throw UsageError("interaction radii must be positive");
        const auto rows = radius_sweep(records, radii, xcfg, icfg);
        std::string summary = "radius_m,mean_gc_size\n";
        std::string by_layout = "radius_m,layout,gc_size\n";
        for (const auto& row : rows) {
            summary += fmt_double(row.radius_m);
            summary += ',';
            summary += fmt_double(row.mean_gc);
            summary += '\n';
            for (size_t l = 0; l < row.gc_per_layout.size(); ++l) {
                by_layout += fmt_double(row.radius_m);
                by_layout += ',';
                by_layout += std::to_string(l);
                by_layout += ',';
                by_layout += std::to_string(row.gc_per_layout[l]);
                by_layout += '\n';
            }
        }
        write_output(dir, "sweep_radius.csv", summary, manifest);
        write_output(dir, "radius_by_layout.csv", by_layout, manifest);
    } else {
        const auto rows = immunization_sweep(records, wpa, xcfg, icfg, params);
        std::string summary =
            "wpa_fraction,mean_nonimmune_gc_size,mean_final_attack_rate\n";
        std::string by_layout =
            "wpa_fraction,layout,nonimmune_gc_size,mean_final_attack_rate\n";
        for (const auto& row : rows) {
            summary += fmt_double(row.fraction);
            summary += ',';
            summary += fmt_double(row.mean_nonimmune_gc);
            summary += ',';
            summary += fmt_double(row.mean_final_attack_rate);
            summary += '\n';
            for (const auto& lrow : row.per_layout) {
                by_layout += fmt_double(row.fraction);
                by_layout += ',';
                by_layout += std::to_string(lrow.layout);
                by_layout += ',';
                by_layout += std::to_string(lrow.nonimmune_gc);
                by_layout += ',';
                by_layout += fmt_double(lrow.mean_final_attack_rate);
                by_layout += '\n';
            }
        }
        write_output(dir, "sweep_wpa.csv", summary, manifest);
        write_output(dir, "wpa_by_layout.csv", by_layout, manifest);
    }
    finish(dir, manifest);
    return 0;
}

// ---- report -----------------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> manifests;
    std::string out_dir = ".";
};

int cmd_report(ReportArgs& a) {
    if (a.manifests.empty()) throw UsageError("report needs at least one manifest");

    json cfg_echo;
    cfg_echo["manifests"] = a.manifests;
    ManifestBuilder manifest("report", cfg_echo);

    std::string summary =
        "manifest,command,tool_version,master_seed,mean_final_attack_rate,mean_k,fluct_ratio\n";
    std::vector<std::pair<double, DegreeStats>> points;
    std::string scatter = "manifest,mean_k,fluct_ratio,final_attack_rate\n";

    for (const auto& path : a.manifests) {
        const std::string bytes = read_file(path);
        manifest.add_input(path, bytes);
        json j = json::parse(bytes);
        const std::string command = j.value("command", "?");
        summary += path;
        summary += ',';
        summary += command;
        summary += ',';
        summary += j.value("tool_version", "?");
        summary += ',';
        uint64_t seed = 0;
        if (j.contains("config")) {
            const auto& c = j["config"];
            if (c.contains("master_seed")) seed = c["master_seed"].get<uint64_t>();
            else if (c.contains("seed")) seed = c["seed"].get<uint64_t>();
        }
        summary += std::to_string(seed);
        if (command == "simulate" && j.contains("results")) {
            const auto& res = j["results"];
            const double final_ar = res.value("mean_final_attack_rate", 0.0);
            double mean_k = 0.0, fluct = 0.0;
            int64_t n_layouts = 0;
            for (const auto& l : res["layouts"]) {
                if (l.value("skipped", false)) continue;
                mean_k += l.value("mean_k", 0.0);
                fluct += l.value("fluct_ratio", 0.0);
                ++n_layouts;
            }
            if (n_layouts > 0) {
                mean_k /= static_cast<double>(n_layouts);
                fluct /= static_cast<double>(n_layouts);
            }
            summary += ',';
            summary += fmt_double(final_ar);
            summary += ',';
            summary += fmt_double(mean_k);
            summary += ',';
            summary += fmt_double(fluct);
            DegreeStats ds;
            ds.mean_degree = mean_k;
            ds.fluctuation_ratio = fluct;
            points.emplace_back(final_ar, ds);
            scatter += path;
            scatter += ',';
            scatter += fmt_double(mean_k);
            scatter += ',';
            scatter += fmt_double(fluct);
            scatter += ',';
            scatter += fmt_double(final_ar);
            scatter += '\n';
        } else {
            summary += ",,,";
        }
        summary += '\n';
    }

    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    write_output(dir, "summary.csv", summary, manifest);
    if (points.size() >= 3) {
        const auto corr = correlate_final_ar(points);
        std::string lines = "pair,pearson_r\n";
        lines += "final_attack_rate_vs_mean_k,";
        lines += corr.vs_mean_degree ? fmt_double(*corr.vs_mean_degree) : "undefined";
        lines += '\n';
        lines += "final_attack_rate_vs_fluct_ratio,";
        lines +=
            corr.vs_fluctuation_ratio ? fmt_double(*corr.vs_fluctuation_ratio) : "undefined";
        lines += '\n';
        write_output(dir, "scatter.csv", scatter, manifest);
        write_output(dir, "correlations.csv", lines, manifest);
    }
    finish(dir, manifest);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"WiFi proximity-network malware epidemic simulator"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic router corpus");
    synth->add_option("--nodes", synth_args.nodes, "router count")->required();
    synth->add_option("--encrypted", synth_args.encrypted, "encrypted fraction");
    synth->add_option("--bbox", synth_args.bbox_flag,
                      "lat_min,lon_min,lat_max,lon_max (default: auto-sized)");
    synth->add_option("--clusters", synth_args.clusters, "Gaussian cluster count");
    synth->add_option("--cluster-sigma", synth_args.cluster_sigma_m,
                      "cluster spread, meters");
    synth->add_option("--cluster-frac", synth_args.cluster_fraction,
                      "share of nodes in clusters");
    synth->add_option("--seed", synth_args.seed, "rng seed");
    synth->add_option("--out-dir", synth_args.out_dir, "output directory");
    synth->add_option("--config", synth_args.config_path, "JSON config or manifest");

    GraphArgs graph_args;
    auto* graph = app.add_subcommand("graph", "build the proximity graph of a corpus");
    graph->add_option("--input", graph_args.input, "corpus CSV")->required();
    graph->add_option("--radius", graph_args.radius, "interaction radius, meters");
    graph->add_option("--seed", graph_args.seed, "rng seed");
    graph->add_flag("--with-tiers", graph_args.with_tiers,
                    "include latent password tiers in the node table");
    graph->add_option("--out-dir", graph_args.out_dir, "output directory");
    graph->add_option("--config", graph_args.config_path, "JSON config or manifest");
    add_ingest_flags(graph, graph_args.ingest);

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "run an epidemic ensemble");
    simulate->add_option("--input", sim_args.input, "corpus CSV");
    simulate->add_option("--nodes-file", sim_args.nodes_file,
                         "prebuilt node table (with --edges-file)");
    simulate->add_option("--edges-file", sim_args.edges_file, "prebuilt edge list");
    simulate->add_option("--radius", sim_args.radius, "interaction radius, meters");
    simulate->add_option("--layouts", sim_args.layouts, "position randomizations");
    simulate->add_option("--runs", sim_args.runs, "runs per layout");
    simulate->add_option("--ci", sim_args.ci, "confidence band level");
    simulate->add_option("--seed", sim_args.seed, "master seed");
    simulate->add_option("--threads", sim_args.threads,
                         "worker threads (0 = hardware)");
    simulate->add_option("--dump-every", sim_args.dump_every,
                         "dump node states every K steps (0 = off)");
    simulate->add_option("--out-dir", sim_args.out_dir, "output directory");
    simulate->add_option("--config", sim_args.config_path, "JSON config or manifest");
    add_ingest_flags(simulate, sim_args.ingest);
    add_epidemic_flags(simulate, sim_args.epidemic);

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "sweep interaction radius or immunity");
    sweep->add_option("--input", sweep_args.input, "corpus CSV")->required();
    sweep->add_option("--radii", sweep_args.radii_flag,
                      "comma-separated interaction radii");
    sweep->add_option("--wpa", sweep_args.wpa_flag,
                      "comma-separated extra immune fractions");
    sweep->add_option("--radius", sweep_args.radius,
                      "interaction radius for the immunity sweep");
    sweep->add_option("--layouts", sweep_args.layouts, "position randomizations");
    sweep->add_option("--runs", sweep_args.runs, "runs per layout");
    sweep->add_option("--ci", sweep_args.ci, "confidence band level");
    sweep->add_option("--seed", sweep_args.seed, "master seed");
    sweep->add_option("--threads", sweep_args.threads, "worker threads");
    sweep->add_option("--out-dir", sweep_args.out_dir, "output directory");
    sweep->add_option("--config", sweep_args.config_path, "JSON config or manifest");
    add_ingest_flags(sweep, sweep_args.ingest);
    add_epidemic_flags(sweep, sweep_args.epidemic);

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "summarize run manifests");
    report->add_option("manifests", report_args.manifests, "manifest.json files");
    report->add_option("--out-dir", report_args.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(synth)) return cmd_synth(synth, synth_args);
        if (app.got_subcommand(graph)) return cmd_graph(graph, graph_args);
        if (app.got_subcommand(simulate)) return cmd_simulate(simulate, sim_args);
        if (app.got_subcommand(sweep)) return cmd_sweep(sweep, sweep_args);
        if (app.got_subcommand(report)) return cmd_report(report_args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
