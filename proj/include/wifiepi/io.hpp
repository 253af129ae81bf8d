#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wifiepi/epidemic.hpp"
#include "wifiepi/experiment.hpp"
#include "wifiepi/graph.hpp"
#include "wifiepi/ingest.hpp"

namespace wifiepi {

inline constexpr const char* kToolVersion = "0.1.0";

// Shortest round-trip decimal form, locale independent.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// FNV-1a 64-bit content digest for manifest integrity hints.
inline std::string fnv1a64_hex(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string corpus_csv(const std::vector<RouterRecord>& records) {
    std::string out = "bssid,lat,lon,type,encryption\n";
    for (const auto& r : records) {
        out += r.bssid;
        out += ',';
        out += fmt_double(r.pos.lat);
        out += ',';
        out += fmt_double(r.pos.lon);
        out += ',';
        out += to_string(r.kind);
        out += ',';
        out += to_string(r.encryption);
        out += '\n';
    }
    return out;
}

inline std::string edge_list_csv(const ProximityGraph& g) {
    std::string out = "node_u,node_v\n";
    for (int32_t u = 0; u < g.node_count(); ++u) {
        for (int32_t v : g.neighbors_of(u)) {
            if (v <= u) continue;
            out += std::to_string(u);
            out += ',';
            out += std::to_string(v);
            out += '\n';
        }
    }
    return out;
}

inline std::string node_table_csv(const std::vector<NodeProfile>& profiles,
                                  const std::vector<uint8_t>& in_giant,
                                  bool with_tiers) {
    std::string out = with_tiers ? "node_id,lat,lon,encryption,in_giant,tier\n"
                                 : "node_id,lat,lon,encryption,in_giant\n";
    for (size_t i = 0; i < profiles.size(); ++i) {
        const auto& p = profiles[i];
        out += std::to_string(p.node_id);
        out += ',';
        out += fmt_double(p.pos.lat);
        out += ',';
        out += fmt_double(p.pos.lon);
        out += ',';
        out += to_string(p.encryption);
        out += ',';
        out += in_giant.empty() ? '1' : static_cast<char>('0' + (in_giant[i] ? 1 : 0));
        if (with_tiers) {
            out += ',';
            out += to_string(p.tier);
        }
        out += '\n';
    }
    return out;
}

inline std::string degree_hist_csv(const DegreeStats& stats) {
    std::string out = "degree,count\n";
    for (const auto& [k, c] : stats.histogram) {
        out += std::to_string(k);
        out += ',';
        out += std::to_string(c);
        out += '\n';
    }
    return out;
}

// Giant-component indicator blob (N, f_encr, k_max, mean_k, fluct_ratio)
// plus context keys.
inline nlohmann::json stats_json(const LayoutStats& s, double interaction_radius_m) {
    nlohmann::json j;
    j["N"] = s.gc_nodes;
    j["f_encr"] = s.f_encr;
    j["k_max"] = s.degrees.k_max;
    j["mean_k"] = s.degrees.mean_degree;
    j["fluct_ratio"] = s.degrees.fluctuation_ratio;
    j["gc_edges"] = s.gc_edges;
    j["total_nodes"] = s.graph_nodes;
    j["interaction_radius_m"] = interaction_radius_m;
    return j;
}

inline std::string series_csv_header() {
    return "step,minutes,s_nopass,s_pass1,s_pass2,s_wep,infected,r_wpa,r_hidden,attack_rate\n";
}

inline std::string series_csv(const TimeSeries& series) {
    std::string out = series_csv_header();
    for (const auto& snap : series.snapshots) {
        out += std::to_string(snap.step);
        out += ',';
        out += fmt_double(static_cast<double>(snap.step) * series.tau_minutes);
        for (auto c : snap.counts) {
            out += ',';
            out += std::to_string(c);
        }
        out += ',';
        out += fmt_double(attack_rate(snap));
        out += '\n';
    }
    return out;
}

// Ensemble mean curve: mean true-class counts and mean attack rate.
inline std::string mean_curve_csv(const EnsembleResult& result) {
    std::string out = series_csv_header();
    for (size_t t = 0; t < result.ar_mean.size(); ++t) {
        out += std::to_string(t);
        out += ',';
        out += fmt_double(static_cast<double>(t) * result.tau_minutes);
        for (auto c : result.mean_counts[t]) {
            out += ',';
            out += fmt_double(c);
        }
        out += ',';
        out += fmt_double(result.ar_mean[t]);
        out += '\n';
    }
    return out;
}

inline std::string band_csv(const std::vector<double>& curve, double tau_minutes) {
    std::string out = "step,minutes,attack_rate\n";
    for (size_t t = 0; t < curve.size(); ++t) {
        out += std::to_string(t);
        out += ',';
        out += fmt_double(static_cast<double>(t) * tau_minutes);
        out += ',';
        out += fmt_double(curve[t]);
        out += '\n';
    }
    return out;
}

inline std::string finals_csv(const EnsembleResult& result) {
    std::string out =
        "layout,run,final_attack_rate,median_open_infection_step,median_wep_infection_step\n";
    for (const auto& r : result.runs) {
        out += std::to_string(r.layout);
        out += ',';
        out += std::to_string(r.run);
        out += ',';
        out += fmt_double(r.final_attack_rate);
        out += ',';
        out += fmt_double(r.median_open_infection_step);
        out += ',';
        out += fmt_double(r.median_wep_infection_step);
        out += '\n';
    }
    return out;
}

inline nlohmann::json layout_stats_json(const std::vector<LayoutStats>& layouts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : layouts) {
        nlohmann::json j;
        j["layout"] = s.layout;
        j["N"] = s.gc_nodes;
        j["f_encr"] = s.f_encr;
        j["k_max"] = s.degrees.k_max;
        j["mean_k"] = s.degrees.mean_degree;
        j["fluct_ratio"] = s.degrees.fluctuation_ratio;
        j["gc_edges"] = s.gc_edges;
        j["total_nodes"] = s.graph_nodes;
        j["skipped"] = s.skipped;
        arr.push_back(j);
    }
    return arr;
}

// Run manifest: command, resolved config, input digests, output names.
// Output filenames are stored relative to the output directory so a rerun
// into a fresh directory reproduces every file byte for byte.
struct ManifestBuilder {
    nlohmann::json j;

    ManifestBuilder(const std::string& command, const nlohmann::json& config) {
        j["command"] = command;
        j["tool_version"] = kToolVersion;
        j["config"] = config;
        j["inputs"] = nlohmann::json::object();
        j["outputs"] = nlohmann::json::array();
    }

    void add_input(const std::string& name, const std::string& bytes) {
        j["inputs"][name] = {{"fnv1a64", fnv1a64_hex(bytes)}, {"bytes", bytes.size()}};
    }

    void add_output(const std::string& filename) { j["outputs"].push_back(filename); }

    void add_results(const nlohmann::json& results) { j["results"] = results; }

    std::string dump() const { return j.dump(2) + "\n"; }
};

// ---- loaders for prebuilt graph inputs ----------------------------------

struct LoadedGraph {
    ProximityGraph graph;
    std::vector<NodeProfile> profiles;
    bool has_tiers = false;
};

// Reads a node table (node_id,lat,lon,encryption[,in_giant][,tier]) and an
// edge list (node_u,node_v) as written by the graph command. Encryption is
// taken as final (no WPA/WEP re-split).
inline LoadedGraph load_graph_csv(std::istream& nodes_in, std::istream& edges_in) {
    LoadedGraph out;
    std::string line;

    if (!std::getline(nodes_in, line))
        throw ParseError("node table: missing header");
    auto header = detail::split_csv(line);
    std::unordered_map<std::string, size_t> col;
    for (size_t i = 0; i < header.size(); ++i)
        col.emplace(detail::lower(header[i]), i);
    for (const char* required : {"node_id", "lat", "lon", "encryption"})
        if (!col.count(required))
            throw ParseError(std::string("node table: missing column: ") + required);
    out.has_tiers = col.count("tier") > 0;

    size_t need = 0;
    for (const auto& [name, idx] : col) need = std::max(need, idx + 1);
    while (std::getline(nodes_in, line)) {
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv(line);
        if (fields.size() < need) throw ParseError("node table: too few fields");
        NodeProfile p;
        double id_raw = 0.0;
        if (!detail::parse_double(fields[col["node_id"]], id_raw) ||
            !detail::parse_double(fields[col["lat"]], p.pos.lat) ||
            !detail::parse_double(fields[col["lon"]], p.pos.lon))
            throw ParseError("node table: unparseable row");
        p.node_id = static_cast<int32_t>(id_raw);
        const std::string enc = detail::lower(fields[col["encryption"]]);
        p.encryption = enc == "wep" ? Encryption::Wep
                       : enc == "wpa" ? Encryption::Wpa
                                      : Encryption::Open;
        if (out.has_tiers) {
            const std::string tier = detail::lower(fields[col["tier"]]);
            p.tier = tier == "in_dict1"      ? PasswordTier::InDict1
                     : tier == "in_dict2"    ? PasswordTier::InDict2
                     : tier == "uncrackable" ? PasswordTier::Uncrackable
                                             : PasswordTier::Default;
        }
        if (p.node_id != static_cast<int32_t>(out.profiles.size()))
            throw ParseError("node table: node_id values must be dense and ascending");
        out.profiles.push_back(p);
    }

    const auto n = static_cast<int32_t>(out.profiles.size());
    std::vector<std::vector<int32_t>> adj(static_cast<size_t>(n));
    if (!std::getline(edges_in, line))
        throw ParseError("edge list: missing header");
    while (std::getline(edges_in, line)) {
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv(line);
        double u_raw = 0.0, v_raw = 0.0;
        if (fields.size() < 2 || !detail::parse_double(fields[0], u_raw) ||
            !detail::parse_double(fields[1], v_raw))
            throw ParseError("edge list: unparseable row");
        const auto u = static_cast<int32_t>(u_raw);
        const auto v = static_cast<int32_t>(v_raw);
        if (u < 0 || v < 0 || u >= n || v >= n || u == v)
            throw ParseError("edge list: node id out of range");
        adj[static_cast<size_t>(u)].push_back(v);
        adj[static_cast<size_t>(v)].push_back(u);
    }

    auto& g = out.graph;
    g.positions.reserve(static_cast<size_t>(n));
    for (const auto& p : out.profiles) g.positions.push_back(p.pos);
    g.offsets.assign(static_cast<size_t>(n) + 1, 0);
    for (int32_t v = 0; v < n; ++v) {
        auto& nb = adj[static_cast<size_t>(v)];
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        g.offsets[v + 1] = g.offsets[v] + static_cast<int64_t>(nb.size());
    }
    for (const auto& nb : adj)
        g.neighbors.insert(g.neighbors.end(), nb.begin(), nb.end());
    return out;
}

} // namespace wifiepi
