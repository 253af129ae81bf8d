#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "wifiepi/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = WIFIEPI_CLI_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("wifiepi_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str(const std::string& sub = "") const {
        return (sub.empty() ? path : path / sub).string();
    }
};

std::string slurp(const fs::path& p) { return wifiepi::read_file(p); }

void write_corpus(const fs::path& p, const std::string& body) {
    std::ofstream out(p);
    out << "bssid,lat,lon,type,encryption\n" << body;
}

// three collinear routers spaced 40 m apart (0.00036 degrees of latitude)
void write_collinear_corpus(const fs::path& p) {
    write_corpus(p,
                 "A,41.880000,-87.630000,infra,none\n"
                 "B,41.880360,-87.630000,infra,none\n"
                 "C,41.880720,-87.630000,infra,none\n");
}

} // namespace

TEST_CASE("synth: missing required flag is a usage error") {
    CHECK(run_cli("synth") == 2);
}

TEST_CASE("unknown subcommand is a usage error") {
    CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("help exits cleanly") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("synth --help") == 0);
}

TEST_CASE("synth writes a parseable corpus and is deterministic") {
    TempDir d1, d2;
    REQUIRE(run_cli("synth --nodes 1000 --encrypted 0.337 --seed 7 --out-dir " +
                    d1.str()) == 0);
    REQUIRE(run_cli("synth --nodes 1000 --encrypted 0.337 --seed 7 --out-dir " +
                    d2.str()) == 0);
    CHECK(slurp(d1.path / "corpus.csv") == slurp(d2.path / "corpus.csv"));
    CHECK(slurp(d1.path / "manifest.json") == slurp(d2.path / "manifest.json"));

    std::istringstream in(slurp(d1.path / "corpus.csv"));
    wifiepi::ParseReport report;
    auto recs = wifiepi::parse_records(in, report);
    CHECK(recs.size() == 1000);
    CHECK(report.row_errors.empty());
}

TEST_CASE("graph: radius 45 connects the collinear corpus, radius 15 does not") {
    TempDir d;
    write_collinear_corpus(d.path / "corpus.csv");

    TempDir out45;
    REQUIRE(run_cli("graph --input " + d.str("corpus.csv") +
                    " --radius 45 --rand-radius 0 --out-dir " + out45.str()) == 0);
    json stats = json::parse(slurp(out45.path / "stats.json"));
    CHECK(stats["N"] == 3);
    CHECK(stats["total_nodes"] == 3);
    CHECK(stats["k_max"] == 2);

    const std::string edges = slurp(out45.path / "edges.csv");
    CHECK(edges == "node_u,node_v\n0,1\n1,2\n");

    TempDir out15;
    REQUIRE(run_cli("graph --input " + d.str("corpus.csv") +
                    " --radius 15 --rand-radius 0 --out-dir " + out15.str()) == 0);
    json stats15 = json::parse(slurp(out15.path / "stats.json"));
    CHECK(stats15["N"] == 1); // three singletons
    CHECK(slurp(out15.path / "edges.csv") == "node_u,node_v\n");
}

TEST_CASE("graph: zero radius is a usage error, unreadable input a runtime error") {
    TempDir d;
    write_collinear_corpus(d.path / "corpus.csv");
    CHECK(run_cli("graph --input " + d.str("corpus.csv") + " --radius 0 --out-dir " +
                  d.str()) == 2);
    CHECK(run_cli("graph --input " + d.str("missing.csv") + " --out-dir " + d.str()) ==
          1);
}

TEST_CASE("simulate: default configuration is echoed in the manifest") {
    TempDir corpus_dir;
    REQUIRE(run_cli("synth --nodes 120 --encrypted 0.3 --seed 3 --out-dir " +
                    corpus_dir.str()) == 0);
    TempDir out;
    REQUIRE(run_cli("simulate --input " + corpus_dir.str("corpus.csv") +
                    " --seed 11 --threads 2 --out-dir " + out.str()) == 0);
    json manifest = json::parse(slurp(out.path / "manifest.json"));
    const auto& cfg = manifest["config"];
    CHECK(cfg["horizon_steps"] == 4032);
    CHECK(cfg["seed_count"] == 5);
    CHECK(cfg["layouts"] == 5);
    CHECK(cfg["runs_per_layout"] == 20);
    CHECK(cfg["total_runs"] == 100);
    CHECK(cfg["ci_level"] == 0.9);
    CHECK(cfg["interaction_radius_m"] == 45.0);
    CHECK(cfg["tau_minutes"] == 5.0);
    CHECK(cfg["tau1_minutes"] == 10.5);
    CHECK(cfg["tau2_minutes"] == 700.0);
    CHECK(cfg["tau_wep_minutes"] == 4320.0);
    CHECK(manifest["results"].contains("mean_final_attack_rate"));
    REQUIRE(manifest["results"]["layouts"].size() == 5);
    CHECK(manifest["results"]["layouts"][0].contains("mean_k"));
}

TEST_CASE("simulate: worst-case preset lands in the manifest") {
    TempDir corpus_dir;
    REQUIRE(run_cli("synth --nodes 60 --encrypted 0.3 --seed 5 --out-dir " +
                    corpus_dir.str()) == 0);
    TempDir out;
    REQUIRE(run_cli("simulate --input " + corpus_dir.str("corpus.csv") +
                    " --preset worst-case --layouts 1 --runs 2 --horizon 50 "
                    "--out-dir " +
                    out.str()) == 0);
    json manifest = json::parse(slurp(out.path / "manifest.json"));
    CHECK(manifest["config"]["preset"] == "worst-case");
    CHECK(manifest["config"]["tau1_minutes"] == 6.0);
    CHECK(manifest["config"]["tau2_minutes"] == 400.0);
    CHECK(manifest["config"]["tau_wep_minutes"] == 2880.0);
}

TEST_CASE("simulate: single run collapses the confidence band") {
    TempDir corpus_dir;
    REQUIRE(run_cli("synth --nodes 80 --encrypted 0.2 --seed 6 --out-dir " +
                    corpus_dir.str()) == 0);
    TempDir out;
    REQUIRE(run_cli("simulate --input " + corpus_dir.str("corpus.csv") +
                    " --layouts 1 --runs 1 --horizon 40 --out-dir " + out.str()) == 0);
    CHECK(slurp(out.path / "ar_lower.csv") == slurp(out.path / "ar_upper.csv"));
}

TEST_CASE("simulate: rerun from the manifest is byte-identical") {
    TempDir corpus_dir;
    REQUIRE(run_cli("synth --nodes 150 --encrypted 0.35 --seed 9 --out-dir " +
                    corpus_dir.str()) == 0);
    TempDir out1, out2;
    REQUIRE(run_cli("simulate --input " + corpus_dir.str("corpus.csv") +
                    " --layouts 2 --runs 3 --horizon 120 --seed 77 --threads 2 "
                    "--out-dir " +
                    out1.str()) == 0);
    REQUIRE(run_cli("simulate --config " + out1.str("manifest.json") +
                    " --threads 1 --out-dir " + out2.str()) == 0);
    for (const char* name :
         {"means.csv", "ar_lower.csv", "ar_upper.csv", "finals.csv", "manifest.json"})
        REQUIRE(slurp(out1.path / name) == slurp(out2.path / name));
}

TEST_CASE("simulate accepts a prebuilt graph") {
    TempDir corpus_dir;
    REQUIRE(run_cli("synth --nodes 150 --encrypted 0.3 --seed 13 --out-dir " +
                    corpus_dir.str()) == 0);
    TempDir graph_out;
    REQUIRE(run_cli("graph --input " + corpus_dir.str("corpus.csv") +
                    " --with-tiers --seed 4 --out-dir " + graph_out.str()) == 0);
    TempDir out;
    REQUIRE(run_cli("simulate --nodes-file " + graph_out.str("nodes.csv") +
                    " --edges-file " + graph_out.str("edges.csv") +
                    " --runs 2 --horizon 60 --out-dir " + out.str()) == 0);
    json manifest = json::parse(slurp(out.path / "manifest.json"));
    CHECK(manifest["results"]["layouts"].size() == 1);
}

TEST_CASE("simulate writes a state dump on request") {
    TempDir corpus_dir;
    REQUIRE(run_cli("synth --nodes 50 --encrypted 0.2 --seed 2 --out-dir " +
                    corpus_dir.str()) == 0);
    TempDir out;
    REQUIRE(run_cli("simulate --input " + corpus_dir.str("corpus.csv") +
                    " --layouts 1 --runs 1 --horizon 20 --dump-every 10 --out-dir " +
                    out.str()) == 0);
    const std::string dump = slurp(out.path / "state_dump.csv");
    CHECK(dump.rfind("step,node_id,true_class\n", 0) == 0);
    CHECK(dump.find("\n10,") != std::string::npos);
    CHECK(dump.find("\n20,") != std::string::npos);
}

TEST_CASE("sweep over radii produces a monotone table") {
    TempDir corpus_dir;
    REQUIRE(run_cli("synth --nodes 400 --encrypted 0.3 --seed 21 --out-dir " +
                    corpus_dir.str()) == 0);
    TempDir out;
    REQUIRE(run_cli("sweep --input " + corpus_dir.str("corpus.csv") +
                    " --radii 15,30,45,100 --layouts 2 --out-dir " + out.str()) == 0);
    std::istringstream table(slurp(out.path / "sweep_radius.csv"));
    std::string line;
    std::getline(table, line);
    REQUIRE(line == "radius_m,mean_gc_size");
    double prev = 0.0;
    int rows = 0;
    while (std::getline(table, line)) {
        const auto comma = line.find(',');
        const double gc = std::stod(line.substr(comma + 1));
        REQUIRE(gc >= prev);
        prev = gc;
        ++rows;
    }
    CHECK(rows == 4);
}

TEST_CASE("sweep validation: empty or conflicting lists") {
    TempDir corpus_dir;
    REQUIRE(run_cli("synth --nodes 50 --encrypted 0.3 --seed 1 --out-dir " +
                    corpus_dir.str()) == 0);
    const std::string input = " --input " + corpus_dir.str("corpus.csv");
    CHECK(run_cli("sweep" + input + " --radii \"\" --out-dir " + corpus_dir.str()) ==
          2);
    CHECK(run_cli("sweep" + input + " --out-dir " + corpus_dir.str()) == 2);
    CHECK(run_cli("sweep" + input + " --radii 45 --wpa 0,1 --out-dir " +
                  corpus_dir.str()) == 2);
}

TEST_CASE("sweep over immunity fractions trends the giant component down") {
    TempDir corpus_dir;
    REQUIRE(run_cli("synth --nodes 300 --encrypted 0.3 --seed 33 --out-dir " +
                    corpus_dir.str()) == 0);
    TempDir out;
    REQUIRE(run_cli("sweep --input " + corpus_dir.str("corpus.csv") +
                    " --wpa 0,0.5,1.0 --layouts 2 --runs 1 --horizon 30 --out-dir " +
                    out.str()) == 0);
    std::istringstream table(slurp(out.path / "sweep_wpa.csv"));
    std::string line;
    std::getline(table, line);
    REQUIRE(line == "wpa_fraction,mean_nonimmune_gc_size,mean_final_attack_rate");
    std::vector<double> gc;
    while (std::getline(table, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        gc.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    }
    REQUIRE(gc.size() == 3);
    CHECK(gc[0] >= gc[1]);
    CHECK(gc[1] >= gc[2]);
    CHECK(gc[2] == 0.0);
}

TEST_CASE("report summarizes manifests and correlates three ensembles") {
    TempDir corpus_a, corpus_b, corpus_c;
    REQUIRE(run_cli("synth --nodes 150 --encrypted 0.2 --seed 41 --out-dir " +
                    corpus_a.str()) == 0);
    REQUIRE(run_cli("synth --nodes 150 --encrypted 0.3 --seed 42 --out-dir " +
                    corpus_b.str()) == 0);
    REQUIRE(run_cli("synth --nodes 150 --encrypted 0.4 --seed 43 --out-dir " +
                    corpus_c.str()) == 0);
    TempDir sim_a, sim_b, sim_c;
    for (auto [corpus, sim] : {std::pair{&corpus_a, &sim_a}, {&corpus_b, &sim_b},
                               {&corpus_c, &sim_c}})
        REQUIRE(run_cli("simulate --input " + corpus->str("corpus.csv") +
                        " --layouts 1 --runs 2 --horizon 60 --out-dir " +
                        sim->str()) == 0);
    TempDir out;
    REQUIRE(run_cli("report " + sim_a.str("manifest.json") + " " +
                    sim_b.str("manifest.json") + " " + sim_c.str("manifest.json") +
                    " --out-dir " + out.str()) == 0);
    const std::string summary = slurp(out.path / "summary.csv");
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 4); // header + 3 rows
    CHECK(fs::exists(out.path / "correlations.csv"));
    CHECK(fs::exists(out.path / "scatter.csv"));
    const std::string corr = slurp(out.path / "correlations.csv");
    CHECK(corr.find("final_attack_rate_vs_mean_k,") != std::string::npos);
}
