#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wifiepi/records.hpp"
#include "wifiepi/rng.hpp"

namespace wifiepi {

struct RowError {
    int64_t line = 0; // 1-based line number in the input
    std::string message;
};

struct ParseReport {
    int64_t data_rows = 0; // rows attempted (valid + failed)
    int64_t unknown_encryption = 0;
    std::vector<RowError> row_errors;
};

class ParseError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
        size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

inline bool parse_double(std::string_view s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

} // namespace detail

// Parses a comma-separated corpus with a header row naming the columns
// bssid, lat, lon, type, encryption (any order, extra columns ignored).
// Malformed rows are collected in `report`, not thrown, unless they exceed
// 10% of the data rows; a missing required column is fatal.
inline std::vector<RouterRecord> parse_records(std::istream& in, ParseReport& report) {
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("empty input: missing header row");

    auto header = detail::split_csv(line);
    std::unordered_map<std::string, size_t> col;
    for (size_t i = 0; i < header.size(); ++i)
        col.emplace(detail::lower(header[i]), i);
    for (const char* required : {"bssid", "lat", "lon", "type", "encryption"})
        if (!col.count(required))
            throw ParseError(std::string("missing required column: ") + required);
    const size_t c_bssid = col["bssid"], c_lat = col["lat"], c_lon = col["lon"],
                 c_type = col["type"], c_enc = col["encryption"];
    const size_t need = std::max({c_bssid, c_lat, c_lon, c_type, c_enc}) + 1;

    std::vector<RouterRecord> records;
    int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        ++report.data_rows;
        auto fields = detail::split_csv(line);
        auto fail = [&](const char* msg) {
            report.row_errors.push_back({line_no, msg});
        };
        if (fields.size() < need) {
            fail("too few fields");
            continue;
        }
        RouterRecord rec;
        rec.bssid = std::string(fields[c_bssid]);
        if (rec.bssid.empty()) {
            fail("empty bssid");
            continue;
        }
        if (!detail::parse_double(fields[c_lat], rec.pos.lat) ||
            !detail::parse_double(fields[c_lon], rec.pos.lon)) {
            fail("unparseable coordinate");
            continue;
        }
        if (rec.pos.lat < -90.0 || rec.pos.lat > 90.0 ||
            rec.pos.lon < -180.0 || rec.pos.lon > 180.0) {
            fail("coordinate out of range");
            continue;
        }
        rec.kind = detail::lower(fields[c_type]) == "probe" ? RecordKind::Probe
                                                            : RecordKind::Infrastructure;
        std::string enc = detail::lower(fields[c_enc]);
        if (enc == "none" || enc == "open") {
            rec.encryption = Encryption::Open;
        } else if (enc == "wep") {
            rec.encryption = Encryption::Wep;
        } else if (enc == "wpa") {
            rec.encryption = Encryption::Wpa;
        } else {
            rec.encryption = Encryption::Open;
            ++report.unknown_encryption;
        }
        records.push_back(std::move(rec));
    }

    const auto failed = static_cast<int64_t>(report.row_errors.size());
    if (failed * 10 > report.data_rows)
        throw ParseError("more than 10% of data rows malformed (" +
                         std::to_string(failed) + " of " +
                         std::to_string(report.data_rows) + ")");
    return records;
}

// Drops probe records (signals that do not originate from routers).
inline std::vector<RouterRecord> filter_probes(const std::vector<RouterRecord>& records) {
    std::vector<RouterRecord> out;
    out.reserve(records.size());
    for (const auto& r : records)
        if (r.kind != RecordKind::Probe) out.push_back(r);
    return out;
}

// Removes duplicate BSSIDs (first occurrence kept), then keeps at most
// `overlap_cap` records per exact raw (lat, lon) location, in input order.
inline std::vector<RouterRecord> dedupe_and_cap(const std::vector<RouterRecord>& records,
                                                int overlap_cap) {
    if (overlap_cap < 1)
        throw std::invalid_argument("overlap_cap must be >= 1");
    std::vector<RouterRecord> out;
    out.reserve(records.size());
    std::unordered_set<std::string> seen_bssid;
    std::unordered_map<std::string, int> per_location;
    for (const auto& r : records) {
        if (!seen_bssid.insert(r.bssid).second) continue;
        std::string key(reinterpret_cast<const char*>(&r.pos), sizeof(GeoPoint));
        if (++per_location[key] > overlap_cap) continue;
        out.push_back(r);
    }
    return out;
}

// Re-draws each record's position uniformly over the disk of the given
// radius around its recorded GPS fix (uniform angle, radius density ~ r).
inline std::vector<RouterRecord> randomize_positions(const std::vector<RouterRecord>& records,
                                                     double randomization_radius_m,
                                                     Rng& rng) {
    if (randomization_radius_m < 0.0)
        throw std::invalid_argument("randomization_radius_m must be >= 0");
    std::vector<RouterRecord> out(records);
    if (randomization_radius_m == 0.0) return out;
    for (auto& r : out) {
        const double angle = rng.uniform01() * 2.0 * kPi;
        const double dist = randomization_radius_m * std::sqrt(rng.uniform01());
        r.pos = geo_offset(r.pos, dist * std::sin(angle), dist * std::cos(angle));
    }
    return out;
}

// Assigns per-node security attributes. Encrypted records are re-split
// WPA/WEP by independent coin flips (input data only distinguishes
// encrypted from open); open records split between default and user-set
// passwords; passworded and WEP nodes get a latent crackability tier.
inline std::vector<NodeProfile> assign_profiles(const std::vector<RouterRecord>& records,
                                                const IngestConfig& cfg,
                                                Rng& rng) {
    cfg.validate();
    std::vector<NodeProfile> profiles;
    profiles.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        NodeProfile p;
        p.node_id = static_cast<int32_t>(i);
        p.pos = r.pos;
        if (r.encryption != Encryption::Open) {
            p.encryption = rng.bernoulli(cfg.wpa_fraction_of_encrypted) ? Encryption::Wpa
                                                                        : Encryption::Wep;
        } else {
            p.encryption = Encryption::Open;
        }
        if (p.encryption == Encryption::Open && rng.bernoulli(cfg.nopass_fraction_of_open)) {
            p.tier = PasswordTier::Default;
        } else if (p.encryption == Encryption::Wpa) {
            p.tier = PasswordTier::Uncrackable; // unreachable anyway
        } else {
            const double u = rng.uniform01();
            if (u < cfg.dict1_fraction)
                p.tier = PasswordTier::InDict1;
            else if (u < cfg.dict1_fraction + cfg.dict2_fraction)
                p.tier = PasswordTier::InDict2;
            else
                p.tier = PasswordTier::Uncrackable;
        }
        profiles.push_back(p);
    }
    return profiles;
}

struct BoundingBox {
    double lat_min = 0.0, lon_min = 0.0, lat_max = 0.0, lon_max = 0.0;
    bool degenerate() const { return lat_max <= lat_min || lon_max <= lon_min; }
};

struct ClusterParams {
    int count = 0;          // Gaussian clusters; 0 disables clustering
    double sigma_m = 300.0; // cluster spread
    double fraction = 0.5;  // share of nodes placed in clusters
};

// Generates a synthetic corpus: uniform scatter over the box plus optional
// Gaussian clusters mimicking downtown density. Output rows use the same
// schema as parsed corpora, so synthetic and real data are interchangeable.
inline std::vector<RouterRecord> synth_city(int node_count,
                                            const BoundingBox& box,
                                            const ClusterParams& clusters,
                                            double encrypted_fraction,
                                            Rng& rng) {
    if (node_count < 1)
        throw std::invalid_argument("node_count must be >= 1");
    if (box.degenerate())
        throw std::invalid_argument("bounding box must be non-degenerate");
    if (encrypted_fraction < 0.0 || encrypted_fraction > 1.0)
        throw std::invalid_argument("encrypted_fraction must lie in [0, 1]");

    std::vector<GeoPoint> centers;
    for (int c = 0; c < clusters.count; ++c)
        centers.push_back({rng.uniform(box.lat_min, box.lat_max),
                           rng.uniform(box.lon_min, box.lon_max)});

    // WPA share of encrypted routers, cosmetic only: profile assignment
    // re-splits encrypted records by IngestConfig.
    constexpr double kWpaShare = 0.30;

    std::vector<RouterRecord> out;
    out.reserve(static_cast<size_t>(node_count));
    for (int i = 0; i < node_count; ++i) {
        RouterRecord r;
        char mac[18];
        std::snprintf(mac, sizeof(mac), "02:%02X:%02X:%02X:%02X:%02X",
                      (i >> 24) & 0xFF, (i >> 16) & 0xFF, (i >> 8) & 0xFF,
                      i & 0xFF, 0);
        r.bssid = mac;
        if (!centers.empty() && rng.bernoulli(clusters.fraction)) {
            const auto& c = centers[rng.below(centers.size())];
            GeoPoint p = geo_offset(c, rng.normal() * clusters.sigma_m,
                                    rng.normal() * clusters.sigma_m);
            p.lat = std::clamp(p.lat, box.lat_min, box.lat_max);
            p.lon = std::clamp(p.lon, box.lon_min, box.lon_max);
            r.pos = p;
        } else {
            r.pos = {rng.uniform(box.lat_min, box.lat_max),
                     rng.uniform(box.lon_min, box.lon_max)};
        }
        if (rng.bernoulli(encrypted_fraction))
            r.encryption = rng.bernoulli(kWpaShare) ? Encryption::Wpa : Encryption::Wep;
        else
            r.encryption = Encryption::Open;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace wifiepi
