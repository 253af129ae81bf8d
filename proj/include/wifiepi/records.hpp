#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "wifiepi/geo.hpp"

namespace wifiepi {

enum class RecordKind : uint8_t { Infrastructure, Probe };

enum class Encryption : uint8_t { Open, Wep, Wpa };

// Latent crackability of a node's password, sampled once at profile
// assignment so that a router which resists an attack resists every
// later attack the same way.
enum class PasswordTier : uint8_t { Default, InDict1, InDict2, Uncrackable };

// One observed router, as parsed from a corpus file.
struct RouterRecord {
    std::string bssid;
    GeoPoint pos;
    RecordKind kind = RecordKind::Infrastructure;
    Encryption encryption = Encryption::Open;
};

// Security attributes of one node of the built network.
struct NodeProfile {
    int32_t node_id = 0;
    GeoPoint pos;
    Encryption encryption = Encryption::Open;
    PasswordTier tier = PasswordTier::Default;
};

struct IngestConfig {
    int overlap_cap = 20;                    // max routers kept at one exact location
    double randomization_radius_m = 10.0;    // position re-randomization disk radius
    double wpa_fraction_of_encrypted = 0.30; // encrypted routers assumed immune
    double nopass_fraction_of_open = 0.50;   // open routers still on the default password
    double dict1_fraction = 0.25;            // passwords found in the small dictionary
    double dict2_fraction = 0.11;            // passwords found only in the large dictionary
    uint64_t rng_seed = 0;

    void validate() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (overlap_cap < 1)
            throw std::invalid_argument("overlap_cap must be >= 1");
        if (randomization_radius_m < 0.0)
            throw std::invalid_argument("randomization_radius_m must be >= 0");
        if (!prob(wpa_fraction_of_encrypted) || !prob(nopass_fraction_of_open) ||
            !prob(dict1_fraction) || !prob(dict2_fraction))
            throw std::invalid_argument("fractions must lie in [0, 1]");
        if (dict1_fraction + dict2_fraction > 1.0)
            throw std::invalid_argument("dict1_fraction + dict2_fraction must be <= 1");
    }
};

inline const char* to_string(Encryption e) {
    switch (e) {
    case Encryption::Open: return "none";
    case Encryption::Wep: return "wep";
    case Encryption::Wpa: return "wpa";
    }
    return "none";
}

inline const char* to_string(RecordKind k) {
    return k == RecordKind::Probe ? "probe" : "infra";
}

inline const char* to_string(PasswordTier t) {
    switch (t) {
    case PasswordTier::Default: return "default";
    case PasswordTier::InDict1: return "in_dict1";
    case PasswordTier::InDict2: return "in_dict2";
    case PasswordTier::Uncrackable: return "uncrackable";
    }
    return "default";
}

} // namespace wifiepi
