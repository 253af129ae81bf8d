#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "wifiepi/graph.hpp"
#include "wifiepi/records.hpp"
#include "wifiepi/rng.hpp"

namespace wifiepi {

// True infection classes. The first four form the susceptible prefix,
// ordered from weakest to strongest security; target selection relies on
// this ordering.
enum class Compartment : uint8_t {
    SNopass = 0, // no encryption, default password
    SPass1 = 1,  // no encryption, user-set password (small dictionary next)
    SPass2 = 2,  // small dictionary failed, large dictionary next
    SWep = 3,    // WEP encryption still unbroken
    Infected = 4,
    RWpa = 5,    // WPA, treated as immune
    RHidden = 6, // password resisted both dictionaries; immunity hidden
};

inline constexpr size_t kCompartmentCount = 7;

inline const char* to_string(Compartment c) {
    switch (c) {
    case Compartment::SNopass: return "s_nopass";
    case Compartment::SPass1: return "s_pass1";
    case Compartment::SPass2: return "s_pass2";
    case Compartment::SWep: return "s_wep";
    case Compartment::Infected: return "infected";
    case Compartment::RWpa: return "r_wpa";
    case Compartment::RHidden: return "r_hidden";
    }
    return "?";
}

enum class AttackPhase : uint8_t { WepCrack, Dict1, Dict2, Direct };

struct EpidemicParams {
    double tau_minutes = 5.0;        // unitary step: direct takeover time
    double tau1_minutes = 10.5;      // small-dictionary attack
    double tau2_minutes = 700.0;     // large-dictionary attack
    double tau_wep_minutes = 4320.0; // WEP crack
    int seed_count = 5;
    int horizon_steps = 4032; // two weeks of tau-minute steps
    // When set, phase durations are the rounded mean number of steps
    // instead of geometric draws (sensitivity checks only).
    bool deterministic_durations = false;

    double completion_prob(AttackPhase phase) const {
        switch (phase) {
        case AttackPhase::Direct: return 1.0;
        case AttackPhase::Dict1: return tau_minutes / tau1_minutes;
        case AttackPhase::Dict2: return tau_minutes / tau2_minutes;
        case AttackPhase::WepCrack: return tau_minutes / tau_wep_minutes;
        }
        return 1.0;
    }

    int64_t deterministic_steps(AttackPhase phase) const {
        switch (phase) {
        case AttackPhase::Direct: return 1;
        case AttackPhase::Dict1: return std::max<int64_t>(1, std::llround(tau1_minutes / tau_minutes));
        case AttackPhase::Dict2: return std::max<int64_t>(1, std::llround(tau2_minutes / tau_minutes));
        case AttackPhase::WepCrack: return std::max<int64_t>(1, std::llround(tau_wep_minutes / tau_minutes));
        }
        return 1;
    }

    void validate() const {
        if (tau_minutes <= 0.0)
            throw std::invalid_argument("tau_minutes must be positive");
        if (tau1_minutes < tau_minutes || tau2_minutes < tau_minutes ||
            tau_wep_minutes < tau_minutes)
            throw std::invalid_argument("attack time scales must be >= tau_minutes");
        if (seed_count < 1)
            throw std::invalid_argument("seed_count must be >= 1");
        if (horizon_steps < 1)
            throw std::invalid_argument("horizon_steps must be >= 1");
    }
};

// One in-flight attack. An attacker runs at most one at a time, a target
// is hit by at most one at a time; elapsed_steps counts ticks spent in the
// current phase.
struct AttackProcess {
    int32_t attacker = -1;
    int32_t target = -1;
    AttackPhase phase = AttackPhase::Direct;
    int64_t elapsed_steps = 0;
};

struct Snapshot {
    int64_t step = 0;
    std::array<int64_t, kCompartmentCount> counts{};

    int64_t count(Compartment c) const { return counts[static_cast<size_t>(c)]; }
    int64_t population() const {
        int64_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }
};

// I(t) over the population discounted by the WPA-immune class. Hidden
// removals are not discounted: they looked susceptible from the outside.
inline double attack_rate(const Snapshot& s) {
    const int64_t n = s.population();
    const int64_t r = s.count(Compartment::RWpa);
    if (n == r)
        throw std::invalid_argument("attack rate undefined: entire population immune");
    return static_cast<double>(s.count(Compartment::Infected)) /
           static_cast<double>(n - r);
}

struct TimeSeries {
    double tau_minutes = 5.0;
    std::vector<Snapshot> snapshots;
};

// Discrete-time individual-based infection state over one proximity graph.
// A single simulation is strictly sequential: each step sweeps infected
// nodes in ascending node id, so a run is a pure function of
// (graph, profiles, params, seed).
class SimState {
public:
    SimState(const ProximityGraph& graph, const std::vector<NodeProfile>& profiles,
             const EpidemicParams& params, Rng rng)
        : graph_(&graph), params_(params), rng_(rng) {
        params_.validate();
        const int32_t n = graph.node_count();
        if (static_cast<int32_t>(profiles.size()) != n)
            throw std::invalid_argument("profiles must cover every graph node");

        true_class_.resize(n);
        apparent_class_.resize(n);
        original_class_.resize(n);
        tier_.resize(n);
        under_attack_.assign(n, 0);
        dormant_.assign(n, 0);
        has_process_.assign(n, 0);
        process_.assign(n, AttackProcess{});
        failed_.assign(n, {});
        infection_step_.assign(n, -1);
        counts_.fill(0);

        std::vector<int32_t> non_immune;
        non_immune.reserve(n);
        for (int32_t v = 0; v < n; ++v) {
            const auto& p = profiles[static_cast<size_t>(v)];
            Compartment c;
            switch (p.encryption) {
            case Encryption::Wpa: c = Compartment::RWpa; break;
            case Encryption::Wep: c = Compartment::SWep; break;
            default:
                c = p.tier == PasswordTier::Default ? Compartment::SNopass
                                                    : Compartment::SPass1;
            }
            true_class_[v] = apparent_class_[v] = original_class_[v] = c;
            tier_[v] = p.tier;
            ++counts_[static_cast<size_t>(c)];
            if (c != Compartment::RWpa) non_immune.push_back(v);
        }

        if (static_cast<int>(non_immune.size()) < params_.seed_count)
            throw std::invalid_argument("fewer non-immune nodes than requested seeds");
        for (int k = 0; k < params_.seed_count; ++k) {
            const size_t j = k + rng_.below(non_immune.size() - k);
            std::swap(non_immune[k], non_immune[j]);
            const int32_t seed = non_immune[k];
            set_true(seed, Compartment::Infected);
            apparent_class_[seed] = Compartment::Infected;
            infection_step_[seed] = 0;
            attackers_.push_back(seed);
        }
        std::sort(attackers_.begin(), attackers_.end());
    }

    // Lowest-security apparent-susceptible neighbor that is free, not
    // already known (to this attacker) to resist; ties broken uniformly.
    std::optional<int32_t> select_target(int32_t attacker) {
        scratch_.clear();
        Compartment best = Compartment::Infected;
        for (int32_t w : graph_->neighbors_of(attacker)) {
            const Compartment ap = apparent_class_[w];
            if (ap > Compartment::SWep) continue;
            if (under_attack_[w]) continue;
            const auto& fs = failed_[attacker];
            if (std::find(fs.begin(), fs.end(), w) != fs.end()) continue;
            if (ap < best) {
                best = ap;
                scratch_.clear();
            }
            if (ap == best) scratch_.push_back(w);
        }
        if (scratch_.empty()) return std::nullopt;
        return scratch_[rng_.below(scratch_.size())];
    }

    // Advances one tau tick: infected nodes act in ascending node-id order;
    // idle attackers acquire targets, every live attack draws one phase
    // completion. Nodes infected during the pass start acting next step.
    void step() {
        const size_t acting = attackers_.size();
        for (size_t i = 0; i < acting; ++i) {
            const int32_t a = attackers_[i];
            if (!has_process_[a]) {
                if (dormant_[a]) continue;
                auto target = select_target(a);
                if (!target) {
                    dormant_[a] = 1;
                    continue;
                }
                begin_attack(a, *target);
            }
            tick(a);
        }
        ++step_count_;
        if (!pending_.empty()) {
            std::sort(pending_.begin(), pending_.end());
            const size_t mid = attackers_.size();
            attackers_.insert(attackers_.end(), pending_.begin(), pending_.end());
            std::inplace_merge(attackers_.begin(), attackers_.begin() + mid,
                               attackers_.end());
            pending_.clear();
        }
    }

    Snapshot snapshot() const {
        Snapshot s;
        s.step = step_count_;
        s.counts = counts_;
        return s;
    }

    int32_t node_count() const { return graph_->node_count(); }
    int64_t step_count() const { return step_count_; }
    Compartment true_class(int32_t v) const { return true_class_[v]; }
    Compartment apparent_class(int32_t v) const { return apparent_class_[v]; }
    Compartment original_class(int32_t v) const { return original_class_[v]; }
    PasswordTier tier(int32_t v) const { return tier_[v]; }
    bool under_attack(int32_t v) const { return under_attack_[v] != 0; }
    bool idle(int32_t v) const { return !has_process_[v]; }
    int64_t infection_step(int32_t v) const { return infection_step_[v]; }
    const std::vector<int32_t>& failed_targets(int32_t attacker) const {
        return failed_[attacker];
    }
    const EpidemicParams& params() const { return params_; }

    std::vector<AttackProcess> active_processes() const {
        std::vector<AttackProcess> out;
        for (int32_t a : attackers_)
            if (has_process_[a]) out.push_back(process_[a]);
        return out;
    }

private:
    void set_true(int32_t v, Compartment c) {
        --counts_[static_cast<size_t>(true_class_[v])];
        true_class_[v] = c;
        ++counts_[static_cast<size_t>(c)];
    }

    void begin_attack(int32_t attacker, int32_t target) {
        AttackPhase phase;
        switch (apparent_class_[target]) {
        case Compartment::SNopass: phase = AttackPhase::Direct; break;
        case Compartment::SPass1: phase = AttackPhase::Dict1; break;
        case Compartment::SPass2: phase = AttackPhase::Dict2; break;
        default: phase = AttackPhase::WepCrack; break;
        }
        process_[attacker] = {attacker, target, phase, 0};
        has_process_[attacker] = 1;
        under_attack_[target] = 1;
    }

    void end_attack(int32_t attacker) { has_process_[attacker] = 0; }

    void infect(int32_t v) {
        set_true(v, Compartment::Infected);
        apparent_class_[v] = Compartment::Infected;
        under_attack_[v] = 0;
        infection_step_[v] = step_count_ + 1; // the step being computed
        dormant_[v] = 0;
        pending_.push_back(v);
    }

    void tick(int32_t a) {
        AttackProcess& pr = process_[a];
        ++pr.elapsed_steps;
        bool complete;
        if (params_.deterministic_durations) {
            complete = pr.elapsed_steps >= params_.deterministic_steps(pr.phase);
        } else {
            const double p = params_.completion_prob(pr.phase);
            complete = p >= 1.0 || rng_.bernoulli(p);
        }
        if (!complete) return;

        const int32_t t = pr.target;
        switch (pr.phase) {
        case AttackPhase::Direct:
            infect(t);
            end_attack(a);
            break;
        case AttackPhase::WepCrack:
            // encryption broken; the password stage begins next step
            if (true_class_[t] == Compartment::SWep)
                set_true(t, Compartment::SPass1);
            apparent_class_[t] = Compartment::SPass1;
            pr.phase = AttackPhase::Dict1;
            pr.elapsed_steps = 0;
            break;
        case AttackPhase::Dict1:
            if (tier_[t] == PasswordTier::InDict1) {
                infect(t);
                end_attack(a);
            } else {
                if (true_class_[t] == Compartment::SPass1)
                    set_true(t, Compartment::SPass2);
                apparent_class_[t] = Compartment::SPass2;
                pr.phase = AttackPhase::Dict2;
                pr.elapsed_steps = 0;
            }
            break;
        case AttackPhase::Dict2:
            if (tier_[t] == PasswordTier::InDict2) {
                infect(t);
                end_attack(a);
            } else {
                // terminal failure: immunity is known only to this attacker,
                // everyone else sees the original susceptible class again
                if (true_class_[t] != Compartment::RHidden)
                    set_true(t, Compartment::RHidden);
                apparent_class_[t] = original_class_[t];
                failed_[a].push_back(t);
                under_attack_[t] = 0;
                end_attack(a);
                wake_neighbors(t);
            }
            break;
        }
    }

    // A released target is the only event that can grow an exhausted
    // attacker's candidate set, so dormancy is cleared exactly here.
    void wake_neighbors(int32_t t) {
        for (int32_t w : graph_->neighbors_of(t)) dormant_[w] = 0;
    }

    const ProximityGraph* graph_;
    EpidemicParams params_;
    Rng rng_;
    std::vector<Compartment> true_class_, apparent_class_, original_class_;
    std::vector<PasswordTier> tier_;
    std::vector<uint8_t> under_attack_, dormant_, has_process_;
    std::vector<AttackProcess> process_;
    std::vector<std::vector<int32_t>> failed_;
    std::vector<int64_t> infection_step_;
    std::vector<int32_t> attackers_, pending_, scratch_;
    std::array<int64_t, kCompartmentCount> counts_{};
    int64_t step_count_ = 0;
};

// Runs `horizon_steps` ticks, recording the initial state plus one snapshot
// per step. `on_step` (optional) observes the state after every step.
inline TimeSeries run(SimState& state, int64_t horizon_steps,
                      const std::function<void(const SimState&)>& on_step = {}) {
    if (horizon_steps < 1)
        throw std::invalid_argument("horizon must be >= 1");
    TimeSeries series;
    series.tau_minutes = state.params().tau_minutes;
    series.snapshots.reserve(static_cast<size_t>(horizon_steps) + 1);
    series.snapshots.push_back(state.snapshot());
    for (int64_t i = 0; i < horizon_steps; ++i) {
        state.step();
        series.snapshots.push_back(state.snapshot());
        if (on_step) on_step(state);
    }
    return series;
}

} // namespace wifiepi
