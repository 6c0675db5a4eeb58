#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "offat/stack.hpp"

namespace offat::sim {

inline constexpr TimeMs kLinkDelayMs = 1;

struct Position {
    double x = 0.0;
    double y = 0.0;
};

/// Unit-disk radio.
struct RadioModel {
    double range_m = 200.0;
    double loss_probability = 0.0;

    /// Throws Errc::SchemaError unless 0 < range and 0 <= loss < 1.
    void validate() const;
};

/// Inclusive: a device exactly range_m away is reachable.
bool in_range(Position a, Position b, const RadioModel& model);

/// Test-only perturbation of the group transport.
struct FaultModel {
    double group_duplicate = 0.0;    // probability a group frame is delivered twice
    std::uint32_t group_jitter_ms = 0;  // extra random delay, FIFO kept per link
};

struct ScenarioDevice {
    std::string id;
    std::string name;
    std::vector<std::string> interests;
    Position pos;
    int go_intent = 7;
    std::optional<std::uint8_t> listen_channel;
    std::optional<std::uint32_t> dwell_min_ms;
    std::optional<std::uint32_t> dwell_max_ms;
};

struct ScriptAction {
    TimeMs at_ms = 0;
    std::string device;
    std::string action;
    nlohmann::json args;  // the whole script entry
};

struct Scenario {
    RadioModel radio;
    TimeMs duration_ms = 60'000;
    std::uint32_t probe_interval_ms = 20;
    TimeMs stale_after_ms = 10'000;
    TimeMs invitation_ttl_ms = kDefaultInvitationTtlMs;
    FaultModel faults;
    std::vector<ScenarioDevice> devices;
    std::vector<ScriptAction> script;

    /// Throws Errc::SchemaError / Errc::UnknownDevice.
    static Scenario from_json(const nlohmann::json& doc);
    static Scenario load(const std::filesystem::path& path);
};

/// Per frame class. `transmitted` counts per-receiver copies so that the
/// conservation identity holds; `radio_tx` counts actual transmissions.
struct FrameCounters {
    std::uint64_t radio_tx = 0;
    std::uint64_t transmitted = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped_range = 0;
    std::uint64_t dropped_gate = 0;  // phase or channel mismatch
    std::uint64_t dropped_loss = 0;
    std::uint64_t duplicated = 0;    // injected extra copies (also counted as delivered)

    bool conserved() const noexcept {
        return transmitted + duplicated == delivered + dropped_range + dropped_gate + dropped_loss;
    }
};

struct PairLatency {
    std::string a;
    std::string b;
    std::optional<TimeMs> latency_ms;  // nullopt: never mutually discovered
};

struct SimMetrics {
    std::vector<PairLatency> discovery;
    std::uint64_t invitations_sent = 0;
    std::uint64_t invitations_accepted = 0;
    std::uint64_t invitations_declined = 0;
    std::uint64_t invitations_expired = 0;
    std::uint64_t messages_sent = 0;
    std::uint64_t deliveries_expected = 0;
    std::uint64_t messages_delivered = 0;
    std::uint64_t messages_dropped = 0;
    FrameCounters discovery_frames;
    FrameCounters invitation_frames;
    FrameCounters group_frames;

    std::uint64_t frames_transmitted() const noexcept {
        return discovery_frames.radio_tx + invitation_frames.radio_tx + group_frames.radio_tx;
    }
    nlohmann::json to_json() const;
};

/// Discrete-event simulation of every scenario device's full stack on one
/// virtual clock. Events run in (timestamp, insertion order) order.
class Simulation {
public:
    Simulation(Scenario scenario, std::uint64_t seed, bool trace = false);
    ~Simulation();
    Simulation(Simulation&&) noexcept;
    Simulation& operator=(Simulation&&) noexcept;

    /// Processes events up to and including `t`, then parks the clock at t.
    void run_until(TimeMs t);
    /// Runs to the scenario duration.
    void run();
    /// Runs until every in-range pair discovered each other or duration ends.
    void run_until_discovered();

    TimeMs now() const noexcept;
    bool all_pairs_discovered() const;

    ProtocolStack& stack(std::string_view device);
    const ProtocolStack& stack(std::string_view device) const;
    std::size_t device_count() const noexcept;

    /// Injects a scripted action immediately (same semantics as the file).
    void perform(const ScriptAction& action);

    SimMetrics metrics() const;
    const std::vector<std::string>& trace() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct SimResult {
    SimMetrics metrics;
    std::vector<std::string> trace;  // one JSON object per line
};

/// Deterministic: identical (scenario, seed) produce byte-identical traces.
SimResult run_scenario(const Scenario& scenario, std::uint64_t seed, bool trace = true);

/// Mutual-discovery latency across independent seeded runs. Unresolved
/// pairs count as +inf in the percentiles.
struct LatencyStats {
    std::size_t runs = 0;
    std::vector<TimeMs> samples;  // sorted; kNever marks a failed pair
    std::size_t failures = 0;

    std::optional<TimeMs> min() const;
    std::optional<TimeMs> median() const;
    std::optional<TimeMs> p99() const;
    /// Fraction of pairs discovered within `limit_ms`.
    double success_rate(TimeMs limit_ms) const;
    nlohmann::json to_json() const;
};

/// Seeds run i with mix_seed(base_seed + i). Parallel across runs.
LatencyStats measure_discovery_latency(std::size_t n_runs, const Scenario& scenario,
                                       std::uint64_t base_seed);

}  // namespace offat::sim
