#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offat/device_id.hpp"
#include "offat/profile.hpp"

namespace offat {

class Rng;

using TimeMs = std::int64_t;

/// 2.4 GHz social channels used for rendezvous.
inline constexpr std::array<std::uint8_t, 3> kSocialChannels{1, 6, 11};

enum class Phase { Off, Search, Listen };

const char* phase_name(Phase phase) noexcept;

struct DiscoveryConfig {
    std::uint32_t dwell_min_ms = 100;
    std::uint32_t dwell_max_ms = 300;
    /// How often a driver re-invokes advance() while searching.
    std::uint32_t probe_interval_ms = 20;
    bool operator==(const DiscoveryConfig&) const = default;
};

struct ProbeAction {
    std::uint8_t channel = 0;
    std::string ssid;
};

struct BeaconAction {
    std::string ssid;
    std::uint8_t listen_channel = 0;
};

/// Find-phase alternation between LISTEN (fixed channel) and SEARCH
/// (round-robin probes across the social channels).
class DiscoveryStateMachine {
public:
    DiscoveryStateMachine(DeviceId device_id, DiscoveryConfig config, std::string ssid);

    /// Throws Errc::AlreadyRunning unless the machine is OFF. A forced
    /// channel must be one of kSocialChannels.
    void start(Rng& rng, TimeMs now, std::optional<std::uint8_t> forced_channel = std::nullopt);
    void stop() noexcept;

    /// Flips phase when the deadline has passed, then emits at most one probe
    /// (only while searching). Throws Errc::NotRunning when OFF and
    /// Errc::InvalidArgument if the clock moved backwards.
    std::optional<ProbeAction> advance(TimeMs now, Rng& rng);

    /// Beacon iff listening on the probe's channel.
    std::optional<BeaconAction> on_probe(std::uint8_t channel) const;

    /// When a driver should call advance() next: the phase deadline, or the
    /// next probe slot while searching. Max TimeMs when OFF.
    TimeMs next_wakeup() const noexcept;

    void set_ssid(std::string ssid) { ssid_ = std::move(ssid); }

    const DeviceId& device_id() const noexcept { return device_id_; }
    const std::string& ssid() const noexcept { return ssid_; }
    Phase phase() const noexcept { return phase_; }
    std::uint8_t listen_channel() const noexcept { return listen_channel_; }
    TimeMs phase_deadline() const noexcept { return phase_deadline_; }
    const DiscoveryConfig& config() const noexcept { return config_; }

private:
    TimeMs draw_deadline(Rng& rng, TimeMs now) const;

    DeviceId device_id_;
    DiscoveryConfig config_;
    std::string ssid_;
    Phase phase_ = Phase::Off;
    std::uint8_t listen_channel_ = 0;
    TimeMs phase_deadline_ = 0;
    TimeMs last_now_ = 0;
    TimeMs last_probe_ = 0;
    std::size_t next_probe_index_ = 0;
};

enum class PeerStatus { Available, Connected };

const char* peer_status_name(PeerStatus status) noexcept;

struct PeerRecord {
    DeviceId device_id;
    std::string ssid;
    std::optional<Profile> profile;  // nullopt: opaque peer
    std::optional<SimilarityPercent> similarity;
    PeerStatus status = PeerStatus::Available;
    TimeMs last_seen = 0;

    bool operator==(const PeerRecord&) const = default;
};

struct UpsertResult {
    PeerRecord record;
    bool inserted = false;
    /// True when anything other than last_seen changed.
    bool changed = false;
};

class PeerTable {
public:
    explicit PeerTable(TimeMs stale_after_ms = 10'000, SimilarityFn similarity = {});

    UpsertResult upsert(const std::string& ssid, const DeviceId& device_id, PeerStatus status,
                        TimeMs now, const Profile& local);

    /// Updates only the status; returns false if the peer is unknown.
    bool set_status(const DeviceId& device_id, PeerStatus status);

    /// Recomputes every similarity after the local profile changed.
    void rescore(const Profile& local);

    std::vector<DeviceId> evict_stale(TimeMs now);

    /// Similarity descending, opaque last, ties by device id ascending.
    std::vector<PeerRecord> snapshot() const;

    const PeerRecord* find(const DeviceId& device_id) const;
    /// Earliest time at which some record becomes stale, if any.
    std::optional<TimeMs> next_expiry() const;

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    TimeMs stale_after_ms() const noexcept { return stale_after_ms_; }
    void clear() noexcept { records_.clear(); }

private:
    TimeMs stale_after_ms_;
    SimilarityFn similarity_;
    std::map<DeviceId, PeerRecord> records_;
};

}  // namespace offat
