#include "offat/discovery.hpp"

#include <algorithm>
#include <limits>

#include "offat/error.hpp"
#include "offat/rng.hpp"

namespace offat {

const char* phase_name(Phase phase) noexcept {
    switch (phase) {
        case Phase::Off: return "off";
        case Phase::Search: return "search";
        case Phase::Listen: return "listen";
    }
    return "?";
}

const char* peer_status_name(PeerStatus status) noexcept {
    return status == PeerStatus::Connected ? "connected" : "available";
}

DiscoveryStateMachine::DiscoveryStateMachine(DeviceId device_id, DiscoveryConfig config, std::string ssid)
    : device_id_(device_id), config_(config), ssid_(std::move(ssid)) {
    if (config_.dwell_min_ms == 0 || config_.dwell_min_ms > config_.dwell_max_ms) {
        throw Error(Errc::InvalidArgument, "dwell bounds must satisfy 0 < min <= max");
    }
    if (config_.probe_interval_ms == 0) throw Error(Errc::InvalidArgument, "probe interval must be > 0");
}

TimeMs DiscoveryStateMachine::draw_deadline(Rng& rng, TimeMs now) const {
    return now + static_cast<TimeMs>(rng.uniform(config_.dwell_min_ms, config_.dwell_max_ms));
}

void DiscoveryStateMachine::start(Rng& rng, TimeMs now, std::optional<std::uint8_t> forced_channel) {
    if (phase_ != Phase::Off) throw Error(Errc::AlreadyRunning);
    if (forced_channel) {
        if (std::find(kSocialChannels.begin(), kSocialChannels.end(), *forced_channel) == kSocialChannels.end()) {
            throw Error(Errc::InvalidArgument, "listen channel must be 1, 6 or 11");
        }
        listen_channel_ = *forced_channel;
    } else {
        listen_channel_ = kSocialChannels[rng.uniform(0, kSocialChannels.size() - 1)];
    }
    phase_ = Phase::Listen;
    phase_deadline_ = draw_deadline(rng, now);
    last_now_ = now;
    next_probe_index_ = 0;
}

void DiscoveryStateMachine::stop() noexcept { phase_ = Phase::Off; }

std::optional<ProbeAction> DiscoveryStateMachine::advance(TimeMs now, Rng& rng) {
    if (phase_ == Phase::Off) throw Error(Errc::NotRunning);
    if (now < last_now_) throw Error(Errc::InvalidArgument, "clock moved backwards");
    last_now_ = now;
    if (now >= phase_deadline_) {
        phase_ = phase_ == Phase::Listen ? Phase::Search : Phase::Listen;
        phase_deadline_ = draw_deadline(rng, now);
    }
    if (phase_ != Phase::Search) return std::nullopt;
    ProbeAction probe{kSocialChannels[next_probe_index_], ssid_};
    last_probe_ = now;
    next_probe_index_ = (next_probe_index_ + 1) % kSocialChannels.size();
    return probe;
}

std::optional<BeaconAction> DiscoveryStateMachine::on_probe(std::uint8_t channel) const {
    if (phase_ != Phase::Listen || channel != listen_channel_) return std::nullopt;
    return BeaconAction{ssid_, listen_channel_};
}

TimeMs DiscoveryStateMachine::next_wakeup() const noexcept {
    switch (phase_) {
        case Phase::Off: return std::numeric_limits<TimeMs>::max();
        case Phase::Listen: return phase_deadline_;
        case Phase::Search: return std::min<TimeMs>(phase_deadline_, last_probe_ + config_.probe_interval_ms);
    }
    return phase_deadline_;
}

PeerTable::PeerTable(TimeMs stale_after_ms, SimilarityFn similarity)
    : stale_after_ms_(stale_after_ms),
      similarity_(similarity ? std::move(similarity) : SimilarityFn(keyword_similarity)) {}

UpsertResult PeerTable::upsert(const std::string& ssid, const DeviceId& device_id, PeerStatus status,
                               TimeMs now, const Profile& local) {
    PeerRecord fresh;
    fresh.device_id = device_id;
    fresh.ssid = ssid;
    fresh.profile = try_decode_ssid(ssid);
    if (fresh.profile) fresh.similarity = similarity_(local.interests, fresh.profile->interests);
    fresh.status = status;
    fresh.last_seen = now;

    auto [it, inserted] = records_.try_emplace(device_id, fresh);
    UpsertResult result;
    result.inserted = inserted;
    if (!inserted) {
        PeerRecord& rec = it->second;
        fresh.last_seen = std::max(rec.last_seen, now);
        PeerRecord old_cmp = rec;
        old_cmp.last_seen = fresh.last_seen;
        result.changed = !(old_cmp == fresh);
        rec = fresh;
    }
    result.record = it->second;
    return result;
}

bool PeerTable::set_status(const DeviceId& device_id, PeerStatus status) {
    auto it = records_.find(device_id);
    if (it == records_.end()) return false;
    it->second.status = status;
    return true;
}

void PeerTable::rescore(const Profile& local) {
    for (auto& [id, rec] : records_) {
        if (rec.profile) rec.similarity = similarity_(local.interests, rec.profile->interests);
    }
}

std::vector<DeviceId> PeerTable::evict_stale(TimeMs now) {
    std::vector<DeviceId> removed;
    for (auto it = records_.begin(); it != records_.end();) {
        if (now - it->second.last_seen > stale_after_ms_) {
            removed.push_back(it->first);
            it = records_.erase(it);
        } else {
            ++it;
        }
    }
    return removed;
}

std::vector<PeerRecord> PeerTable::snapshot() const {
    std::vector<PeerRecord> out;
    out.reserve(records_.size());
    for (const auto& [id, rec] : records_) out.push_back(rec);
    std::stable_sort(out.begin(), out.end(), [](const PeerRecord& a, const PeerRecord& b) {
        if (a.similarity.has_value() != b.similarity.has_value()) return a.similarity.has_value();
        if (a.similarity && *a.similarity != *b.similarity) return *a.similarity > *b.similarity;
        return a.device_id < b.device_id;
    });
    return out;
}

const PeerRecord* PeerTable::find(const DeviceId& device_id) const {
    auto it = records_.find(device_id);
    return it == records_.end() ? nullptr : &it->second;
}

std::optional<TimeMs> PeerTable::next_expiry() const {
    std::optional<TimeMs> earliest;
    for (const auto& [id, rec] : records_) {
        TimeMs t = rec.last_seen + stale_after_ms_ + 1;
        if (!earliest || t < *earliest) earliest = t;
    }
    return earliest;
}

}  // namespace offat
