#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "offat/device_id.hpp"
#include "offat/discovery.hpp"
#include "offat/grouping.hpp"
#include "offat/messaging.hpp"
#include "offat/rng.hpp"
#include "offat/security.hpp"
#include "offat/wire.hpp"

namespace offat {

inline constexpr TimeMs kNever = std::numeric_limits<TimeMs>::max();

/// Journal entry for the UI stream and simulator trace.
struct ControlEvent {
    std::uint64_t seq = 0;
    TimeMs t_ms = 0;
    std::string type;
    nlohmann::json details;
};

/// A frame the transport must carry. Broadcast frames are discovery probes
/// (the channel is inside the frame); unicast frames go to one device.
struct Outbound {
    enum class Route { Broadcast, Unicast };
    Route route = Route::Unicast;
    DeviceId to;
    WireFrame frame;
};

struct StackConfig {
    DeviceId device_id;
    Profile profile;
    GoIntent go_intent;
    DiscoveryConfig discovery;
    TimeMs stale_after_ms = 10'000;
    TimeMs invitation_ttl_ms = kDefaultInvitationTtlMs;
    std::optional<std::uint8_t> listen_channel;
    /// Keep every locally delivered message (simulator/test inspection).
    bool record_deliveries = false;
};

struct StackCounters {
    std::uint64_t messages_sent = 0;
    std::uint64_t deliveries_expected = 0;
    std::uint64_t messages_delivered = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t gaps = 0;
    std::uint64_t auth_failures = 0;
    std::uint64_t unknown_sender = 0;
    std::uint64_t malformed = 0;
    std::uint64_t invitations_sent = 0;
    std::uint64_t invitations_accepted = 0;
    std::uint64_t invitations_declined = 0;
    std::uint64_t invitations_expired = 0;
};

/// The transport-independent protocol engine of one device: discovery,
/// invitations, group membership, sequencing and sealing. It never reads a
/// clock or touches a socket; drivers (simulator, LAN node) feed it time
/// and frames and carry away its outbound frames and events.
///
/// Not thread-safe. Exactly one logical event loop may call into it.
class ProtocolStack {
public:
    ProtocolStack(StackConfig config, Rng rng);

    // -- commands --------------------------------------------------------
    void set_profile(Profile profile, TimeMs now);
    void start_discovery(TimeMs now);
    void stop_discovery();
    /// Stop + start; re-randomizes the listen channel.
    void restart_discovery(TimeMs now);
    InvitationId invite(const DeviceId& target, TimeMs now);
    void respond(const InvitationId& id, bool accept, TimeMs now);
    /// Composes, seals and routes a chat/ink/file payload. Returns its seq.
    std::uint64_t send(Payload payload, TimeMs now);
    /// Leave (client) or dissolve (owner). Throws Errc::NotInGroup.
    void disconnect(TimeMs now);

    // -- inputs ----------------------------------------------------------
    void tick(TimeMs now);
    void on_frame(const WireFrame& frame, TimeMs now);
    TimeMs next_wakeup(TimeMs now) const;

    // -- outputs ---------------------------------------------------------
    std::vector<Outbound> take_outbound();
    std::vector<ControlEvent> take_events();

    // -- queries ---------------------------------------------------------
    const DeviceId& device_id() const noexcept { return config_.device_id; }
    const Profile& profile() const noexcept { return config_.profile; }
    const std::string& ssid() const noexcept { return discovery_.ssid(); }
    GoIntent go_intent() const noexcept { return config_.go_intent; }
    const DiscoveryStateMachine& discovery() const noexcept { return discovery_; }
    const PeerTable& peers() const noexcept { return peers_; }
    const InvitationStore& invitations() const noexcept { return invitations_; }
    const std::optional<Group>& group() const noexcept { return group_; }
    DeviceStatus status() const;
    const StackCounters& counters() const noexcept { return counters_; }
    const ReplayGuard& replay_guard() const noexcept { return guard_; }
    const std::vector<Message>& delivered() const noexcept { return delivered_; }
    std::uint64_t last_seq() const noexcept { return seq_.last(); }

private:
    void handle_probe(const ProbeFrame& probe, TimeMs now);
    void handle_beacon(const BeaconFrame& beacon, TimeMs now);
    void handle_invite(const InviteFrame& invite, TimeMs now);
    void handle_invite_response(const InviteResponseFrame& response, TimeMs now);
    void handle_sealed(const SealedFrame& sealed, TimeMs now);
    void handle_control(const DeviceId& sender, const ControlPayload& control, TimeMs now);

    void record_peer(const std::string& ssid, const DeviceId& id, TimeMs now);
    void become_owner(const DeviceId& client, const InvitationId& via, TimeMs now);
    void admit_into_group(const DeviceId& peer, const InvitationId& via, TimeMs now);
    void join_group(const DeviceId& owner, const GroupCredentials& credentials, TimeMs now);
    void apply_roster(const std::map<DeviceId, std::uint8_t>& roster, TimeMs now);
    void leave_group_locally(TimeMs now, const char* reason);
    void broadcast_roster(TimeMs now);
    void send_sealed(const Message& message, const std::vector<DeviceId>& recipients);
    void sync_peer_statuses();
    void send_response(const DeviceId& to, const InvitationId& id, bool accept,
                       std::optional<GroupCredentials> credentials = std::nullopt);
    DeviceId peer_of(const Invitation& invitation) const;
    void emit(TimeMs now, std::string type, nlohmann::json details);

    StackConfig config_;
    Rng rng_;
    DiscoveryStateMachine discovery_;
    PeerTable peers_;
    InvitationStore invitations_;
    std::optional<Group> group_;
    SequenceState seq_;
    NonceState nonce_;
    ReplayGuard guard_;
    /// Accepted invitations still waiting for group credentials or for the
    /// "you own it" confirmation, keyed by invitation.
    std::map<InvitationId, DeviceId> awaiting_;
    std::vector<Outbound> outbound_;
    std::vector<ControlEvent> events_;
    std::vector<Message> delivered_;
    std::uint64_t event_seq_ = 0;
    StackCounters counters_;
};

}  // namespace offat
