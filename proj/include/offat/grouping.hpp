#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offat/device_id.hpp"
#include "offat/discovery.hpp"
#include "offat/profile.hpp"
#include "offat/security.hpp"

namespace offat {

class Rng;

inline constexpr TimeMs kDefaultInvitationTtlMs = 30'000;
inline constexpr std::uint8_t kOwnerAddress = 1;
inline constexpr std::uint8_t kFirstClientAddress = 2;
inline constexpr std::uint8_t kLastClientAddress = 254;

enum class InvitationState { Pending, Accepted, Declined, Expired };
enum class InvitationDirection { Outbound, Inbound };

const char* invitation_state_name(InvitationState state) noexcept;

struct Invitation {
    InvitationId id;
    DeviceId from;
    DeviceId to;
    std::string from_ssid;
    std::optional<Profile> from_profile;
    std::uint8_t from_go_intent = 0;
    TimeMs created_at = 0;
    TimeMs ttl_ms = kDefaultInvitationTtlMs;
    InvitationState state = InvitationState::Pending;
    InvitationDirection direction = InvitationDirection::Outbound;

    bool expired_at(TimeMs now) const noexcept { return now - created_at > ttl_ms; }
    TimeMs remaining_ms(TimeMs now) const noexcept;

    /// Single exit from Pending. Throws Errc::AlreadyResolved otherwise and
    /// Errc::InvalidArgument for a transition back to Pending.
    void resolve(InvitationState next);
};

/// Both ends of every invitation this device knows about.
class InvitationStore {
public:
    explicit InvitationStore(TimeMs ttl_ms = kDefaultInvitationTtlMs) : ttl_ms_(ttl_ms) {}

    /// Outbound invitation to a peer in `peers`. Throws Errc::PeerUnknown,
    /// Errc::PeerBusy or Errc::DuplicatePending.
    const Invitation& create(const DeviceId& local, const std::string& local_ssid,
                             std::uint8_t local_go_intent, const PeerTable& peers,
                             const DeviceId& target, TimeMs now, Rng& rng);

    /// Records a delivered INVITE. Throws Errc::DuplicatePending if the same
    /// sender already has an inbound invitation pending.
    const Invitation& receive(const InvitationId& id, const DeviceId& from, const DeviceId& to,
                              const std::string& from_ssid, std::uint8_t from_go_intent, TimeMs now);

    /// Throws Errc::UnknownInvitation, Errc::AlreadyResolved, or
    /// Errc::ExpiredInvitation (the invitation is marked Expired first).
    const Invitation& respond(const InvitationId& id, bool accept, TimeMs now);

    /// Marks a pending invitation as resolved by the remote side.
    const Invitation& resolve_remote(const InvitationId& id, InvitationState next);

    /// Every Pending invitation with now - created_at > ttl becomes Expired.
    std::vector<Invitation> expire(TimeMs now);

    Invitation* find(const InvitationId& id);
    const Invitation* find(const InvitationId& id) const;
    std::vector<Invitation> pending() const;
    std::vector<Invitation> all() const;
    std::optional<TimeMs> next_expiry() const;

    TimeMs ttl_ms() const noexcept { return ttl_ms_; }

private:
    TimeMs ttl_ms_;
    std::map<InvitationId, Invitation> invitations_;
};

/// Group-owner preference, 0..15.
class GoIntent {
public:
    constexpr GoIntent() = default;
    explicit GoIntent(int value);
    constexpr std::uint8_t value() const noexcept { return value_; }

private:
    std::uint8_t value_ = 7;
};

struct RoleClaim {
    GoIntent intent;
    DeviceId device_id;
};

/// Higher intent wins; equal intents go to the greater device id.
/// Throws Errc::InvalidArgument when both claims carry the same id.
DeviceId negotiate_role(const RoleClaim& a, const RoleClaim& b);

struct Group {
    DeviceId owner;
    std::map<DeviceId, std::uint8_t> members;  // includes the owner at address 1
    GroupKey psk;

    bool contains(const DeviceId& id) const { return members.contains(id); }
    std::size_t client_count() const noexcept { return members.empty() ? 0 : members.size() - 1; }
    std::optional<std::uint8_t> address_of(const DeviceId& id) const;
};

/// Owner at address 1, client at 2, fresh key.
Group form_group(const DeviceId& owner, const DeviceId& client, Rng& rng);

/// Lowest free address in 2..254. `via` is the device the request landed on.
/// Throws Errc::NotOwner, Errc::GroupFull, or Errc::PeerBusy (already a member).
std::uint8_t admit_member(Group& group, const DeviceId& peer, const DeviceId& via);

struct DisconnectOutcome {
    bool dissolved = false;
    /// Devices that went back to Available.
    std::vector<DeviceId> released;
};

/// Owner leaving dissolves the group; so does the last client leaving.
/// Throws Errc::NotInGroup.
DisconnectOutcome disconnect(Group& group, const DeviceId& device);

enum class DeviceStatus { Available, Member, Owner };

const char* device_status_name(DeviceStatus status) noexcept;

DeviceStatus status_of(const std::optional<Group>& group, const DeviceId& device);

}  // namespace offat
