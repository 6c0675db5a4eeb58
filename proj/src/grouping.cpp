#include "offat/grouping.hpp"

#include <algorithm>

#include "offat/error.hpp"
#include "offat/rng.hpp"

namespace offat {

const char* invitation_state_name(InvitationState state) noexcept {
    switch (state) {
        case InvitationState::Pending: return "pending";
        case InvitationState::Accepted: return "accepted";
        case InvitationState::Declined: return "declined";
        case InvitationState::Expired: return "expired";
    }
    return "?";
}

const char* device_status_name(DeviceStatus status) noexcept {
    switch (status) {
        case DeviceStatus::Available: return "available";
        case DeviceStatus::Member: return "member";
        case DeviceStatus::Owner: return "owner";
    }
    return "?";
}

TimeMs Invitation::remaining_ms(TimeMs now) const noexcept {
    return std::max<TimeMs>(0, created_at + ttl_ms - now);
}

void Invitation::resolve(InvitationState next) {
    if (next == InvitationState::Pending) throw Error(Errc::InvalidArgument, "cannot return to pending");
    if (state != InvitationState::Pending) {
        throw Error(Errc::AlreadyResolved, std::string("invitation is ") + invitation_state_name(state));
    }
    state = next;
}

const Invitation& InvitationStore::create(const DeviceId& local, const std::string& local_ssid,
                                          std::uint8_t local_go_intent, const PeerTable& peers,
                                          const DeviceId& target, TimeMs now, Rng& rng) {
    const PeerRecord* peer = peers.find(target);
    if (!peer) throw Error(Errc::PeerUnknown, target.hex());
    if (peer->status == PeerStatus::Connected) throw Error(Errc::PeerBusy, target.hex());
    for (const auto& [id, inv] : invitations_) {
        if (inv.state == InvitationState::Pending && inv.direction == InvitationDirection::Outbound &&
            inv.to == target) {
            throw Error(Errc::DuplicatePending, target.hex());
        }
    }
    Invitation inv;
    do {
        inv.id = InvitationId::random(rng);
    } while (invitations_.contains(inv.id));
    inv.from = local;
    inv.to = target;
    inv.from_ssid = local_ssid;
    inv.from_profile = try_decode_ssid(local_ssid);
    inv.from_go_intent = local_go_intent;
    inv.created_at = now;
    inv.ttl_ms = ttl_ms_;
    inv.direction = InvitationDirection::Outbound;
    return invitations_.emplace(inv.id, inv).first->second;
}

const Invitation& InvitationStore::receive(const InvitationId& id, const DeviceId& from, const DeviceId& to,
                                           const std::string& from_ssid, std::uint8_t from_go_intent,
                                           TimeMs now) {
    if (invitations_.contains(id)) throw Error(Errc::DuplicatePending, "invitation already known");
    for (const auto& [other_id, inv] : invitations_) {
        if (inv.state == InvitationState::Pending && inv.direction == InvitationDirection::Inbound &&
            inv.from == from) {
            throw Error(Errc::DuplicatePending, from.hex());
        }
    }
    Invitation inv;
    inv.id = id;
    inv.from = from;
    inv.to = to;
    inv.from_ssid = from_ssid;
    inv.from_profile = try_decode_ssid(from_ssid);
    inv.from_go_intent = from_go_intent;
    inv.created_at = now;
    inv.ttl_ms = ttl_ms_;
    inv.direction = InvitationDirection::Inbound;
    return invitations_.emplace(id, inv).first->second;
}

const Invitation& InvitationStore::respond(const InvitationId& id, bool accept, TimeMs now) {
    Invitation* inv = find(id);
    if (!inv) throw Error(Errc::UnknownInvitation, id.hex());
    if (inv->state != InvitationState::Pending) {
        throw Error(Errc::AlreadyResolved, std::string("invitation is ") + invitation_state_name(inv->state));
    }
    if (inv->expired_at(now)) {
        inv->resolve(InvitationState::Expired);
        throw Error(Errc::ExpiredInvitation, id.hex());
    }
    inv->resolve(accept ? InvitationState::Accepted : InvitationState::Declined);
    return *inv;
}

const Invitation& InvitationStore::resolve_remote(const InvitationId& id, InvitationState next) {
    Invitation* inv = find(id);
    if (!inv) throw Error(Errc::UnknownInvitation, id.hex());
    inv->resolve(next);
    return *inv;
}

std::vector<Invitation> InvitationStore::expire(TimeMs now) {
    std::vector<Invitation> expired;
    for (auto& [id, inv] : invitations_) {
        if (inv.state == InvitationState::Pending && inv.expired_at(now)) {
            inv.resolve(InvitationState::Expired);
            expired.push_back(inv);
        }
    }
    return expired;
}

Invitation* InvitationStore::find(const InvitationId& id) {
    auto it = invitations_.find(id);
    return it == invitations_.end() ? nullptr : &it->second;
}

const Invitation* InvitationStore::find(const InvitationId& id) const {
    auto it = invitations_.find(id);
    return it == invitations_.end() ? nullptr : &it->second;
}

std::vector<Invitation> InvitationStore::pending() const {
    std::vector<Invitation> out;
    for (const auto& [id, inv] : invitations_) {
        if (inv.state == InvitationState::Pending) out.push_back(inv);
    }
    std::sort(out.begin(), out.end(), [](const Invitation& a, const Invitation& b) {
        return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
    });
    return out;
}

std::vector<Invitation> InvitationStore::all() const {
    std::vector<Invitation> out;
    for (const auto& [id, inv] : invitations_) out.push_back(inv);
    return out;
}

std::optional<TimeMs> InvitationStore::next_expiry() const {
    std::optional<TimeMs> earliest;
    for (const auto& [id, inv] : invitations_) {
        if (inv.state != InvitationState::Pending) continue;
        TimeMs t = inv.created_at + inv.ttl_ms + 1;
        if (!earliest || t < *earliest) earliest = t;
    }
    return earliest;
}

GoIntent::GoIntent(int value) {
    if (value < 0 || value > 15) throw Error(Errc::InvalidArgument, "GO intent must be in 0..15");
    value_ = static_cast<std::uint8_t>(value);
}

DeviceId negotiate_role(const RoleClaim& a, const RoleClaim& b) {
    if (a.device_id == b.device_id) throw Error(Errc::InvalidArgument, "both claims carry the same device id");
    if (a.intent.value() != b.intent.value()) {
        return a.intent.value() > b.intent.value() ? a.device_id : b.device_id;
    }
    return std::max(a.device_id, b.device_id);
}

std::optional<std::uint8_t> Group::address_of(const DeviceId& id) const {
    auto it = members.find(id);
    if (it == members.end()) return std::nullopt;
    return it->second;
}

Group form_group(const DeviceId& owner, const DeviceId& client, Rng& rng) {
    if (owner == client) throw Error(Errc::InvalidArgument, "owner and client must differ");
    Group group;
    group.owner = owner;
    group.members.emplace(owner, kOwnerAddress);
    group.members.emplace(client, kFirstClientAddress);
    group.psk = GroupKey::generate(rng);
    return group;
}

std::uint8_t admit_member(Group& group, const DeviceId& peer, const DeviceId& via) {
    if (via != group.owner) throw Error(Errc::NotOwner, "admission must go through the group owner");
    if (group.contains(peer)) throw Error(Errc::PeerBusy, "already a member");
    std::array<bool, 256> used{};
    for (const auto& [id, addr] : group.members) used[addr] = true;
    for (int addr = kFirstClientAddress; addr <= kLastClientAddress; ++addr) {
        if (!used[addr]) {
            group.members.emplace(peer, static_cast<std::uint8_t>(addr));
            return static_cast<std::uint8_t>(addr);
        }
    }
    throw Error(Errc::GroupFull, std::to_string(group.client_count()) + " clients");
}

DisconnectOutcome disconnect(Group& group, const DeviceId& device) {
    if (!group.contains(device)) throw Error(Errc::NotInGroup, device.hex());
    DisconnectOutcome out;
    if (device == group.owner || group.members.size() <= 2) {
        out.dissolved = true;
        for (const auto& [id, addr] : group.members) out.released.push_back(id);
        group.members.clear();
        return out;
    }
    group.members.erase(device);
    out.released.push_back(device);
    return out;
}

DeviceStatus status_of(const std::optional<Group>& group, const DeviceId& device) {
    if (!group || !group->contains(device)) return DeviceStatus::Available;
    return group->owner == device ? DeviceStatus::Owner : DeviceStatus::Member;
}

}  // namespace offat
