#include "offat/stack.hpp"

#include <algorithm>

#include "offat/error.hpp"
#include "offat/json_io.hpp"

namespace offat {

using nlohmann::json;

ProtocolStack::ProtocolStack(StackConfig config, Rng rng)
    : config_(std::move(config)),
      rng_(std::move(rng)),
      discovery_(config_.device_id, config_.discovery, encode_ssid(config_.profile)),
      peers_(config_.stale_after_ms),
      invitations_(config_.invitation_ttl_ms),
      nonce_(config_.device_id) {}

void ProtocolStack::emit(TimeMs now, std::string type, json details) {
    events_.push_back(ControlEvent{++event_seq_, now, std::move(type), std::move(details)});
}

DeviceStatus ProtocolStack::status() const { return status_of(group_, config_.device_id); }

std::vector<Outbound> ProtocolStack::take_outbound() { return std::exchange(outbound_, {}); }

std::vector<ControlEvent> ProtocolStack::take_events() { return std::exchange(events_, {}); }

// ---------------------------------------------------------------------------
// commands

void ProtocolStack::set_profile(Profile profile, TimeMs now) {
    auto ssid = encode_ssid(profile);
    config_.profile = std::move(profile);
    discovery_.set_ssid(ssid);
    peers_.rescore(config_.profile);
    json details = to_json(config_.profile);
    details["ssid"] = ssid;
    emit(now, "profile_updated", std::move(details));
}

void ProtocolStack::start_discovery(TimeMs now) {
    discovery_.start(rng_, now, config_.listen_channel);
}

void ProtocolStack::stop_discovery() { discovery_.stop(); }

void ProtocolStack::restart_discovery(TimeMs now) {
    discovery_.stop();
    discovery_.start(rng_, now, config_.listen_channel);
}

InvitationId ProtocolStack::invite(const DeviceId& target, TimeMs now) {
    if (status() == DeviceStatus::Member) throw Error(Errc::NotOwner, "group clients cannot invite");
    const Invitation& inv = invitations_.create(config_.device_id, ssid(), config_.go_intent.value(), peers_,
                                                target, now, rng_);
    outbound_.push_back({Outbound::Route::Unicast, target,
                         InviteFrame{inv.id, config_.device_id, config_.go_intent.value(), ssid()}});
    ++counters_.invitations_sent;
    emit(now, "invitation_sent", to_json(inv, now));
    return inv.id;
}

void ProtocolStack::respond(const InvitationId& id, bool accept, TimeMs now) {
    const Invitation* found = invitations_.find(id);
    if (!found || found->direction != InvitationDirection::Inbound) throw Error(Errc::UnknownInvitation, id.hex());
    if (accept && status() == DeviceStatus::Member) throw Error(Errc::NotOwner, "group clients cannot admit");
    const DeviceId peer = found->from;
    try {
        invitations_.respond(id, accept, now);
    } catch (const Error& e) {
        if (e.code() == Errc::ExpiredInvitation) {
            emit(now, "invitation_resolved", {{"id", id.hex()}, {"outcome", "expired"}, {"direction", "inbound"}});
        }
        throw;
    }
    if (!accept) {
        send_response(peer, id, false);
        emit(now, "invitation_resolved", {{"id", id.hex()}, {"outcome", "declined"}, {"direction", "inbound"}});
        return;
    }
    emit(now, "invitation_resolved", {{"id", id.hex()}, {"outcome", "accepted"}, {"direction", "inbound"}});
    if (status() == DeviceStatus::Owner) {
        admit_into_group(peer, id, now);
    } else {
        send_response(peer, id, true);
        awaiting_[id] = peer;
    }
}

std::uint64_t ProtocolStack::send(Payload payload, TimeMs now) {
    if (kind_of(payload) == MessageKind::Control) throw Error(Errc::InvalidArgument, "control payloads are internal");
    Message m = compose(config_.device_id, std::move(payload), seq_, group_.has_value());
    std::vector<DeviceId> recipients;
    if (status() == DeviceStatus::Owner) {
        for (const auto& [id, addr] : group_->members) {
            if (id != config_.device_id) recipients.push_back(id);
        }
    } else {
        recipients.push_back(group_->owner);
    }
    send_sealed(m, recipients);
    ++counters_.messages_sent;
    counters_.deliveries_expected += group_->members.size() - 1;
    json details = payload_to_json(m.payload);
    details["sender"] = m.sender.hex();
    details["seq"] = m.seq;
    details["kind"] = message_kind_name(m.kind);
    details["outgoing"] = true;
    emit(now, "message", std::move(details));
    return m.seq;
}

void ProtocolStack::disconnect(TimeMs now) {
    if (!group_) throw Error(Errc::NotInGroup, "not in a group");
    if (status() == DeviceStatus::Owner) {
        Message m = compose(config_.device_id, ControlPayload{ControlPayload::Op::Dissolve, {}}, seq_, true);
        std::vector<DeviceId> clients;
        for (const auto& [id, addr] : group_->members) {
            if (id != config_.device_id) clients.push_back(id);
        }
        send_sealed(m, clients);
        leave_group_locally(now, "owner_left");
        return;
    }
    Message m = compose(config_.device_id, ControlPayload{ControlPayload::Op::Leave, {}}, seq_, true);
    send_sealed(m, {group_->owner});
    group_.reset();
    guard_.clear();
    seq_.reset();
    sync_peer_statuses();
    emit(now, "member_left", {{"device_id", config_.device_id.hex()}, {"self", true}});
}

// ---------------------------------------------------------------------------
// inputs

void ProtocolStack::tick(TimeMs now) {
    if (discovery_.phase() != Phase::Off && now >= discovery_.next_wakeup()) {
        if (auto probe = discovery_.advance(now, rng_)) {
            outbound_.push_back({Outbound::Route::Broadcast, {},
                                 ProbeFrame{config_.device_id, probe->channel, probe->ssid}});
        }
    }
    for (const auto& id : peers_.evict_stale(now)) emit(now, "peer_lost", {{"device_id", id.hex()}});
    for (const auto& inv : invitations_.expire(now)) {
        const bool outbound = inv.direction == InvitationDirection::Outbound;
        if (outbound) ++counters_.invitations_expired;
        emit(now, "invitation_resolved",
             {{"id", inv.id.hex()}, {"outcome", "expired"}, {"direction", outbound ? "outbound" : "inbound"}});
    }
}

TimeMs ProtocolStack::next_wakeup(TimeMs now) const {
    TimeMs next = discovery_.next_wakeup();
    if (auto t = invitations_.next_expiry()) next = std::min(next, *t);
    if (auto t = peers_.next_expiry()) next = std::min(next, *t);
    return next == kNever ? kNever : std::max(next, now);
}

void ProtocolStack::on_frame(const WireFrame& frame, TimeMs now) {
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ProbeFrame>) handle_probe(f, now);
            else if constexpr (std::is_same_v<T, BeaconFrame>) handle_beacon(f, now);
            else if constexpr (std::is_same_v<T, InviteFrame>) handle_invite(f, now);
            else if constexpr (std::is_same_v<T, InviteResponseFrame>) handle_invite_response(f, now);
            else handle_sealed(f, now);
        },
        frame);
}

void ProtocolStack::record_peer(const std::string& ssid, const DeviceId& id, TimeMs now) {
    const auto status = group_ && group_->contains(id) ? PeerStatus::Connected : PeerStatus::Available;
    auto result = peers_.upsert(ssid, id, status, now, config_.profile);
    if (result.inserted) {
        emit(now, "peer_found", to_json(result.record));
    } else if (result.changed) {
        emit(now, "peer_updated", to_json(result.record));
    }
}

void ProtocolStack::handle_probe(const ProbeFrame& probe, TimeMs now) {
    if (probe.device == config_.device_id || discovery_.phase() == Phase::Off) return;
    auto beacon = discovery_.on_probe(probe.channel);
    if (!beacon) return;
    record_peer(probe.ssid, probe.device, now);
    outbound_.push_back({Outbound::Route::Unicast, probe.device,
                         BeaconFrame{config_.device_id, beacon->ssid, beacon->listen_channel}});
}

void ProtocolStack::handle_beacon(const BeaconFrame& beacon, TimeMs now) {
    if (beacon.device == config_.device_id || discovery_.phase() == Phase::Off) return;
    record_peer(beacon.ssid, beacon.device, now);
}

void ProtocolStack::handle_invite(const InviteFrame& invite, TimeMs now) {
    if (invite.from == config_.device_id) return;
    record_peer(invite.ssid, invite.from, now);
    if (status() == DeviceStatus::Member) {
        send_response(invite.from, invite.invitation, false);
        emit(now, "invitation_resolved",
             {{"id", invite.invitation.hex()}, {"outcome", "declined"}, {"direction", "inbound"}, {"reason", "NotOwner"}});
        return;
    }
    try {
        const Invitation& inv = invitations_.receive(invite.invitation, invite.from, config_.device_id,
                                                     invite.ssid, invite.go_intent, now);
        json details = to_json(inv, now);
        if (inv.from_profile) details["similarity"] = keyword_similarity(config_.profile.interests, inv.from_profile->interests).value();
        emit(now, "invitation_received", std::move(details));
    } catch (const Error&) {
        ++counters_.malformed;
    }
}

DeviceId ProtocolStack::peer_of(const Invitation& invitation) const {
    return invitation.direction == InvitationDirection::Outbound ? invitation.to : invitation.from;
}

void ProtocolStack::handle_invite_response(const InviteResponseFrame& response, TimeMs now) {
    Invitation* inv = invitations_.find(response.invitation);
    if (!inv) {
        ++counters_.malformed;
        return;
    }
    const DeviceId peer = peer_of(*inv);
    const InvitationId id = inv->id;

    if (inv->direction == InvitationDirection::Outbound && inv->state == InvitationState::Pending) {
        if (inv->expired_at(now)) {
            inv->resolve(InvitationState::Expired);
            ++counters_.invitations_expired;
            emit(now, "invitation_resolved", {{"id", id.hex()}, {"outcome", "expired"}, {"direction", "outbound"}});
            if (response.accept) send_response(peer, id, false);
            return;
        }
        if (!response.accept) {
            inv->resolve(InvitationState::Declined);
            ++counters_.invitations_declined;
            emit(now, "invitation_resolved", {{"id", id.hex()}, {"outcome", "declined"}, {"direction", "outbound"}});
            return;
        }
        inv->resolve(InvitationState::Accepted);
        ++counters_.invitations_accepted;
        emit(now, "invitation_resolved", {{"id", id.hex()}, {"outcome", "accepted"}, {"direction", "outbound"}});
        if (response.credentials) {
            if (status() == DeviceStatus::Available) {
                join_group(peer, *response.credentials, now);
            } else {
                send_response(peer, id, false);
            }
            return;
        }
        switch (status()) {
            case DeviceStatus::Owner:
                admit_into_group(peer, id, now);
                break;
            case DeviceStatus::Member:
                send_response(peer, id, false);
                break;
            case DeviceStatus::Available: {
                const DeviceId owner = negotiate_role({config_.go_intent, config_.device_id},
                                                      {GoIntent(std::min<int>(response.go_intent, 15)), peer});
                if (owner == config_.device_id) {
                    become_owner(peer, id, now);
                } else {
                    send_response(peer, id, true);
                    awaiting_[id] = peer;
                }
                break;
            }
        }
        return;
    }

    auto waiting = awaiting_.find(id);
    if (waiting == awaiting_.end()) return;
    awaiting_.erase(waiting);
    if (response.credentials) {
        if (status() == DeviceStatus::Available) {
            join_group(peer, *response.credentials, now);
        } else {
            send_response(peer, id, false);
        }
    } else if (response.accept) {
        // Negotiation on the other side made this device the owner.
        if (status() == DeviceStatus::Available) {
            become_owner(peer, id, now);
        } else if (status() == DeviceStatus::Owner) {
            admit_into_group(peer, id, now);
        } else {
            send_response(peer, id, false);
        }
    } else {
        emit(now, "group_aborted", {{"id", id.hex()}, {"peer", peer.hex()}});
    }
}

void ProtocolStack::send_response(const DeviceId& to, const InvitationId& id, bool accept,
                                  std::optional<GroupCredentials> credentials) {
    outbound_.push_back({Outbound::Route::Unicast, to,
                         InviteResponseFrame{id, accept, config_.go_intent.value(), std::move(credentials)}});
}

// ---------------------------------------------------------------------------
// group membership

void ProtocolStack::become_owner(const DeviceId& client, const InvitationId& via, TimeMs now) {
    group_ = form_group(config_.device_id, client, rng_);
    seq_.reset();
    guard_.clear();
    guard_.admit(client);
    send_response(client, via, true, GroupCredentials{group_->psk, kFirstClientAddress});
    sync_peer_statuses();
    json details = group_to_json(group_, config_.device_id);
    emit(now, "group_formed", std::move(details));
    emit(now, "member_joined", {{"device_id", client.hex()}, {"address", kFirstClientAddress}});
    broadcast_roster(now);
}

void ProtocolStack::admit_into_group(const DeviceId& peer, const InvitationId& via, TimeMs now) {
    std::uint8_t address = 0;
    try {
        address = admit_member(*group_, peer, config_.device_id);
    } catch (const Error& e) {
        send_response(peer, via, false);
        emit(now, "group_aborted", {{"id", via.hex()}, {"peer", peer.hex()}, {"code", errc_name(e.code())}});
        return;
    }
    guard_.admit(peer);
    send_response(peer, via, true, GroupCredentials{group_->psk, address});
    sync_peer_statuses();
    emit(now, "member_joined", {{"device_id", peer.hex()}, {"address", address}});
    broadcast_roster(now);
}

void ProtocolStack::join_group(const DeviceId& owner, const GroupCredentials& credentials, TimeMs now) {
    Group g;
    g.owner = owner;
    g.members.emplace(owner, kOwnerAddress);
    g.members.emplace(config_.device_id, credentials.group_address);
    g.psk = credentials.psk;
    group_ = std::move(g);
    seq_.reset();
    guard_.clear();
    guard_.admit_midstream(owner);
    sync_peer_statuses();
    emit(now, "group_formed", group_to_json(group_, config_.device_id));
}

void ProtocolStack::broadcast_roster(TimeMs now) {
    (void)now;
    Message m = compose(config_.device_id, ControlPayload{ControlPayload::Op::Roster, group_->members}, seq_, true);
    std::vector<DeviceId> clients;
    for (const auto& [id, addr] : group_->members) {
        if (id != config_.device_id) clients.push_back(id);
    }
    send_sealed(m, clients);
}

void ProtocolStack::apply_roster(const std::map<DeviceId, std::uint8_t>& roster, TimeMs now) {
    if (!roster.contains(config_.device_id)) {
        leave_group_locally(now, "removed");
        return;
    }
    for (const auto& [id, addr] : roster) {
        if (!group_->members.contains(id)) {
            guard_.admit_midstream(id);
            emit(now, "member_joined", {{"device_id", id.hex()}, {"address", addr}});
        }
    }
    for (const auto& [id, addr] : group_->members) {
        if (!roster.contains(id)) {
            guard_.forget(id);
            emit(now, "member_left", {{"device_id", id.hex()}});
        }
    }
    group_->members = roster;
    sync_peer_statuses();
}

void ProtocolStack::leave_group_locally(TimeMs now, const char* reason) {
    group_.reset();
    guard_.clear();
    seq_.reset();
    sync_peer_statuses();
    emit(now, "group_dissolved", {{"reason", reason}});
}

void ProtocolStack::sync_peer_statuses() {
    for (const auto& rec : peers_.snapshot()) {
        peers_.set_status(rec.device_id,
                          group_ && group_->contains(rec.device_id) ? PeerStatus::Connected : PeerStatus::Available);
    }
}

void ProtocolStack::send_sealed(const Message& message, const std::vector<DeviceId>& recipients) {
    const auto plaintext = encode_payload(message.payload);
    SealedHeader header{message.sender, message.seq, static_cast<std::uint8_t>(message.kind)};
    SealedFrame sealed = seal(group_->psk, header, plaintext, nonce_);
    for (const auto& to : recipients) outbound_.push_back({Outbound::Route::Unicast, to, sealed});
}

void ProtocolStack::handle_sealed(const SealedFrame& sealed, TimeMs now) {
    if (!group_) {
        ++counters_.unknown_sender;
        return;
    }
    std::vector<std::uint8_t> plaintext;
    try {
        plaintext = open(group_->psk, sealed).second;
    } catch (const Error&) {
        ++counters_.auth_failures;
        return;
    }
    const SealedHeader& header = sealed.header;
    if (header.sender == config_.device_id) {
        ++counters_.duplicates;
        return;
    }
    InboundVerdict verdict;
    try {
        verdict = guard_.accept_inbound(header.sender, header.seq);
    } catch (const Error&) {
        ++counters_.unknown_sender;
        return;
    }
    if (verdict.action == InboundVerdict::Action::Duplicate) {
        ++counters_.duplicates;
        return;
    }
    if (verdict.gap) {
        ++counters_.gaps;
        emit(now, "gap_detected",
             {{"sender", header.sender.hex()}, {"first", verdict.gap->first}, {"last", verdict.gap->last}});
    }
    if (header.kind > static_cast<std::uint8_t>(MessageKind::Control)) {
        ++counters_.malformed;
        return;
    }
    const auto kind = static_cast<MessageKind>(header.kind);
    Payload payload;
    try {
        payload = decode_payload(kind, plaintext);
    } catch (const Error&) {
        ++counters_.malformed;
        return;
    }
    if (kind == MessageKind::Control) {
        handle_control(header.sender, std::get<ControlPayload>(payload), now);
        return;
    }
    RouteResult routed;
    try {
        routed = route(*group_, header.sender, config_.device_id);
    } catch (const Error&) {
        ++counters_.unknown_sender;
        return;
    }
    for (const auto& to : routed.forward_to) outbound_.push_back({Outbound::Route::Unicast, to, sealed});
    if (!routed.deliver_local) return;
    ++counters_.messages_delivered;
    json details = payload_to_json(payload);
    details["sender"] = header.sender.hex();
    details["seq"] = header.seq;
    details["kind"] = message_kind_name(kind);
    details["outgoing"] = false;
    emit(now, "message", std::move(details));
    if (config_.record_deliveries) delivered_.push_back(Message{header.sender, header.seq, kind, std::move(payload)});
}

void ProtocolStack::handle_control(const DeviceId& sender, const ControlPayload& control, TimeMs now) {
    switch (control.op) {
        case ControlPayload::Op::Roster:
            if (sender == group_->owner && status() == DeviceStatus::Member) apply_roster(control.roster, now);
            break;
        case ControlPayload::Op::Leave: {
            if (status() != DeviceStatus::Owner || !group_->contains(sender)) break;
            auto outcome = offat::disconnect(*group_, sender);
            guard_.forget(sender);
            emit(now, "member_left", {{"device_id", sender.hex()}});
            if (outcome.dissolved) {
                leave_group_locally(now, "last_member_left");
            } else {
                sync_peer_statuses();
                broadcast_roster(now);
            }
            break;
        }
        case ControlPayload::Op::Dissolve:
            if (sender == group_->owner) leave_group_locally(now, "owner_left");
            break;
    }
}

}  // namespace offat
