#include "offat/json_io.hpp"

#include "offat/error.hpp"

namespace offat {

using nlohmann::json;

json to_json(const Profile& profile) { return {{"name", profile.name}, {"interests", profile.interests}}; }

json to_json(const PeerRecord& peer) {
    json j;
    j["device_id"] = peer.device_id.hex();
    j["ssid"] = peer.ssid;
    j["name"] = peer.profile ? json(peer.profile->name) : json(nullptr);
    j["interests"] = peer.profile ? json(peer.profile->interests) : json::array();
    j["similarity"] = peer.similarity ? json(peer.similarity->value()) : json(nullptr);
    j["status"] = peer_status_name(peer.status);
    j["last_seen_ms"] = peer.last_seen;
    return j;
}

json to_json(const Invitation& inv, TimeMs now) {
    json j;
    j["id"] = inv.id.hex();
    j["direction"] = inv.direction == InvitationDirection::Outbound ? "outbound" : "inbound";
    j["from"] = inv.from.hex();
    j["to"] = inv.to.hex();
    j["name"] = inv.from_profile ? json(inv.from_profile->name) : json(nullptr);
    j["interests"] = inv.from_profile ? json(inv.from_profile->interests) : json::array();
    j["go_intent"] = inv.from_go_intent;
    j["created_at_ms"] = inv.created_at;
    j["ttl_ms"] = inv.ttl_ms;
    j["remaining_ms"] = inv.remaining_ms(now);
    j["state"] = invitation_state_name(inv.state);
    return j;
}

json to_json(const InkNote& note) {
    json strokes = json::array();
    for (const auto& stroke : note.strokes) {
        json points = json::array();
        for (const auto& p : stroke) points.push_back({p.x, p.y});
        strokes.push_back(std::move(points));
    }
    return {{"strokes", std::move(strokes)}};
}

json to_json(const ControlEvent& event) {
    return {{"seq", event.seq}, {"t_ms", event.t_ms}, {"type", event.type}, {"details", event.details}};
}

json group_to_json(const std::optional<Group>& group, const DeviceId& self) {
    if (!group) return nullptr;
    json members = json::array();
    for (const auto& [id, addr] : group->members) {
        members.push_back({{"device_id", id.hex()}, {"address", addr}, {"owner", id == group->owner}});
    }
    return {{"role", group->owner == self ? "owner" : "member"},
            {"owner", group->owner.hex()},
            {"members", std::move(members)}};
}

InkNote ink_from_json(const json& value) {
    const json& strokes = value.is_object() ? value.at("strokes") : value;
    if (!strokes.is_array()) throw Error(Errc::MalformedInk, "strokes must be an array");
    InkNote note;
    try {
        for (const auto& s : strokes) {
            Stroke stroke;
            for (const auto& p : s) {
                if (p.is_array() && p.size() == 2) {
                    stroke.push_back({p[0].get<double>(), p[1].get<double>()});
                } else {
                    stroke.push_back({p.at("x").get<double>(), p.at("y").get<double>()});
                }
            }
            note.strokes.push_back(std::move(stroke));
        }
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInk, e.what());
    }
    validate_ink(note);
    return note;
}

json payload_to_json(const Payload& payload) {
    switch (kind_of(payload)) {
        case MessageKind::Chat:
            return {{"text", std::get<std::string>(payload)}};
        case MessageKind::Ink:
            return to_json(std::get<InkNote>(payload));
        case MessageKind::File: {
            const auto& f = std::get<FileChunk>(payload);
            static constexpr char digits[] = "0123456789abcdef";
            std::string hex;
            hex.reserve(f.data.size() * 2);
            for (auto b : f.data) {
                hex.push_back(digits[b >> 4]);
                hex.push_back(digits[b & 0xf]);
            }
            return {{"name", f.name}, {"index", f.index}, {"total", f.total}, {"data_hex", hex}};
        }
        case MessageKind::Control:
            return {{"op", static_cast<int>(std::get<ControlPayload>(payload).op)}};
    }
    return json::object();
}

}  // namespace offat
