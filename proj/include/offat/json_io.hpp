#pragma once

#include <json.hpp>

#include "offat/discovery.hpp"
#include "offat/grouping.hpp"
#include "offat/messaging.hpp"
#include "offat/profile.hpp"
#include "offat/stack.hpp"

namespace offat {

nlohmann::json to_json(const Profile& profile);
nlohmann::json to_json(const PeerRecord& peer);
nlohmann::json to_json(const Invitation& invitation, TimeMs now);
nlohmann::json to_json(const InkNote& note);
nlohmann::json to_json(const ControlEvent& event);

/// {"role": "owner"|"member", "owner": hex, "members": [{device_id, address}]} or null.
nlohmann::json group_to_json(const std::optional<Group>& group, const DeviceId& self);

/// Accepts {"strokes": [[[x,y],...],...]} or a bare stroke array.
/// Throws Errc::MalformedInk.
InkNote ink_from_json(const nlohmann::json& value);

/// JSON form of a delivered payload (chat text, ink strokes, file chunk).
nlohmann::json payload_to_json(const Payload& payload);

}  // namespace offat
