#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "offat/device_id.hpp"
#include "offat/discovery.hpp"
#include "offat/grouping.hpp"
#include "offat/profile.hpp"

namespace offat {

class Rng;

struct NodeConfig {
    DeviceId device_id;
    std::string name;
    std::vector<std::string> interests;
    int go_intent = 7;

    std::uint16_t api_port = 7777;
    std::string api_bind = "127.0.0.1";
    /// Required bearer token on the control API when non-empty.
    std::string api_token;
    /// Static files for the browser client; empty disables the mount.
    std::string webui_dir;

    std::string multicast_group = "239.77.68.1";
    std::uint16_t multicast_port = 3773;
    std::uint16_t unicast_port = 3774;
    /// Local interface address for multicast membership and egress.
    std::string interface_addr = "0.0.0.0";

    DiscoveryConfig discovery;
    TimeMs stale_after_ms = 10'000;
    TimeMs invitation_ttl_ms = kDefaultInvitationTtlMs;
    bool airplane = false;

    bool operator==(const NodeConfig&) const = default;

    Profile profile() const { return Profile{name, interests}; }

    /// Throws Errc::InvalidConfig (ports, ranges) or Errc::InvalidProfile.
    void validate() const;

    nlohmann::json to_json() const;
    /// Missing fields keep their defaults. Throws Errc::ParseError naming the field.
    static NodeConfig from_json(const nlohmann::json& doc, const NodeConfig& defaults);
};

/// Defaults with a fresh device id and a name derived from it.
NodeConfig default_config(Rng& rng);

/// Absent file -> defaults (not yet persisted). Throws Errc::ParseError
/// with line/field, or Errc::InvalidProfile / Errc::InvalidConfig.
NodeConfig load_config(const std::filesystem::path& path, Rng& rng);

void save_config(const NodeConfig& config, const std::filesystem::path& path);

}  // namespace offat
