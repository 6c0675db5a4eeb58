#include "offat/config.hpp"

#include <fstream>
#include <sstream>

#include "offat/error.hpp"
#include "offat/rng.hpp"

namespace offat {

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& doc, const char* key, T& out) {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw Error(Errc::ParseError, std::string("field '") + key + "' has the wrong type");
    }
}

void read_port(const json& doc, const char* key, std::uint16_t& out) {
    std::int64_t value = out;
    read_field(doc, key, value);
    if (value < 0 || value > 65535)
        throw Error(Errc::ParseError, std::string("field '") + key + "' is not a port");
    out = static_cast<std::uint16_t>(value);
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace

void NodeConfig::validate() const {
    if (go_intent < 0 || go_intent > 15)
        throw Error(Errc::InvalidConfig, "go_intent must be within 0..15");
    if (api_port == multicast_port || api_port == unicast_port || multicast_port == unicast_port)
        throw Error(Errc::InvalidConfig, "api, multicast and unicast ports must be distinct");
    if (discovery.dwell_min_ms == 0 || discovery.dwell_min_ms > discovery.dwell_max_ms)
        throw Error(Errc::InvalidConfig, "dwell bounds must satisfy 0 < min <= max");
    if (discovery.probe_interval_ms == 0)
        throw Error(Errc::InvalidConfig, "probe_interval_ms must be positive");
    if (stale_after_ms <= 0 || invitation_ttl_ms <= 0)
        throw Error(Errc::InvalidConfig, "timeouts must be positive");
    try {
        encode_ssid(profile());
    } catch (const Error& e) {
        throw Error(Errc::InvalidProfile, e.what());
    }
}

json NodeConfig::to_json() const {
    return json{
        {"device_id", device_id.hex()},
        {"name", name},
        {"interests", interests},
        {"go_intent", go_intent},
        {"api_port", api_port},
        {"api_bind", api_bind},
        {"api_token", api_token},
        {"webui_dir", webui_dir},
        {"multicast_group", multicast_group},
        {"multicast_port", multicast_port},
        {"unicast_port", unicast_port},
        {"interface_addr", interface_addr},
        {"dwell_min_ms", discovery.dwell_min_ms},
        {"dwell_max_ms", discovery.dwell_max_ms},
        {"probe_interval_ms", discovery.probe_interval_ms},
        {"stale_after_ms", stale_after_ms},
        {"invitation_ttl_ms", invitation_ttl_ms},
        {"airplane", airplane},
    };
}

NodeConfig NodeConfig::from_json(const json& doc, const NodeConfig& defaults) {
    if (!doc.is_object()) throw Error(Errc::ParseError, "config must be a JSON object");
    NodeConfig c = defaults;
    if (auto it = doc.find("device_id"); it != doc.end()) {
        if (!it->is_string()) throw Error(Errc::ParseError, "field 'device_id' has the wrong type");
        try {
            c.device_id = DeviceId::from_hex(it->get<std::string>());
        } catch (const Error&) {
            throw Error(Errc::ParseError, "field 'device_id' is not 32 hex digits");
        }
    }
    read_field(doc, "name", c.name);
    if (auto it = doc.find("interests"); it != doc.end() && it->is_string()) {
        c.interests = normalize_interests(it->get<std::string>());
    } else {
        read_field(doc, "interests", c.interests);
    }
    read_field(doc, "go_intent", c.go_intent);
    read_port(doc, "api_port", c.api_port);
    read_field(doc, "api_bind", c.api_bind);
    read_field(doc, "api_token", c.api_token);
    read_field(doc, "webui_dir", c.webui_dir);
    read_field(doc, "multicast_group", c.multicast_group);
    read_port(doc, "multicast_port", c.multicast_port);
    read_port(doc, "unicast_port", c.unicast_port);
    read_field(doc, "interface_addr", c.interface_addr);
    read_field(doc, "dwell_min_ms", c.discovery.dwell_min_ms);
    read_field(doc, "dwell_max_ms", c.discovery.dwell_max_ms);
    read_field(doc, "probe_interval_ms", c.discovery.probe_interval_ms);
    read_field(doc, "stale_after_ms", c.stale_after_ms);
    read_field(doc, "invitation_ttl_ms", c.invitation_ttl_ms);
    read_field(doc, "airplane", c.airplane);
    return c;
}

NodeConfig default_config(Rng& rng) {
    NodeConfig c;
    c.device_id = DeviceId::random(rng);
    c.name = "offat-" + c.device_id.hex().substr(0, 4);
    return c;
}

NodeConfig load_config(const std::filesystem::path& path, Rng& rng) {
    NodeConfig defaults = default_config(rng);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        defaults.validate();
        return defaults;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ParseError, path.string() + ": line " + std::to_string(line_of(text, e.byte)) +
                                          ": invalid JSON");
    }
    NodeConfig c = NodeConfig::from_json(doc, defaults);
    c.validate();
    return c;
}

void save_config(const NodeConfig& config, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::InvalidArgument, "cannot write " + tmp.string());
        out << config.to_json().dump(2) << '\n';
        if (!out) throw Error(Errc::InvalidArgument, "cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace offat
