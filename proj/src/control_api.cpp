#include "control_api.hpp"

#include <httplib.h>

#include "offat/error.hpp"
#include "offat/json_io.hpp"
#include "offat/node.hpp"

namespace offat {

using nlohmann::json;

namespace {

int http_status(Errc code) {
    switch (code) {
        case Errc::PeerUnknown:
        case Errc::UnknownInvitation:
        case Errc::UnknownDevice:
            return 404;
        case Errc::AlreadyRunning:
        case Errc::NotRunning:
        case Errc::PeerBusy:
        case Errc::DuplicatePending:
        case Errc::AlreadyResolved:
        case Errc::ExpiredInvitation:
        case Errc::GroupFull:
        case Errc::NotOwner:
        case Errc::NotInGroup:
        case Errc::NotConnected:
        case Errc::NotMember:
            return 409;
        default:
            return 400;
    }
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    reply(res, status, json{{"code", code}, {"message", message}});
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            reply_error(res, http_status(e.code()), errc_name(e.code()), e.what());
        } catch (const json::exception& e) {
            reply_error(res, 400, "ParseError", e.what());
        }
    };
}

json body_of(const httplib::Request& req) {
    json doc = json::parse(req.body.empty() ? std::string("{}") : req.body);
    if (!doc.is_object()) throw Error(Errc::ParseError, "request body must be a JSON object");
    return doc;
}

std::vector<std::uint8_t> from_hex(const std::string& text) {
    if (text.size() % 2) throw Error(Errc::BadLength, "hex data must have an even length");
    auto digit = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw Error(Errc::BadDigit, "hex data contains a non-hex character");
    };
    std::vector<std::uint8_t> out(text.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(digit(text[2 * i]) << 4 | digit(text[2 * i + 1]));
    return out;
}

Payload payload_from_request(const json& body) {
    const std::string kind = body.value("kind", std::string("chat"));
    if (kind == "chat") return body.at("text").get<std::string>();
    if (kind == "ink") return ink_from_json(body.contains("strokes") ? body : body.at("ink"));
    if (kind == "file") {
        FileChunk chunk;
        chunk.name = body.at("name").get<std::string>();
        chunk.index = body.value("index", 0u);
        chunk.total = body.value("total", 1u);
        chunk.data = from_hex(body.at("data_hex").get<std::string>());
        return chunk;
    }
    throw Error(Errc::InvalidArgument, "kind must be chat, ink or file");
}

template <typename T>
T parse_id(const std::string& text) {
    try {
        return T::from_hex(text);
    } catch (const Error&) {
        if constexpr (std::is_same_v<T, InvitationId>) throw Error(Errc::UnknownInvitation, "no invitation " + text);
        else throw Error(Errc::PeerUnknown, "no peer " + text);
    }
}

}  // namespace

std::unique_ptr<httplib::Server> make_control_api(Node& node) {
    auto srv = std::make_unique<httplib::Server>();
    // httplib defaults to SO_REUSEPORT, which lets a second daemon share the port silently
    srv->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    const NodeConfig& cfg = node.config();

    if (!cfg.api_token.empty()) {
        const std::string expected = "Bearer " + cfg.api_token;
        srv->set_pre_routing_handler([expected](const httplib::Request& req, httplib::Response& res) {
            if (req.path.rfind("/v1/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
            if (req.get_header_value("Authorization") == expected) return httplib::Server::HandlerResponse::Unhandled;
            reply_error(res, 401, "Unauthorized", "missing or wrong bearer token");
            return httplib::Server::HandlerResponse::Handled;
        });
    }
    if (!cfg.webui_dir.empty()) srv->set_mount_point("/", cfg.webui_dir);

    srv->Get("/v1/profile", guarded([&node](const httplib::Request&, httplib::Response& res) {
        json out;
        node.run_on_loop([&](ProtocolStack& s, TimeMs) {
            out = to_json(s.profile());
            out["device_id"] = s.device_id().hex();
            out["ssid"] = s.ssid();
        });
        reply(res, 200, out);
    }));

    srv->Put("/v1/profile", guarded([&node](const httplib::Request& req, httplib::Response& res) {
        const json body = body_of(req);
        Profile profile;
        profile.name = body.at("name").get<std::string>();
        const auto& interests = body.at("interests");
        if (interests.is_string()) {
            profile.interests = normalize_interests(interests.get<std::string>());
        } else {
            std::string joined;
            for (const auto& kw : interests) joined += kw.get<std::string>() + ",";
            profile.interests = normalize_interests(joined);
        }
        node.update_profile(profile);
        json out = to_json(profile);
        out["ssid"] = encode_ssid(profile);
        reply(res, 200, out);
    }));

    srv->Get("/v1/peers", guarded([&node](const httplib::Request&, httplib::Response& res) {
        json out = json::array();
        node.run_on_loop([&](ProtocolStack& s, TimeMs) {
            for (const auto& peer : s.peers().snapshot()) out.push_back(to_json(peer));
        });
        reply(res, 200, out);
    }));

    srv->Post("/v1/invitations", guarded([&node](const httplib::Request& req, httplib::Response& res) {
        const json body = body_of(req);
        const auto target = parse_id<DeviceId>(body.at("device_id").get<std::string>());
        json out;
        node.run_on_loop([&](ProtocolStack& s, TimeMs now) {
            const auto id = s.invite(target, now);
            out = to_json(*s.invitations().find(id), now);
        });
        reply(res, 201, out);
    }));

    srv->Get("/v1/invitations", guarded([&node](const httplib::Request&, httplib::Response& res) {
        json out = json::array();
        node.run_on_loop([&](ProtocolStack& s, TimeMs now) {
            for (const auto& inv : s.invitations().pending()) out.push_back(to_json(inv, now));
        });
        reply(res, 200, out);
    }));

    srv->Post(R"(/v1/invitations/([0-9A-Fa-f]+)/response)",
              guarded([&node](const httplib::Request& req, httplib::Response& res) {
                  const auto id = parse_id<InvitationId>(req.matches[1]);
                  const json body = body_of(req);
                  const auto& accept = body.at("accept");
                  if (!accept.is_boolean()) throw Error(Errc::InvalidArgument, "accept must be a boolean");
                  json out;
                  node.run_on_loop([&](ProtocolStack& s, TimeMs now) {
                      s.respond(id, accept.get<bool>(), now);
                      out = to_json(*s.invitations().find(id), now);
                  });
                  reply(res, 200, out);
              }));

    srv->Get("/v1/group", guarded([&node](const httplib::Request&, httplib::Response& res) {
        json out;
        node.run_on_loop([&](ProtocolStack& s, TimeMs) { out = group_to_json(s.group(), s.device_id()); });
        reply(res, 200, out);
    }));

    srv->Post("/v1/messages", guarded([&node](const httplib::Request& req, httplib::Response& res) {
        Payload payload = payload_from_request(body_of(req));
        std::uint64_t seq = 0;
        node.run_on_loop([&](ProtocolStack& s, TimeMs now) { seq = s.send(std::move(payload), now); });
        reply(res, 201, json{{"seq", seq}});
    }));

    srv->Post("/v1/disconnect", guarded([&node](const httplib::Request&, httplib::Response& res) {
        node.run_on_loop([&](ProtocolStack& s, TimeMs now) { s.disconnect(now); });
        reply(res, 200, json::object());
    }));

    srv->Post("/v1/discovery/restart", guarded([&node](const httplib::Request&, httplib::Response& res) {
        node.run_on_loop([&](ProtocolStack& s, TimeMs now) { s.restart_discovery(now); });
        reply(res, 200, json::object());
    }));

    srv->Get("/v1/status", guarded([&node](const httplib::Request&, httplib::Response& res) {
        json out;
        node.run_on_loop([&](ProtocolStack& s, TimeMs now) {
            out = {{"device_id", s.device_id().hex()},
                   {"ssid", s.ssid()},
                   {"status", device_status_name(s.status())},
                   {"phase", phase_name(s.discovery().phase())},
                   {"now_ms", now}};
        });
        out["datagrams_sent"] = node.datagrams_sent();
        out["airplane"] = node.config().airplane;
        reply(res, 200, out);
    }));

    srv->Get("/v1/events", [&node](const httplib::Request& req, httplib::Response& res) {
        std::uint64_t after = 0;
        try {
            if (req.has_param("after")) after = std::stoull(req.get_param_value("after"));
            else if (req.has_header("Last-Event-ID")) after = std::stoull(req.get_header_value("Last-Event-ID"));
        } catch (const std::exception&) {
            reply_error(res, 400, "InvalidArgument", "after must be an event sequence number");
            return;
        }
        res.set_header("Cache-Control", "no-cache");
        auto cursor = std::make_shared<std::uint64_t>(after);
        res.set_chunked_content_provider(
            "text/event-stream", [&node, cursor](std::size_t, httplib::DataSink& sink) {
                if (!node.running()) {
                    sink.done();
                    return true;
                }
                auto events = node.events_after(*cursor, 500);
                std::string chunk;
                for (const auto& e : events) {
                    chunk += "id: " + std::to_string(e.seq) + "\ndata: " + to_json(e).dump() + "\n\n";
                    *cursor = e.seq;
                }
                if (chunk.empty()) chunk = ": keepalive\n\n";
                return sink.write(chunk.data(), chunk.size());
            });
    });

    return srv;
}

}  // namespace offat
