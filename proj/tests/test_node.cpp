#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "offat/config.hpp"
#include "offat/error.hpp"
#include "offat/node.hpp"
#include "offat/rng.hpp"

using namespace offat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::InvalidArgument;
}

struct TempDir {
    fs::path path;
    TempDir() {
        Rng rng(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
        path = fs::temp_directory_path() / ("offat-test-" + std::to_string(rng.next()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

NodeConfig airplane_config() {
    Rng rng(5);
    auto cfg = default_config(rng);
    cfg.name = "ann";
    cfg.interests = {"music", "chess"};
    cfg.api_port = 0;
    cfg.airplane = true;
    return cfg;
}

json body(const httplib::Result& r) { return json::parse(r->body); }

}  // namespace

TEST_CASE("config defaults and round trip") {
    Rng rng(1);
    const auto cfg = default_config(rng);
    CHECK(cfg.go_intent == 7);
    CHECK(cfg.invitation_ttl_ms == 30'000);
    CHECK(cfg.discovery.dwell_min_ms == 100);
    CHECK(cfg.discovery.dwell_max_ms == 300);
    CHECK(cfg.discovery.probe_interval_ms == 20);
    CHECK(cfg.name.rfind("offat-", 0) == 0);
    CHECK_NOTHROW(cfg.validate());
    CHECK(NodeConfig::from_json(cfg.to_json(), NodeConfig{}) == cfg);

    TempDir dir;
    save_config(cfg, dir.path / "c.json");
    CHECK(load_config(dir.path / "c.json", rng) == cfg);
    const auto fresh = load_config(dir.path / "absent.json", rng);
    CHECK_FALSE(fs::exists(dir.path / "absent.json"));
    CHECK(fresh.device_id != cfg.device_id);
}

TEST_CASE("config errors") {
    TempDir dir;
    Rng rng(2);
    write(dir.path / "bad.json", "{\n  \"name\": \"ann\",\n  oops\n}\n");
    try {
        load_config(dir.path / "bad.json", rng);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    write(dir.path / "type.json", R"({"go_intent": "high"})");
    try {
        load_config(dir.path / "type.json", rng);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(std::string(e.what()).find("go_intent") != std::string::npos);
    }
    write(dir.path / "long.json", R"({"name": "Alexandrina", "interests": "jurisprudence chess go"})");
    CHECK(code_of([&] { load_config(dir.path / "long.json", rng); }) == Errc::InvalidProfile);
    write(dir.path / "ports.json", R"({"unicast_port": 4000, "multicast_port": 4000})");
    CHECK(code_of([&] { load_config(dir.path / "ports.json", rng); }) == Errc::InvalidConfig);
    write(dir.path / "intent.json", R"({"go_intent": 16})");
    CHECK(code_of([&] { load_config(dir.path / "intent.json", rng); }) == Errc::InvalidConfig);
    write(dir.path / "dwell.json", R"({"dwell_min_ms": 300, "dwell_max_ms": 100})");
    CHECK(code_of([&] { load_config(dir.path / "dwell.json", rng); }) == Errc::InvalidConfig);
    write(dir.path / "str.json", R"({"interests": "Music  GO,music"})");
    CHECK(load_config(dir.path / "str.json", rng).interests == std::vector<std::string>{"music", "go"});
}

TEST_CASE("airplane node serves the control api without radio traffic") {
    TempDir dir;
    Node node(airplane_config(), 9);
    node.set_config_path(dir.path / "node.json");
    node.start();
    REQUIRE(node.running());
    REQUIRE(node.api_port() != 0);
    httplib::Client cli("127.0.0.1", node.api_port());

    auto peers = cli.Get("/v1/peers");
    REQUIRE(peers);
    CHECK(peers->status == 200);
    CHECK(body(peers) == json::array());

    auto profile = cli.Get("/v1/profile");
    CHECK(body(profile)["ssid"] == "ann#music,chess");

    auto oversize = cli.Put("/v1/profile", R"({"name":"Alexandrina","interests":"jurisprudence chess go"})",
                            "application/json");
    CHECK(oversize->status == 400);
    CHECK(body(oversize)["code"] == "Oversize");
    CHECK(body(cli.Get("/v1/profile"))["ssid"] == "ann#music,chess");

    auto changed = cli.Put("/v1/profile", R"({"name":"ann","interests":["Food","go"]})", "application/json");
    CHECK(changed->status == 200);
    CHECK(body(changed)["ssid"] == "ann#food,go");
    Rng rng(3);
    CHECK(load_config(dir.path / "node.json", rng).interests == std::vector<std::string>{"food", "go"});

    CHECK(cli.Post("/v1/messages", R"({"kind":"chat","text":"hi"})", "application/json")->status == 409);
    CHECK(cli.Post("/v1/messages", R"({"kind":"smoke"})", "application/json")->status == 400);
    CHECK(cli.Post("/v1/disconnect")->status == 409);
    auto unknown = cli.Post("/v1/invitations", R"({"device_id":"00112233445566778899aabbccddeeff"})",
                            "application/json");
    CHECK(unknown->status == 404);
    CHECK(body(unknown)["code"] == "PeerUnknown");
    CHECK(cli.Post("/v1/invitations", R"({"device_id":"zz"})", "application/json")->status == 404);
    CHECK(cli.Post("/v1/invitations", "not json", "application/json")->status == 400);
    CHECK(cli.Post("/v1/invitations/00/response", R"({"accept":true})", "application/json")->status == 404);
    CHECK(body(cli.Get("/v1/group")).is_null());

    auto status = body(cli.Get("/v1/status"));
    CHECK(status["datagrams_sent"] == 0);
    CHECK(status["airplane"] == true);
    CHECK(status["status"] == "available");
    node.stop();
    CHECK_FALSE(node.running());
    CHECK(node.datagrams_sent() == 0);
}

TEST_CASE("invitations through the api expire") {
    auto cfg = airplane_config();
    cfg.invitation_ttl_ms = 150;
    Node node(cfg, 11);
    node.start();
    httplib::Client cli("127.0.0.1", node.api_port());

    Rng rng(4);
    const auto bob = device_id_from_label("bob");
    const auto inv = InvitationId::random(rng);
    node.run_on_loop([&](ProtocolStack& s, TimeMs now) {
        s.on_frame(InviteFrame{inv, bob, 3, "bob#music"}, now);
    });
    auto pending = body(cli.Get("/v1/invitations"));
    REQUIRE(pending.size() == 1);
    CHECK(pending[0]["id"] == inv.hex());

    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    CHECK(body(cli.Get("/v1/invitations")).empty());
    auto late = cli.Post("/v1/invitations/" + inv.hex() + "/response", R"({"accept":true})", "application/json");
    CHECK(late->status == 409);
    bool expired_event = false;
    for (const auto& e : node.events_after(0, 0))
        expired_event |= e.type == "invitation_resolved" && e.details["outcome"] == "expired";
    CHECK(expired_event);
    node.stop();
}

TEST_CASE("concurrent invites serialize on the loop") {
    Node node(airplane_config(), 14);
    node.start();
    const auto cy = device_id_from_label("cy");
    node.run_on_loop([&](ProtocolStack& s, TimeMs now) { s.on_frame(BeaconFrame{cy, "cy#chess", 1}, now); });
    std::atomic<int> created{0}, conflicts{0}, other{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            httplib::Client c("127.0.0.1", node.api_port());
            auto r = c.Post("/v1/invitations", json{{"device_id", cy.hex()}}.dump(), "application/json");
            if (r && r->status == 201) ++created;
            else if (r && r->status == 409) ++conflicts;
            else ++other;
        });
    }
    for (auto& t : threads) t.join();
    CHECK(created.load() == 1);
    CHECK(conflicts.load() == 7);
    CHECK(other.load() == 0);
    node.stop();
}

TEST_CASE("event stream delivers journal entries") {
    Node node(airplane_config(), 12);
    node.start();
    node.run_on_loop([&](ProtocolStack& s, TimeMs now) {
        s.on_frame(BeaconFrame{device_id_from_label("x"), "x#music", 1}, now);
    });
    httplib::Client cli("127.0.0.1", node.api_port());
    std::string received;
    auto r = cli.Get("/v1/events?after=0", [&](const char* data, std::size_t n) {
        received.append(data, n);
        return received.find("\n\n") == std::string::npos;
    });
    CHECK(received.rfind("id: ", 0) == 0);
    CHECK(received.find("peer_found") != std::string::npos);
    CHECK(cli.Get("/v1/events?after=x")->status == 400);
    node.stop();
}

TEST_CASE("bearer token guards the api") {
    auto cfg = airplane_config();
    cfg.api_token = "s3cret";
    Node node(cfg, 13);
    node.start();
    httplib::Client cli("127.0.0.1", node.api_port());
    CHECK(cli.Get("/v1/status")->status == 401);
    cli.set_bearer_token_auth("s3cret");
    CHECK(cli.Get("/v1/status")->status == 200);
    node.stop();
}

TEST_CASE("busy ports are reported") {
    auto cfg = airplane_config();
    Node first(cfg, 1);
    first.start();
    cfg.api_port = first.api_port();
    Node second(cfg, 2);
    CHECK(code_of([&] { second.start(); }) == Errc::PortInUse);
    first.stop();
}
