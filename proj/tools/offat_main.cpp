#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>

#include "offat/error.hpp"
#include "offat/node.hpp"
#include "offat/rng.hpp"
#include "offat/simnet.hpp"

namespace {

using nlohmann::json;

struct ClientOptions {
    std::string host = "127.0.0.1";
    int port = 7777;
    std::string token;
};

int call(const ClientOptions& opt, const std::string& method, const std::string& path,
         const std::optional<json>& body = std::nullopt) {
    httplib::Client cli(opt.host, opt.port);
    cli.set_read_timeout(10, 0);
    httplib::Headers headers;
    if (!opt.token.empty()) headers.emplace("Authorization", "Bearer " + opt.token);
    const std::string payload = body ? body->dump() : std::string();
    httplib::Result res;
    if (method == "GET") res = cli.Get(path, headers);
    else if (method == "PUT") res = cli.Put(path, headers, payload, "application/json");
    else res = cli.Post(path, headers, payload, "application/json");
    if (!res) {
        std::cerr << "offat: cannot reach node at " << opt.host << ":" << opt.port << " ("
                  << httplib::to_string(res.error()) << ")\n";
        return 3;
    }
    try {
        std::cout << json::parse(res->body).dump(2) << "\n";
    } catch (const json::exception&) {
        std::cout << res->body << "\n";
    }
    return res->status >= 400 ? 1 : 0;
}

int run_daemon(const std::string& config_path, std::optional<int> api_port, bool airplane,
               std::optional<std::uint64_t> seed) {
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    offat::Rng rng = seed ? offat::Rng(offat::mix_seed(*seed)) : offat::Rng::system();
    offat::NodeConfig config;
    try {
        bool persist = true;
        if (std::ifstream in{config_path}) {
            const json doc = json::parse(in, nullptr, false);
            persist = doc.is_object() && !doc.contains("device_id");
        }
        config = offat::load_config(config_path, rng);
        if (persist) offat::save_config(config, config_path);
        if (api_port) config.api_port = static_cast<std::uint16_t>(*api_port);
        if (airplane) config.airplane = true;
        config.validate();
    } catch (const std::exception& e) {
        std::cerr << "offat: " << config_path << ": " << e.what() << "\n";
        return 2;
    }

    offat::Node node(config, seed);
    node.set_config_path(config_path);
    try {
        node.start();
    } catch (const std::exception& e) {
        std::cerr << "offat: " << e.what() << "\n";
        return 2;
    }
    std::cout << "offat " << config.device_id.hex() << " api=" << config.api_bind << ":" << node.api_port()
              << (config.airplane ? " airplane" : "") << std::endl;

    int sig = 0;
    sigwait(&stop_signals, &sig);
    node.stop();
    return 0;
}

int run_sim(const std::string& path, std::uint64_t seed, std::size_t runs, const std::string& trace_path) {
    try {
        const auto scenario = offat::sim::Scenario::load(path);
        if (runs > 1) {
            auto stats = offat::sim::measure_discovery_latency(runs, scenario, seed);
            std::cout << stats.to_json().dump(2) << "\n";
            return 0;
        }
        auto result = offat::sim::run_scenario(scenario, seed, !trace_path.empty());
        if (!trace_path.empty()) {
            std::ofstream out(trace_path);
            for (const auto& line : result.trace) out << line << "\n";
        }
        std::cout << result.metrics.to_json().dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "offat: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interest-aware ad hoc social networking node"};
    app.require_subcommand(0, 1);

    std::string config_path = "offat.json";
    std::optional<int> api_port;
    bool airplane = false;
    std::optional<std::uint64_t> seed;
    ClientOptions client;
    app.add_option("--config", config_path, "Node configuration file (created when absent)");
    app.add_option("--api-port", api_port, "Control API port")->check(CLI::Range(0, 65535));
    app.add_flag("--airplane", airplane, "Keep the node up with its transport disabled");
    app.add_option("--seed", seed, "Deterministic randomness (tests only)");
    app.add_option("--host", client.host, "Node address for client commands");
    app.add_option("--token", client.token, "Bearer token for the control API");

    auto* peers = app.add_subcommand("peers", "List nearby users by similarity");
    auto* invitations = app.add_subcommand("invitations", "List pending invitations");
    auto* group = app.add_subcommand("group", "Show the current group");
    auto* status = app.add_subcommand("status", "Show node status");
    auto* disconnect = app.add_subcommand("disconnect", "Leave or dissolve the group");

    std::string invite_id;
    auto* invite = app.add_subcommand("invite", "Invite a peer");
    invite->add_option("ID", invite_id, "Peer device id")->required();

    std::string respond_id;
    bool accept = false;
    auto* respond = app.add_subcommand("respond", "Answer an invitation");
    respond->add_option("ID", respond_id, "Invitation id")->required();
    respond->add_flag("--accept,!--decline", accept, "Accept (default: decline)");

    std::string text;
    auto* chat = app.add_subcommand("chat", "Send a chat message to the group");
    chat->add_option("TEXT", text, "Message text")->required();

    std::string strokes;
    auto* ink = app.add_subcommand("ink", "Send a hand-drawn note");
    ink->add_option("STROKES", strokes, "JSON stroke array, e.g. [[[0,0],[1,1]]]")->required();

    std::string name;
    std::string interests;
    auto* profile = app.add_subcommand("profile", "Show or change the local profile");
    profile->add_option("--name", name);
    profile->add_option("--interests", interests, "Free-text interests");

    std::string scenario;
    std::uint64_t sim_seed = 0;
    std::size_t runs = 1;
    std::string trace_path;
    auto* sim = app.add_subcommand("sim", "Run a simulated scenario");
    sim->add_option("SCENARIO", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--seed", sim_seed);
    sim->add_option("--runs", runs)->check(CLI::PositiveNumber);
    sim->add_option("--trace", trace_path, "Write the event trace (JSON lines)");

    CLI11_PARSE(app, argc, argv);
    client.port = api_port.value_or(7777);

    if (*peers) return call(client, "GET", "/v1/peers");
    if (*invitations) return call(client, "GET", "/v1/invitations");
    if (*group) return call(client, "GET", "/v1/group");
    if (*status) return call(client, "GET", "/v1/status");
    if (*disconnect) return call(client, "POST", "/v1/disconnect");
    if (*invite) return call(client, "POST", "/v1/invitations", json{{"device_id", invite_id}});
    if (*respond) return call(client, "POST", "/v1/invitations/" + respond_id + "/response", json{{"accept", accept}});
    if (*chat) return call(client, "POST", "/v1/messages", json{{"kind", "chat"}, {"text", text}});
    if (*ink) {
        json parsed;
        try {
            parsed = json::parse(strokes);
        } catch (const json::exception&) {
            std::cerr << "offat: STROKES is not JSON\n";
            return 2;
        }
        return call(client, "POST", "/v1/messages", json{{"kind", "ink"}, {"strokes", parsed}});
    }
    if (*profile) {
        if (name.empty() && interests.empty()) return call(client, "GET", "/v1/profile");
        return call(client, "PUT", "/v1/profile", json{{"name", name}, {"interests", interests}});
    }
    if (*sim) return run_sim(scenario, sim_seed, runs, trace_path);
    return run_daemon(config_path, api_port, airplane, seed);
}
