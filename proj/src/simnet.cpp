#include "offat/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "offat/error.hpp"
#include "offat/json_io.hpp"

namespace offat::sim {

using nlohmann::json;

void RadioModel::validate() const {
    if (!(range_m > 0.0)) throw Error(Errc::SchemaError, "range_m must be > 0");
    if (!(loss_probability >= 0.0 && loss_probability < 1.0)) {
        throw Error(Errc::SchemaError, "loss must be in [0, 1)");
    }
}

bool in_range(Position a, Position b, const RadioModel& model) {
    return std::hypot(a.x - b.x, a.y - b.y) <= model.range_m;
}

// ---------------------------------------------------------------------------
// scenario parsing

namespace {

[[noreturn]] void schema(const std::string& what) { throw Error(Errc::SchemaError, what); }

template <typename T>
T field(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        schema(std::string("field '") + key + "' has the wrong type");
    }
}

std::vector<std::string> parse_interests(const json& value) {
    if (value.is_string()) return normalize_interests(value.get<std::string>());
    if (!value.is_array()) schema("interests must be a string or an array of strings");
    std::string joined;
    for (const auto& kw : value) {
        if (!kw.is_string()) schema("interests must be strings");
        joined += kw.get<std::string>();
        joined += ',';
    }
    return normalize_interests(joined);
}

Position parse_position(const json& dev) {
    if (dev.contains("pos")) {
        const auto& p = dev.at("pos");
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            schema("pos must be [x, y]");
        }
        return {p[0].get<double>(), p[1].get<double>()};
    }
    if (!dev.contains("pos_x") || !dev.contains("pos_y")) schema("device needs pos or pos_x/pos_y");
    return {field<double>(dev, "pos_x", 0.0), field<double>(dev, "pos_y", 0.0)};
}

}  // namespace

Scenario Scenario::from_json(const json& doc) {
    if (!doc.is_object()) schema("scenario must be an object");
    Scenario sc;
    sc.radio.range_m = field<double>(doc, "range_m", 200.0);
    sc.radio.loss_probability = field<double>(doc, "loss", 0.0);
    sc.radio.validate();
    sc.duration_ms = field<TimeMs>(doc, "duration_ms", 60'000);
    if (sc.duration_ms <= 0) schema("duration_ms must be > 0");
    sc.probe_interval_ms = field<std::uint32_t>(doc, "probe_interval_ms", 20);
    if (sc.probe_interval_ms == 0) schema("probe_interval_ms must be > 0");
    sc.stale_after_ms = field<TimeMs>(doc, "stale_after_ms", 10'000);
    sc.invitation_ttl_ms = field<TimeMs>(doc, "invitation_ttl_ms", kDefaultInvitationTtlMs);
    if (doc.contains("faults")) {
        const auto& f = doc.at("faults");
        sc.faults.group_duplicate = field<double>(f, "group_duplicate", 0.0);
        sc.faults.group_jitter_ms = field<std::uint32_t>(f, "group_jitter_ms", 0);
        if (!(sc.faults.group_duplicate >= 0.0 && sc.faults.group_duplicate < 1.0)) {
            schema("faults.group_duplicate must be in [0, 1)");
        }
    }

    if (!doc.contains("devices") || !doc.at("devices").is_array()) schema("devices must be an array");
    for (const auto& dev : doc.at("devices")) {
        if (!dev.is_object()) schema("device entries must be objects");
        ScenarioDevice d;
        d.id = field<std::string>(dev, "id", "");
        if (d.id.empty()) schema("device id is required");
        d.name = field<std::string>(dev, "name", d.id);
        d.interests = dev.contains("interests") ? parse_interests(dev.at("interests")) : std::vector<std::string>{};
        d.pos = parse_position(dev);
        d.go_intent = field<int>(dev, "go_intent", 7);
        if (d.go_intent < 0 || d.go_intent > 15) schema("go_intent must be in 0..15");
        if (dev.contains("listen_channel")) d.listen_channel = field<std::uint8_t>(dev, "listen_channel", 0);
        if (dev.contains("dwell_min_ms")) d.dwell_min_ms = field<std::uint32_t>(dev, "dwell_min_ms", 100);
        if (dev.contains("dwell_max_ms")) d.dwell_max_ms = field<std::uint32_t>(dev, "dwell_max_ms", 300);
        try {
            validate_profile(Profile{d.name, d.interests});
        } catch (const Error& e) {
            schema("device '" + d.id + "': " + e.what());
        }
        for (const auto& other : sc.devices) {
            if (other.id == d.id) schema("duplicate device id '" + d.id + "'");
        }
        sc.devices.push_back(std::move(d));
    }

    if (doc.contains("script")) {
        if (!doc.at("script").is_array()) schema("script must be an array");
        for (const auto& entry : doc.at("script")) {
            if (!entry.is_object()) schema("script entries must be objects");
            ScriptAction a;
            a.at_ms = field<TimeMs>(entry, "at_ms", -1);
            if (a.at_ms < 0) schema("script entry needs at_ms >= 0");
            a.device = field<std::string>(entry, "device", "");
            a.action = field<std::string>(entry, "action", "");
            a.args = entry;
            static const std::vector<std::string> known{"set_profile", "start_discovery", "stop_discovery",
                                                        "restart_discovery", "invite", "respond", "send_chat",
                                                        "send_ink", "send_file", "disconnect"};
            if (std::find(known.begin(), known.end(), a.action) == known.end()) {
                schema("unknown action '" + a.action + "'");
            }
            auto known_device = [&](const std::string& id) {
                return std::any_of(sc.devices.begin(), sc.devices.end(), [&](const auto& d) { return d.id == id; });
            };
            if (!known_device(a.device)) throw Error(Errc::UnknownDevice, a.device);
            for (const char* ref : {"target", "from"}) {
                if (entry.contains(ref) && !known_device(field<std::string>(entry, ref, ""))) {
                    throw Error(Errc::UnknownDevice, field<std::string>(entry, ref, ""));
                }
            }
            sc.script.push_back(std::move(a));
        }
        std::stable_sort(sc.script.begin(), sc.script.end(),
                         [](const ScriptAction& x, const ScriptAction& y) { return x.at_ms < y.at_ms; });
    }
    return sc;
}

Scenario Scenario::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) schema("cannot open " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        schema(e.what());
    }
}

json SimMetrics::to_json() const {
    auto frames = [](const FrameCounters& c) {
        return json{{"radio_tx", c.radio_tx},         {"transmitted", c.transmitted},
                    {"delivered", c.delivered},       {"dropped_range", c.dropped_range},
                    {"dropped_gate", c.dropped_gate}, {"dropped_loss", c.dropped_loss},
                    {"duplicated", c.duplicated}};
    };
    json pairs = json::array();
    for (const auto& p : discovery) {
        pairs.push_back({{"a", p.a}, {"b", p.b}, {"latency_ms", p.latency_ms ? json(*p.latency_ms) : json(nullptr)}});
    }
    return {{"discovery", pairs},
            {"invitations", {{"sent", invitations_sent},
                             {"accepted", invitations_accepted},
                             {"declined", invitations_declined},
                             {"expired", invitations_expired}}},
            {"messages", {{"sent", messages_sent},
                          {"deliveries_expected", deliveries_expected},
                          {"delivered", messages_delivered},
                          {"dropped", messages_dropped}}},
            {"frames", {{"discovery", frames(discovery_frames)},
                        {"invitation", frames(invitation_frames)},
                        {"group", frames(group_frames)},
                        {"transmitted", frames_transmitted()}}}};
}

// ---------------------------------------------------------------------------
// simulation

namespace {

struct Wake {
    std::size_t device;
};
struct Arrival {
    std::size_t from;
    std::size_t to;
    WireFrame frame;
    bool duplicate = false;
};
struct Scripted {
    std::size_t index;
};

struct QueuedEvent {
    TimeMs t;
    std::uint64_t order;
    std::variant<Wake, Arrival, Scripted> what;
};

struct Later {
    bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
        return a.t != b.t ? a.t > b.t : a.order > b.order;
    }
};

enum class FrameClass { Discovery, Invitation, Group };

FrameClass class_of(const WireFrame& frame) {
    switch (frame_type(frame)) {
        case FrameType::Beacon:
        case FrameType::Probe: return FrameClass::Discovery;
        case FrameType::Invite:
        case FrameType::InviteResponse: return FrameClass::Invitation;
        case FrameType::GroupSealed: return FrameClass::Group;
    }
    return FrameClass::Group;
}

struct SimDevice {
    ScenarioDevice def;
    ProtocolStack stack;
    TimeMs scheduled_wake = kNever;
    std::optional<TimeMs> discovery_started;
};

}  // namespace

struct Simulation::Impl {
    Scenario scenario;
    bool tracing;
    Rng radio_rng;
    std::vector<SimDevice> devices;
    std::map<DeviceId, std::size_t> index_of;
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, Later> queue;
    std::uint64_t order = 0;
    TimeMs now = 0;
    std::map<std::pair<std::size_t, std::size_t>, TimeMs> link_tail;  // FIFO per directed link
    std::map<std::pair<std::size_t, std::size_t>, TimeMs> discovered_at;
    SimMetrics metrics;
    std::vector<std::string> trace;

    Impl(Scenario sc, std::uint64_t seed, bool trace_on)
        : scenario(std::move(sc)), tracing(trace_on), radio_rng(mix_seed(seed ^ 0x7261646f6d6f646cULL)) {
        for (std::size_t i = 0; i < scenario.devices.size(); ++i) {
            const auto& d = scenario.devices[i];
            StackConfig cfg;
            cfg.device_id = device_id_from_label(d.id);
            cfg.profile = Profile{d.name, d.interests};
            cfg.go_intent = GoIntent(d.go_intent);
            cfg.discovery.probe_interval_ms = scenario.probe_interval_ms;
            if (d.dwell_min_ms) cfg.discovery.dwell_min_ms = *d.dwell_min_ms;
            if (d.dwell_max_ms) cfg.discovery.dwell_max_ms = *d.dwell_max_ms;
            cfg.stale_after_ms = scenario.stale_after_ms;
            cfg.invitation_ttl_ms = scenario.invitation_ttl_ms;
            cfg.listen_channel = d.listen_channel;
            cfg.record_deliveries = true;
            if (index_of.contains(cfg.device_id)) schema("device ids collide after hashing");
            index_of[cfg.device_id] = i;
            devices.push_back(SimDevice{d, ProtocolStack(cfg, Rng(mix_seed(seed ^ mix_seed(i + 1)))), kNever, {}});
        }
        for (std::size_t i = 0; i < scenario.script.size(); ++i) {
            push(scenario.script[i].at_ms, Scripted{i});
        }
    }

    void push(TimeMs t, std::variant<Wake, Arrival, Scripted> what) {
        queue.push(QueuedEvent{t, order++, std::move(what)});
    }

    std::size_t device_index(std::string_view id) const {
        for (std::size_t i = 0; i < devices.size(); ++i) {
            if (devices[i].def.id == id) return i;
        }
        throw Error(Errc::UnknownDevice, std::string(id));
    }

    void log(std::size_t device, const std::string& event, json details) {
        if (!tracing) return;
        json line{{"t_ms", now}, {"device", devices[device].def.id}, {"event", event}, {"details", std::move(details)}};
        trace.push_back(line.dump());
    }

    FrameCounters& counters(FrameClass c) {
        switch (c) {
            case FrameClass::Discovery: return metrics.discovery_frames;
            case FrameClass::Invitation: return metrics.invitation_frames;
            case FrameClass::Group: return metrics.group_frames;
        }
        return metrics.group_frames;
    }

    bool reachable(std::size_t a, std::size_t b) const {
        return in_range(devices[a].def.pos, devices[b].def.pos, scenario.radio);
    }

    bool lost() {
        return scenario.radio.loss_probability > 0.0 && radio_rng.uniform01() < scenario.radio.loss_probability;
    }

    void transmit(std::size_t from, Outbound ob) {
        const FrameClass cls = class_of(ob.frame);
        FrameCounters& c = counters(cls);
        ++c.radio_tx;
        if (ob.route == Outbound::Route::Broadcast) {
            const auto& probe = std::get<ProbeFrame>(ob.frame);
            log(from, "tx", {{"frame", "probe"}, {"channel", probe.channel}});
            for (std::size_t to = 0; to < devices.size(); ++to) {
                if (to == from) continue;
                ++c.transmitted;
                if (!reachable(from, to)) {
                    ++c.dropped_range;
                } else if (lost()) {
                    ++c.dropped_loss;
                } else {
                    push(now + kLinkDelayMs, Arrival{from, to, ob.frame});
                }
            }
            return;
        }
        ++c.transmitted;
        auto it = index_of.find(ob.to);
        log(from, "tx", {{"frame", frame_type_name(frame_type(ob.frame))},
                         {"to", it == index_of.end() ? ob.to.hex() : devices[it->second].def.id}});
        if (it == index_of.end() || !reachable(from, it->second)) {
            ++c.dropped_range;
            return;
        }
        const std::size_t to = it->second;
        if (cls == FrameClass::Discovery) {
            if (lost()) {
                ++c.dropped_loss;
            } else {
                push(now + kLinkDelayMs, Arrival{from, to, std::move(ob.frame)});
            }
            return;
        }
        // Reliable, in-order per directed link.
        TimeMs at = now + kLinkDelayMs;
        if (cls == FrameClass::Group && scenario.faults.group_jitter_ms > 0) {
            at += static_cast<TimeMs>(radio_rng.uniform(0, scenario.faults.group_jitter_ms));
        }
        TimeMs& tail = link_tail[{from, to}];
        at = std::max(at, tail);
        tail = at;
        if (cls == FrameClass::Group && scenario.faults.group_duplicate > 0.0 &&
            radio_rng.uniform01() < scenario.faults.group_duplicate) {
            ++c.duplicated;
            const TimeMs extra = 1 + static_cast<TimeMs>(radio_rng.uniform(0, std::max<std::uint32_t>(
                                                                                     scenario.faults.group_jitter_ms, 5)));
            push(at + extra, Arrival{from, to, ob.frame, true});
        }
        push(at, Arrival{from, to, std::move(ob.frame)});
    }

    void deliver(Arrival& a) {
        const FrameClass cls = class_of(a.frame);
        FrameCounters& c = counters(cls);
        SimDevice& dst = devices[a.to];
        if (frame_type(a.frame) == FrameType::Probe) {
            const auto& probe = std::get<ProbeFrame>(a.frame);
            const auto& disc = dst.stack.discovery();
            if (disc.phase() != Phase::Listen || disc.listen_channel() != probe.channel) {
                ++c.dropped_gate;
                return;
            }
        }
        ++c.delivered;
        if (tracing && cls != FrameClass::Discovery) {
            log(a.to, "rx", {{"frame", frame_type_name(frame_type(a.frame))},
                             {"from", devices[a.from].def.id},
                             {"duplicate", a.duplicate}});
        }
        dst.stack.on_frame(a.frame, now);
    }

    void settle(std::size_t i) {
        SimDevice& d = devices[i];
        for (auto& ob : d.stack.take_outbound()) transmit(i, std::move(ob));
        for (auto& ev : d.stack.take_events()) log(i, ev.type, std::move(ev.details));
        const TimeMs wake = d.stack.next_wakeup(now);
        if (wake != kNever && wake < d.scheduled_wake) {
            d.scheduled_wake = wake;
            push(wake, Wake{i});
        }
        update_discovery(i);
    }

    void update_discovery(std::size_t i) {
        for (std::size_t j = 0; j < devices.size(); ++j) {
            if (j == i) continue;
            auto key = std::minmax(i, j);
            if (discovered_at.contains(key)) continue;
            const auto& a = devices[key.first];
            const auto& b = devices[key.second];
            if (!a.discovery_started || !b.discovery_started) continue;
            if (a.stack.peers().find(b.stack.device_id()) && b.stack.peers().find(a.stack.device_id())) {
                discovered_at[key] = now - std::max(*a.discovery_started, *b.discovery_started);
                log(i, "mutual_discovery", {{"peer", devices[j].def.id}, {"latency_ms", discovered_at[key]}});
            }
        }
    }

    void perform(const ScriptAction& action) {
        const std::size_t i = device_index(action.device);
        SimDevice& d = devices[i];
        const json& args = action.args;
        log(i, "script", {{"action", action.action}});
        try {
            if (action.action == "set_profile") {
                Profile p{args.value("name", d.stack.profile().name),
                          args.contains("interests") ? parse_interests(args.at("interests")) : d.stack.profile().interests};
                d.stack.set_profile(std::move(p), now);
            } else if (action.action == "start_discovery") {
                d.stack.start_discovery(now);
                d.discovery_started = now;
            } else if (action.action == "stop_discovery") {
                d.stack.stop_discovery();
            } else if (action.action == "restart_discovery") {
                d.stack.restart_discovery(now);
                d.discovery_started = now;
            } else if (action.action == "invite") {
                const auto target = devices[device_index(args.at("target").get<std::string>())].stack.device_id();
                d.stack.invite(target, now);
            } else if (action.action == "respond") {
                std::optional<DeviceId> from;
                if (args.contains("from")) from = devices[device_index(args.at("from").get<std::string>())].stack.device_id();
                std::optional<InvitationId> chosen;
                for (const auto& inv : d.stack.invitations().pending()) {
                    if (inv.direction == InvitationDirection::Inbound && (!from || inv.from == *from)) {
                        chosen = inv.id;
                        break;
                    }
                }
                if (!chosen) throw Error(Errc::UnknownInvitation, "no pending inbound invitation");
                d.stack.respond(*chosen, args.value("accept", true), now);
            } else if (action.action == "send_chat") {
                d.stack.send(args.at("text").get<std::string>(), now);
            } else if (action.action == "send_ink") {
                d.stack.send(ink_from_json(args.contains("strokes") ? args.at("strokes") : args.at("ink")), now);
            } else if (action.action == "send_file") {
                FileChunk f;
                f.name = args.at("name").get<std::string>();
                f.index = args.value("index", 0u);
                f.total = args.value("total", 1u);
                auto text = args.value("text", std::string{});
                f.data.assign(text.begin(), text.end());
                d.stack.send(std::move(f), now);
            } else if (action.action == "disconnect") {
                d.stack.disconnect(now);
            }
        } catch (const Error& e) {
            log(i, "script_error", {{"action", action.action}, {"code", errc_name(e.code())}, {"message", e.what()}});
        } catch (const json::exception& e) {
            log(i, "script_error", {{"action", action.action}, {"code", "SchemaError"}, {"message", e.what()}});
        }
        settle(i);
    }

    void step() {
        QueuedEvent ev = queue.top();
        queue.pop();
        now = ev.t;
        std::visit(
            [&](auto& what) {
                using T = std::decay_t<decltype(what)>;
                if constexpr (std::is_same_v<T, Wake>) {
                    SimDevice& d = devices[what.device];
                    if (d.scheduled_wake != ev.t) return;
                    d.scheduled_wake = kNever;
                    d.stack.tick(now);
                    settle(what.device);
                } else if constexpr (std::is_same_v<T, Arrival>) {
                    deliver(what);
                    settle(what.to);
                } else {
                    perform(scenario.script[what.index]);
                }
            },
            ev.what);
    }

    bool all_discovered() const {
        for (std::size_t i = 0; i < devices.size(); ++i) {
            for (std::size_t j = i + 1; j < devices.size(); ++j) {
                if (reachable(i, j) && !discovered_at.contains({i, j})) return false;
            }
        }
        return true;
    }
};

Simulation::Simulation(Scenario scenario, std::uint64_t seed, bool trace)
    : impl_(std::make_unique<Impl>(std::move(scenario), seed, trace)) {}
Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

void Simulation::run_until(TimeMs t) {
    while (!impl_->queue.empty() && impl_->queue.top().t <= t) impl_->step();
    impl_->now = std::max(impl_->now, t);
}

void Simulation::run() { run_until(impl_->scenario.duration_ms); }

void Simulation::run_until_discovered() {
    while (!impl_->queue.empty() && impl_->queue.top().t <= impl_->scenario.duration_ms) {
        impl_->step();
        if (impl_->all_discovered()) return;
    }
}

TimeMs Simulation::now() const noexcept { return impl_->now; }
bool Simulation::all_pairs_discovered() const { return impl_->all_discovered(); }

ProtocolStack& Simulation::stack(std::string_view device) { return impl_->devices[impl_->device_index(device)].stack; }
const ProtocolStack& Simulation::stack(std::string_view device) const {
    return impl_->devices[impl_->device_index(device)].stack;
}
std::size_t Simulation::device_count() const noexcept { return impl_->devices.size(); }

void Simulation::perform(const ScriptAction& action) { impl_->perform(action); }

SimMetrics Simulation::metrics() const {
    SimMetrics m = impl_->metrics;
    const auto& devs = impl_->devices;
    for (std::size_t i = 0; i < devs.size(); ++i) {
        for (std::size_t j = i + 1; j < devs.size(); ++j) {
            PairLatency p{devs[i].def.id, devs[j].def.id, std::nullopt};
            if (auto it = impl_->discovered_at.find({i, j}); it != impl_->discovered_at.end()) p.latency_ms = it->second;
            m.discovery.push_back(std::move(p));
        }
    }
    for (const auto& d : devs) {
        const auto& c = d.stack.counters();
        m.invitations_sent += c.invitations_sent;
        m.invitations_accepted += c.invitations_accepted;
        m.invitations_declined += c.invitations_declined;
        m.invitations_expired += c.invitations_expired;
        m.messages_sent += c.messages_sent;
        m.deliveries_expected += c.deliveries_expected;
        m.messages_delivered += c.messages_delivered;
        m.messages_dropped += c.duplicates + c.auth_failures + c.unknown_sender + c.malformed;
    }
    return m;
}

const std::vector<std::string>& Simulation::trace() const noexcept { return impl_->trace; }

SimResult run_scenario(const Scenario& scenario, std::uint64_t seed, bool trace) {
    Simulation sim(scenario, seed, trace);
    sim.run();
    return SimResult{sim.metrics(), sim.trace()};
}

}  // namespace offat::sim
