#include <doctest.h>

#include <set>

#include "offat/discovery.hpp"
#include "offat/error.hpp"
#include "offat/rng.hpp"

using namespace offat;

namespace {

DeviceId id_of(std::uint8_t last) {
    DeviceId id;
    id.bytes[15] = last;
    return id;
}

bool is_social(std::uint8_t ch) { return ch == 1 || ch == 6 || ch == 11; }

}  // namespace

TEST_CASE("start draws a listen channel and a dwell") {
    Rng rng(42);
    DiscoveryStateMachine sm(id_of(1), {}, "me#x");
    sm.start(rng, 0);
    CHECK(sm.phase() == Phase::Listen);
    CHECK(is_social(sm.listen_channel()));
    CHECK(sm.phase_deadline() >= 100);
    CHECK(sm.phase_deadline() <= 300);

    Rng again(42);
    DiscoveryStateMachine twin(id_of(1), {}, "me#x");
    twin.start(again, 0);
    CHECK(twin.listen_channel() == sm.listen_channel());
    CHECK(twin.phase_deadline() == sm.phase_deadline());

    CHECK_THROWS_AS(sm.start(rng, 5), Error);
    try {
        sm.start(rng, 5);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::AlreadyRunning);
    }
}

TEST_CASE("channels and dwells cover their ranges") {
    Rng rng(9);
    std::set<std::uint8_t> channels;
    std::set<TimeMs> dwells;
    for (int i = 0; i < 3000; ++i) {
        DiscoveryStateMachine sm(id_of(1), {}, "me#x");
        sm.start(rng, 1000);
        channels.insert(sm.listen_channel());
        dwells.insert(sm.phase_deadline() - 1000);
    }
    CHECK(channels == std::set<std::uint8_t>{1, 6, 11});
    CHECK(*dwells.begin() == 100);
    CHECK(*dwells.rbegin() == 300);
}

TEST_CASE("advance flips phase and probes round-robin") {
    Rng rng(1);
    DiscoveryStateMachine sm(id_of(1), {}, "me#x");
    sm.start(rng, 0);
    const TimeMs first = sm.phase_deadline();
    CHECK_FALSE(sm.advance(first - 1, rng).has_value());
    CHECK(sm.phase() == Phase::Listen);

    auto p1 = sm.advance(first, rng);
    CHECK(sm.phase() == Phase::Search);
    CHECK(sm.phase_deadline() - first >= 100);
    CHECK(sm.phase_deadline() - first <= 300);
    REQUIRE(p1);
    CHECK(p1->ssid == "me#x");
    auto p2 = sm.advance(first + 20, rng);
    auto p3 = sm.advance(first + 40, rng);
    auto p4 = sm.advance(first + 60, rng);
    REQUIRE((p2 && p3 && p4));
    CHECK(std::set<std::uint8_t>{p1->channel, p2->channel, p3->channel} == std::set<std::uint8_t>{1, 6, 11});
    CHECK(p4->channel == p1->channel);
    CHECK(sm.next_wakeup() == first + 80);
}

TEST_CASE("listen deadline crossing draws the next dwell from now") {
    Rng rng(5);
    DiscoveryConfig cfg;
    DiscoveryStateMachine sm(id_of(1), cfg, "me#x");
    sm.start(rng, 0);
    const TimeMs late = sm.phase_deadline() + 50;
    sm.advance(late, rng);
    CHECK(sm.phase() == Phase::Search);
    CHECK(sm.phase_deadline() >= late + 100);
    CHECK(sm.phase_deadline() <= late + 300);
}

TEST_CASE("phases alternate with bounded dwells") {
    Rng rng(77);
    DiscoveryStateMachine sm(id_of(1), {}, "me#x");
    sm.start(rng, 0);
    Phase phase = sm.phase();
    TimeMs entered = 0;
    TimeMs deadline = sm.phase_deadline();
    int flips = 0;
    for (TimeMs t = 0; t < 60'000; t += 7) {
        sm.advance(t, rng);
        if (sm.phase() != phase) {
            CHECK(t >= deadline);
            CHECK(sm.phase() == (phase == Phase::Listen ? Phase::Search : Phase::Listen));
            const TimeMs dwell = sm.phase_deadline() - t;
            CHECK(dwell >= 100);
            CHECK(dwell <= 300);
            phase = sm.phase();
            entered = t;
            deadline = sm.phase_deadline();
            ++flips;
        }
    }
    CHECK(entered > 0);
    CHECK(flips > 200);
}

TEST_CASE("degenerate dwell bounds") {
    Rng rng(2);
    DiscoveryConfig cfg{50, 50, 20};
    DiscoveryStateMachine sm(id_of(1), cfg, "me#x");
    sm.start(rng, 0);
    CHECK(sm.phase_deadline() == 50);
    for (TimeMs t = 50; t <= 500; t += 50) {
        sm.advance(t, rng);
        CHECK(sm.phase_deadline() == t + 50);
    }
}

TEST_CASE("advance preconditions") {
    Rng rng(3);
    DiscoveryStateMachine sm(id_of(1), {}, "me#x");
    try {
        sm.advance(0, rng);
        FAIL("expected NotRunning");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotRunning);
    }
    sm.start(rng, 100);
    sm.advance(150, rng);
    CHECK_THROWS_AS(sm.advance(149, rng), Error);
    sm.stop();
    CHECK(sm.phase() == Phase::Off);
    CHECK_THROWS_AS(sm.start(rng, 0, std::uint8_t{3}), Error);
}

TEST_CASE("probe gating") {
    Rng rng(4);
    DiscoveryStateMachine sm(id_of(1), {}, "me#x");
    sm.start(rng, 0, std::uint8_t{6});
    auto beacon = sm.on_probe(6);
    REQUIRE(beacon);
    CHECK(beacon->ssid == "me#x");
    CHECK(beacon->listen_channel == 6);
    CHECK_FALSE(sm.on_probe(1));
    sm.advance(sm.phase_deadline(), rng);
    CHECK(sm.phase() == Phase::Search);
    CHECK_FALSE(sm.on_probe(6));
}

TEST_CASE("same seed gives the same trajectory") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        DiscoveryStateMachine sm(id_of(1), {}, "me#x");
        sm.start(rng, 0);
        std::vector<std::pair<TimeMs, int>> out;
        for (TimeMs t = 0; t < 5000; t += 10)
            if (auto p = sm.advance(t, rng)) out.emplace_back(t, p->channel);
        out.emplace_back(sm.phase_deadline(), sm.listen_channel());
        return out;
    };
    CHECK(run(8) == run(8));
    CHECK(run(8) != run(9));
}

TEST_CASE("peer table upsert and similarity") {
    PeerTable table;
    const Profile local{"me", {"music", "chess"}};
    auto r = table.upsert("Alice#chess,food", id_of(2), PeerStatus::Available, 10, local);
    CHECK(r.inserted);
    REQUIRE(r.record.similarity);
    CHECK(r.record.similarity->value() == 33);
    REQUIRE(r.record.profile);
    CHECK(r.record.profile->name == "Alice");

    auto same = table.upsert("other#music,chess", id_of(3), PeerStatus::Available, 10, local);
    CHECK(same.record.similarity->value() == 100);

    auto opaque = table.upsert("a4:50:46:aa:bb:cc", id_of(4), PeerStatus::Available, 10, local);
    CHECK_FALSE(opaque.record.profile.has_value());
    CHECK_FALSE(opaque.record.similarity.has_value());

    auto again = table.upsert("Alice#chess,food", id_of(2), PeerStatus::Available, 20, local);
    CHECK_FALSE(again.inserted);
    CHECK_FALSE(again.changed);
    CHECK(again.record.last_seen == 20);
    auto moved = table.upsert("Alice#chess,music", id_of(2), PeerStatus::Available, 30, local);
    CHECK(moved.changed);
    CHECK(moved.record.similarity->value() == 100);
}

TEST_CASE("stale eviction boundary") {
    PeerTable table(10'000);
    const Profile local{"me", {"x"}};
    CHECK(table.evict_stale(0).empty());
    table.upsert("a#x", id_of(2), PeerStatus::Available, 0, local);
    CHECK(table.evict_stale(10'000).empty());
    CHECK(table.size() == 1);
    CHECK(table.next_expiry() == 10'001);
    auto gone = table.evict_stale(10'001);
    REQUIRE(gone.size() == 1);
    CHECK(gone[0] == id_of(2));
    CHECK(table.empty());
}

TEST_CASE("snapshot ordering") {
    PeerTable table;
    const Profile local{"me", {"a", "b", "c", "d"}};
    CHECK(table.snapshot().empty());
    table.upsert("A#a", id_of(5), PeerStatus::Available, 0, local);          // 25
    table.upsert("B#a,b,c,d", id_of(6), PeerStatus::Available, 0, local);    // 100
    table.upsert("legacy-mac", id_of(1), PeerStatus::Available, 0, local);   // opaque
    table.upsert("D#a,b,x,y", id_of(9), PeerStatus::Available, 0, local);    // 33
    table.upsert("E#c,d,x,y", id_of(8), PeerStatus::Available, 0, local);    // 33
    auto snap = table.snapshot();
    REQUIRE(snap.size() == 5);
    CHECK(snap[0].device_id == id_of(6));
    CHECK(snap[1].device_id == id_of(8));
    CHECK(snap[2].device_id == id_of(9));
    CHECK(snap[3].device_id == id_of(5));
    CHECK(snap[4].device_id == id_of(1));
}

TEST_CASE("rescore follows the local profile") {
    PeerTable table;
    table.upsert("A#go", id_of(2), PeerStatus::Available, 0, {"me", {"chess"}});
    CHECK(table.find(id_of(2))->similarity->value() == 0);
    table.rescore({"me", {"go"}});
    CHECK(table.find(id_of(2))->similarity->value() == 100);
    CHECK(table.set_status(id_of(2), PeerStatus::Connected));
    CHECK(table.find(id_of(2))->status == PeerStatus::Connected);
    CHECK_FALSE(table.set_status(id_of(3), PeerStatus::Connected));
}
