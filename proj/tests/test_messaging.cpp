#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "offat/error.hpp"
#include "offat/grouping.hpp"
#include "offat/messaging.hpp"
#include "offat/rng.hpp"
#include "oracles.hpp"

using namespace offat;

namespace {

DeviceId id_of(std::uint8_t last) {
    DeviceId id;
    id.bytes[15] = last;
    return id;
}

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::InvalidArgument;
}

InkNote random_note(std::mt19937_64& g) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    InkNote note;
    for (int s = 1 + static_cast<int>(g() % 4); s-- > 0;) {
        Stroke stroke;
        for (int p = 2 + static_cast<int>(g() % 30); p-- > 0;) stroke.push_back({unit(g), unit(g)});
        note.strokes.push_back(std::move(stroke));
    }
    return note;
}

}  // namespace

TEST_CASE("compose stamps sequence numbers") {
    SequenceState seq;
    const auto me = id_of(1);
    CHECK(compose(me, std::string("hi"), seq, true).seq == 1);
    CHECK(compose(me, std::string("again"), seq, true).seq == 2);
    CHECK(compose(me, std::string("third"), seq, true).seq == 3);
    CHECK(code_of([&] { compose(me, std::string("x"), seq, false); }) == Errc::NotConnected);
    CHECK(code_of([&] { compose(me, std::string(), seq, true); }) == Errc::EmptyBody);
    CHECK(compose(me, std::string(65'536, 'a'), seq, true).seq == 4);
    CHECK(code_of([&] { compose(me, std::string(65'537, 'a'), seq, true); }) == Errc::OversizePayload);
    CHECK(code_of([&] { compose(me, std::string("\xff\xfe"), seq, true); }) == Errc::Malformed);
    CHECK(code_of([&] { compose(me, InkNote{}, seq, true); }) == Errc::MalformedInk);
    CHECK(seq.last() == 4);
    FileChunk chunk{"a.txt", 0, 1, std::vector<std::uint8_t>(65'537, 1)};
    CHECK(code_of([&] { compose(me, chunk, seq, true); }) == Errc::OversizePayload);
    chunk.data.resize(10);
    CHECK(compose(me, chunk, seq, true).kind == MessageKind::File);
}

TEST_CASE("ink codec") {
    InkNote corners{{{{0, 0}, {1, 1}}}};
    CHECK(decode_ink(encode_ink(corners)) == corners);

    InkNote half{{{{0.5, 0.0}, {1.0, 0.5}}}};
    const auto bytes = encode_ink(half);
    // u16 strokes, u16 points, then (x,y) pairs
    REQUIRE(bytes.size() == 2 + 2 + 8);
    CHECK((bytes[4] << 8 | bytes[5]) == 32'768);
    CHECK(decode_ink(bytes).strokes[0][0].x == doctest::Approx(32'768.0 / 65'535.0).epsilon(1e-15));

    CHECK(code_of([] { encode_ink(InkNote{}); }) == Errc::MalformedInk);
    CHECK(code_of([] { encode_ink(InkNote{{{{0.2, 0.2}}}}); }) == Errc::MalformedInk);
    CHECK(code_of([] { encode_ink(InkNote{{{{0.2, 0.2}, {1.5, 0}}}}); }) == Errc::MalformedInk);
    auto truncated = encode_ink(corners);
    truncated.pop_back();
    CHECK(code_of([&] { decode_ink(truncated); }) == Errc::MalformedInk);
    auto trailing = encode_ink(corners);
    trailing.push_back(0);
    CHECK(code_of([&] { decode_ink(trailing); }) == Errc::MalformedInk);
    CHECK(code_of([] { decode_ink(std::vector<std::uint8_t>{0, 0}); }) == Errc::MalformedInk);
    CHECK(code_of([] { decode_ink(std::vector<std::uint8_t>{0, 1, 0, 1, 0, 0, 0, 0}); }) == Errc::MalformedInk);
}

TEST_CASE("ink round trip error bound") {
    std::mt19937_64 g(21);
    double worst = 0;
    for (int i = 0; i < 500; ++i) {
        const auto note = random_note(g);
        const auto bytes = encode_ink(note);
        const auto back = decode_ink(bytes);
        REQUIRE(back.strokes.size() == note.strokes.size());
        std::size_t at = 4;
        for (std::size_t s = 0; s < note.strokes.size(); ++s) {
            REQUIRE(back.strokes[s].size() == note.strokes[s].size());
            for (std::size_t p = 0; p < note.strokes[s].size(); ++p) {
                const auto& a = note.strokes[s][p];
                const auto& b = back.strokes[s][p];
                worst = std::max({worst, std::abs(a.x - b.x), std::abs(a.y - b.y)});
                CHECK((bytes[at] << 8 | bytes[at + 1]) == oracle::quantize(a.x));
                CHECK((bytes[at + 2] << 8 | bytes[at + 3]) == oracle::quantize(a.y));
                at += 4;
            }
            at += 2;
        }
    }
    CHECK(worst <= 1.0 / 65'535.0);
}

TEST_CASE("payload codec") {
    std::mt19937_64 g(4);
    const std::vector<Payload> samples = {
        std::string("hello \xc3\xa9"),
        random_note(g),
        FileChunk{"notes.txt", 2, 5, {1, 2, 3}},
        ControlPayload{ControlPayload::Op::Roster, {{id_of(1), 1}, {id_of(2), 2}}},
        ControlPayload{ControlPayload::Op::Leave, {}},
    };
    for (const auto& p : samples) {
        const auto back = decode_payload(kind_of(p), encode_payload(p));
        if (std::holds_alternative<InkNote>(p)) {
            CHECK(encode_payload(back) == encode_payload(p));
        } else {
            CHECK(back == p);
        }
    }
    CHECK_THROWS_AS(decode_payload(MessageKind::File, std::vector<std::uint8_t>{0, 5, 'a'}), Error);
}

TEST_CASE("replay guard verdicts") {
    ReplayGuard guard;
    const auto s = id_of(7);
    CHECK(code_of([&] { guard.accept_inbound(s, 1); }) == Errc::UnknownSender);
    guard.admit(s);
    for (std::uint64_t i = 1; i <= 4; ++i) CHECK(guard.accept_inbound(s, i).action == InboundVerdict::Action::Deliver);
    CHECK(guard.accept_inbound(s, 5).action == InboundVerdict::Action::Deliver);
    CHECK(guard.accept_inbound(s, 3).action == InboundVerdict::Action::Duplicate);
    CHECK(guard.accept_inbound(s, 5).action == InboundVerdict::Action::Duplicate);
    auto v = guard.accept_inbound(s, 8);
    CHECK(v.action == InboundVerdict::Action::Deliver);
    REQUIRE(v.gap);
    CHECK(*v.gap == SeqGap{6, 7});
    CHECK(guard.high(s) == 8);
    guard.admit(s);
    CHECK(guard.high(s) == 8);
}

TEST_CASE("midstream admission takes the first seq as baseline") {
    ReplayGuard guard;
    const auto s = id_of(4);
    guard.admit_midstream(s);
    auto first = guard.accept_inbound(s, 12);
    CHECK(first.action == InboundVerdict::Action::Deliver);
    CHECK_FALSE(first.gap);
    CHECK(guard.accept_inbound(s, 12).action == InboundVerdict::Action::Duplicate);
    auto later = guard.accept_inbound(s, 15);
    REQUIRE(later.gap);
    CHECK(*later.gap == SeqGap{13, 14});
}

TEST_CASE("at-most-once and in-order under arbitrary interleavings") {
    std::mt19937_64 g(99);
    for (int trial = 0; trial < 200; ++trial) {
        ReplayGuard guard;
        std::vector<std::pair<DeviceId, std::uint64_t>> feed;
        for (std::uint8_t s = 1; s <= 3; ++s) {
            guard.admit(id_of(s));
            for (std::uint64_t q = 1; q <= 30; ++q) {
                feed.emplace_back(id_of(s), q);
                if (g() % 5 == 0) feed.emplace_back(id_of(s), q);
            }
        }
        std::shuffle(feed.begin(), feed.end(), g);
        std::set<std::pair<DeviceId, std::uint64_t>> delivered;
        std::map<DeviceId, std::uint64_t> last;
        for (const auto& [s, q] : feed) {
            if (guard.accept_inbound(s, q).action != InboundVerdict::Action::Deliver) continue;
            CHECK(delivered.insert({s, q}).second);
            CHECK(q > last[s]);
            last[s] = q;
        }
    }
}

TEST_CASE("star routing") {
    Rng rng(1);
    const auto o = id_of(1), a = id_of(2), b = id_of(3);
    auto g = form_group(o, a, rng);
    {
        auto at_owner = route(g, a, o);
        CHECK(at_owner.deliver_local);
        CHECK(at_owner.forward_to.empty());
    }
    admit_member(g, b, o);
    auto at_owner = route(g, a, o);
    CHECK(at_owner.deliver_local);
    CHECK(at_owner.forward_to == std::vector<DeviceId>{b});
    auto at_b = route(g, a, b);
    CHECK(at_b.deliver_local);
    CHECK(at_b.forward_to.empty());
    auto from_owner = route(g, o, o);
    CHECK_FALSE(from_owner.deliver_local);
    CHECK(from_owner.forward_to == std::vector<DeviceId>{a, b});
    CHECK(code_of([&] { route(g, id_of(9), o); }) == Errc::NotMember);
    CHECK(code_of([&] { route(g, a, id_of(9)); }) == Errc::NotMember);
}

TEST_CASE("relay conservation counts n-1 deliveries") {
    Rng rng(2);
    for (std::uint8_t n = 2; n <= 8; ++n) {
        const auto o = id_of(1);
        auto g = form_group(o, id_of(2), rng);
        for (std::uint8_t i = 3; i <= n; ++i) admit_member(g, id_of(i), o);
        for (const auto& [sender, addr] : g.members) {
            std::size_t deliveries = 0;
            bool echo = false;
            auto hop = route(g, sender, o);
            if (hop.deliver_local) ++deliveries;
            for (const auto& next : hop.forward_to) {
                echo |= next == sender;
                if (route(g, sender, next).deliver_local) ++deliveries;
            }
            CHECK(deliveries == static_cast<std::size_t>(n - 1));
            CHECK_FALSE(echo);
        }
    }
}
