#include <doctest.h>

#include <set>

#include "offat/error.hpp"
#include "offat/grouping.hpp"
#include "offat/rng.hpp"

using namespace offat;

namespace {

DeviceId id_of(std::uint8_t last, std::uint8_t first = 0) {
    DeviceId id;
    id.bytes[0] = first;
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

struct Fixture {
    Rng rng{1};
    DeviceId me = id_of(1);
    DeviceId alice = id_of(2);
    DeviceId bob = id_of(3);
    Profile local{"me", {"music"}};
    PeerTable peers;
    InvitationStore store;

    Fixture() {
        peers.upsert("alice#music", alice, PeerStatus::Available, 0, local);
        peers.upsert("bob#go", bob, PeerStatus::Connected, 0, local);
    }
    const Invitation& invite_alice(TimeMs now = 0) { return store.create(me, "me#music", 7, peers, alice, now, rng); }
};

}  // namespace

TEST_CASE("invitation creation") {
    Fixture f;
    const auto& inv = f.invite_alice(5);
    CHECK(inv.state == InvitationState::Pending);
    CHECK(inv.direction == InvitationDirection::Outbound);
    CHECK(inv.from == f.me);
    CHECK(inv.to == f.alice);
    CHECK(inv.created_at == 5);
    CHECK(inv.ttl_ms == 30'000);
    CHECK(code_of([&] { f.invite_alice(6); }) == Errc::DuplicatePending);
    CHECK(code_of([&] { f.store.create(f.me, "me#music", 7, f.peers, f.bob, 0, f.rng); }) == Errc::PeerBusy);
    CHECK(code_of([&] { f.store.create(f.me, "me#music", 7, f.peers, id_of(9), 0, f.rng); }) == Errc::PeerUnknown);
}

TEST_CASE("respond boundaries") {
    {
        Fixture f;
        const auto id = f.invite_alice(0).id;
        CHECK(f.store.respond(id, true, 29'999).state == InvitationState::Accepted);
        CHECK(code_of([&] { f.store.respond(id, true, 29'999); }) == Errc::AlreadyResolved);
    }
    {
        Fixture f;
        const auto id = f.invite_alice(0).id;
        CHECK(f.store.respond(id, true, 30'000).state == InvitationState::Accepted);
    }
    {
        Fixture f;
        const auto id = f.invite_alice(0).id;
        CHECK(code_of([&] { f.store.respond(id, true, 30'001); }) == Errc::ExpiredInvitation);
        CHECK(f.store.find(id)->state == InvitationState::Expired);
    }
    {
        Fixture f;
        const auto id = f.invite_alice(0).id;
        CHECK(f.store.respond(id, false, 10).state == InvitationState::Declined);
        CHECK(f.store.pending().empty());
    }
    Fixture f;
    CHECK(code_of([&] { f.store.respond(InvitationId{}, true, 0); }) == Errc::UnknownInvitation);
}

TEST_CASE("expiry sweep across the ttl boundary") {
    for (TimeMs now = 29'990; now <= 30'010; ++now) {
        Fixture f;
        const auto id = f.invite_alice(0).id;
        auto expired = f.store.expire(now);
        CAPTURE(now);
        if (now > 30'000) {
            REQUIRE(expired.size() == 1);
            CHECK(expired[0].id == id);
            CHECK(f.store.find(id)->state == InvitationState::Expired);
        } else {
            CHECK(expired.empty());
            CHECK(f.store.find(id)->state == InvitationState::Pending);
        }
    }
    InvitationStore empty;
    CHECK(empty.expire(1'000'000).empty());
}

TEST_CASE("remaining time and next expiry") {
    Fixture f;
    const auto& inv = f.invite_alice(100);
    CHECK(inv.remaining_ms(100) == 30'000);
    CHECK(inv.remaining_ms(20'100) == 10'000);
    CHECK(inv.remaining_ms(40'000) == 0);
    CHECK(f.store.next_expiry() == 30'101);
}

TEST_CASE("invitation lifecycle is a DAG") {
    const std::vector<InvitationState> all = {InvitationState::Pending, InvitationState::Accepted,
                                              InvitationState::Declined, InvitationState::Expired};
    for (auto from : all) {
        for (auto to : all) {
            Invitation inv;
            inv.state = from;
            const bool allowed = from == InvitationState::Pending && to != InvitationState::Pending;
            CAPTURE(static_cast<int>(from));
            CAPTURE(static_cast<int>(to));
            if (allowed) {
                inv.resolve(to);
                CHECK(inv.state == to);
            } else {
                CHECK_THROWS_AS(inv.resolve(to), Error);
                CHECK(inv.state == from);
            }
        }
    }
}

TEST_CASE("inbound invitations") {
    InvitationStore store;
    Rng rng(3);
    const auto id = InvitationId::random(rng);
    const auto& inv = store.receive(id, id_of(5), id_of(1), "eve#art", 9, 40);
    CHECK(inv.direction == InvitationDirection::Inbound);
    REQUIRE(inv.from_profile);
    CHECK(inv.from_profile->name == "eve");
    CHECK(inv.from_go_intent == 9);
    CHECK(code_of([&] { store.receive(InvitationId::random(rng), id_of(5), id_of(1), "eve#art", 9, 41); }) ==
          Errc::DuplicatePending);
    CHECK(store.resolve_remote(id, InvitationState::Declined).state == InvitationState::Declined);
}

TEST_CASE("role negotiation") {
    const auto a = id_of(0xaa, 0xaa);
    const auto b = id_of(0xff, 0xff);
    CHECK(negotiate_role({GoIntent(7), a}, {GoIntent(3), b}) == a);
    CHECK(negotiate_role({GoIntent(5), a}, {GoIntent(5), b}) == b);
    CHECK_THROWS_AS(GoIntent(16), Error);
    CHECK_THROWS_AS(GoIntent(-1), Error);
    CHECK(code_of([&] { negotiate_role({GoIntent(1), a}, {GoIntent(2), a}); }) == Errc::InvalidArgument);
}

TEST_CASE("role negotiation over the full intent grid") {
    const auto lo = id_of(1);
    const auto hi = id_of(2);
    for (int x = 0; x <= 15; ++x) {
        for (int y = 0; y <= 15; ++y) {
            const RoleClaim a{GoIntent(x), lo};
            const RoleClaim b{GoIntent(y), hi};
            const auto w1 = negotiate_role(a, b);
            const auto w2 = negotiate_role(b, a);
            CHECK(w1 == w2);
            CHECK((w1 == lo || w1 == hi));
            const auto expected = x > y ? lo : hi;
            CHECK(w1 == expected);
        }
    }
}

TEST_CASE("group formation") {
    Rng rng(10);
    const auto a = id_of(1);
    const auto b = id_of(2);
    auto g = form_group(a, b, rng);
    CHECK(g.owner == a);
    CHECK(g.address_of(a) == kOwnerAddress);
    CHECK(g.address_of(b) == 2);
    CHECK(g.client_count() == 1);
    CHECK(status_of(g, a) == DeviceStatus::Owner);
    CHECK(status_of(g, b) == DeviceStatus::Member);
    CHECK(status_of(g, id_of(3)) == DeviceStatus::Available);
    CHECK(status_of(std::nullopt, a) == DeviceStatus::Available);
    Rng other(11);
    CHECK(form_group(a, b, other).psk != g.psk);
}

TEST_CASE("admission fills the lowest free address") {
    Rng rng(1);
    const auto owner = id_of(1);
    auto g = form_group(owner, id_of(2), rng);
    CHECK(admit_member(g, id_of(3), owner) == 3);
    CHECK(code_of([&] { admit_member(g, id_of(4), id_of(2)); }) == Errc::NotOwner);
    CHECK(code_of([&] { admit_member(g, id_of(3), owner); }) == Errc::PeerBusy);
    disconnect(g, id_of(2));
    CHECK(admit_member(g, id_of(4), owner) == 2);
}

TEST_CASE("group full at 253 clients") {
    Rng rng(1);
    const auto owner = id_of(0, 1);
    auto g = form_group(owner, id_of(2, 2), rng);
    for (int i = 3; i <= 254; ++i) admit_member(g, id_of(static_cast<std::uint8_t>(i), 2), owner);
    CHECK(g.client_count() == 253);
    std::set<std::uint8_t> addresses;
    for (const auto& [id, addr] : g.members) addresses.insert(addr);
    CHECK(addresses.size() == 254);
    CHECK(*addresses.begin() == 1);
    CHECK(*addresses.rbegin() == 254);
    CHECK(code_of([&] { admit_member(g, id_of(9, 3), owner); }) == Errc::GroupFull);
}

TEST_CASE("disconnect") {
    Rng rng(1);
    const auto o = id_of(1), a = id_of(2), b = id_of(3);
    {
        auto g = form_group(o, a, rng);
        admit_member(g, b, o);
        auto out = disconnect(g, a);
        CHECK_FALSE(out.dissolved);
        CHECK(g.members.size() == 2);
        CHECK(out.released == std::vector<DeviceId>{a});
    }
    {
        auto g = form_group(o, a, rng);
        admit_member(g, b, o);
        auto out = disconnect(g, o);
        CHECK(out.dissolved);
        CHECK(out.released.size() == 3);
    }
    {
        auto g = form_group(o, a, rng);
        auto out = disconnect(g, a);
        CHECK(out.dissolved);
        CHECK(code_of([&] {
                  auto g2 = form_group(o, a, rng);
                  disconnect(g2, id_of(9));
              }) == Errc::NotInGroup);
    }
}
