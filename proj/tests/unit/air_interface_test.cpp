#include <doctest.h>

#include <set>

#include "air_interface.hpp"
#include "fixtures.hpp"

using namespace mimsi;

namespace {

struct World {
    HomeNetwork hn{Rng(8), fixture::prefix()};
    ServingNetwork sn{"home", 3, 77};
    Usim card{fixture::card(Scheme::C, 1)};
    MeState me;

    World() {
        for (const auto& i : fixture::imsis(7000, 4)) hn.add_free_imsi(i);
        hn.provision(fixture::provisioning("acct", Scheme::C, 1));
        me_camp(me, "home");
    }

    // Full attach: identity, AKA, TMSI. Returns the TMSI.
    Tmsi attach(const Imsi& imsi, ServingNetwork::SessionId session = 1) {
        sn.note_session_imsi(session, imsi);
        auto req = serving_authenticate(sn, hn, session, imsi, 0);
        auto auth = me_authenticate(me, card, std::get<air::AuthRequest>(req));
        auto done = sn.finish_authentication(session, std::get<air::AuthResponse>(auth.reply));
        auto tmsi = std::get<air::TmsiReallocate>(done).tmsi;
        me_accept_tmsi(me, tmsi);
        return tmsi;
    }
};

}  // namespace

TEST_CASE("power on presents the imsi, later attaches use the tmsi") {
    World w;
    auto first = me_power_on(w.me, w.card);
    REQUIRE(std::holds_alternative<air::AttachWithImsi>(first));
    CHECK(cleartext_imsi(first) == fixture::imsi(1));
    auto tmsi = w.attach(fixture::imsi(1));
    CHECK(w.sn.resolve_tmsi(tmsi.value) == fixture::imsi(1));
    auto next = me_attach(w.me);
    REQUIRE(std::holds_alternative<air::AttachWithTmsi>(next));
    CHECK_FALSE(cleartext_imsi(next));
    CHECK(w.sn.buffered(fixture::imsi(1)) == 2);
    CHECK(w.sn.vectors_consumed() == 1);
}

TEST_CASE("refresh drops the tmsi and reattaches with the new imsi") {
    World w;
    me_power_on(w.me, w.card);
    w.attach(fixture::imsi(1));
    auto target = *w.hn.trigger_change("acct", 0).allocated;
    w.sn.discard_vectors(fixture::imsi(1));
    w.sn.note_session_imsi(1, fixture::imsi(1));
    auto req = serving_authenticate(w.sn, w.hn, 1, fixture::imsi(1), 0);
    auto auth = me_authenticate(w.me, w.card, std::get<air::AuthRequest>(req));
    REQUIRE(auth.card.status_byte);
    auto action = me_handle_proactive(w.me, w.card);
    REQUIRE(action);
    CHECK(action->kind == ProactiveAction::Kind::Reattach);
    CHECK(cleartext_imsi(*action->message) == target);
    CHECK_FALSE(w.me.tmsi);
}

TEST_CASE("a non-proactive me keeps the old identity until power off") {
    World w;
    w.me.proactive_support = false;
    me_power_on(w.me, w.card);
    w.attach(fixture::imsi(1));
    auto target = *w.hn.trigger_change("acct", 0).allocated;
    w.sn.discard_vectors(fixture::imsi(1));
    auto req = serving_authenticate(w.sn, w.hn, 1, fixture::imsi(1), 0);
    auto auth = me_authenticate(w.me, w.card, std::get<air::AuthRequest>(req));
    CHECK(auth.card.status_byte);
    CHECK_FALSE(me_handle_proactive(w.me, w.card));
    CHECK(me_identity_response(w.me).imsi == fixture::imsi(1));

    me_power_off(w.me, w.card);
    auto attach = me_power_on(w.me, w.card);
    REQUIRE(std::holds_alternative<air::AttachWithImsi>(attach));
    CHECK(cleartext_imsi(attach) == target);
}

TEST_CASE("serving network discards vectors when a session switches imsi") {
    World w;
    auto a = fixture::imsi(1);
    w.sn.note_session_imsi(5, a);
    w.sn.store_vectors(a, w.hn.request_vectors(a, 3, 0).vectors);
    CHECK(w.sn.buffered(a) == 3);
    w.sn.note_session_imsi(5, fixture::imsi(7000));
    CHECK(w.sn.buffered(a) == 0);
    CHECK(w.sn.vectors_discarded() == 3);
}

TEST_CASE("wrong response is rejected") {
    World w;
    me_power_on(w.me, w.card);
    w.sn.note_session_imsi(1, fixture::imsi(1));
    serving_authenticate(w.sn, w.hn, 1, fixture::imsi(1), 0);
    auto r = w.sn.finish_authentication(1, air::AuthResponse{});
    REQUIRE(std::holds_alternative<air::Reject>(r));
    CHECK(std::get<air::Reject>(r).cause == air::Reject::Cause::AuthenticationFailed);
}

TEST_CASE("unknown imsi gets rejected by the serving network") {
    World w;
    auto r = serving_authenticate(w.sn, w.hn, 1, fixture::imsi(7001), 0);
    REQUIRE(std::holds_alternative<air::Reject>(r));
    CHECK(std::get<air::Reject>(r).cause == air::Reject::Cause::UnknownSubscriber);
}

TEST_CASE("tmsis are unique within a network") {
    World w;
    me_power_on(w.me, w.card);
    std::set<std::uint32_t> seen;
    for (int i = 0; i < 200; ++i) seen.insert(w.attach(fixture::imsi(1)).value);
    CHECK(seen.size() == 200);
}

TEST_CASE("roaming forgets a foreign tmsi") {
    World w;
    me_power_on(w.me, w.card);
    w.attach(fixture::imsi(1));
    me_camp(w.me, "visited");
    CHECK(std::holds_alternative<air::AttachWithImsi>(me_attach(w.me)));
}

TEST_CASE("message names") {
    CHECK(message_name(air::IdentityRequest{}) == "identity_request");
    CHECK(message_name(air::AuthFailure{air::AuthFailure::Cause::SynchFailure}) == "auth_failure");
    CHECK(to_string(air::Reject::Cause::NetworkFailure) == "network_failure");
}
