#include <doctest.h>

#include "fixtures.hpp"

using namespace mimsi;

namespace {

struct Pair {
    HomeNetwork hn{Rng(3), fixture::prefix()};
    Usim card;

    Pair(Scheme scheme, std::uint32_t threshold = 0) : card(fixture::card(scheme, 1, threshold)) {
        for (const auto& i : fixture::imsis(5000, 4)) hn.add_free_imsi(i);
        hn.provision(fixture::provisioning("acct", scheme, 1));
    }

    CardAuthResult authenticate() {
        auto batch = hn.request_vectors(card.read_ef_imsi(), 1, 0);
        const auto& v = batch.vectors.front();
        return card.handle_auth_request(v.rand, v.autn);
    }
};

}  // namespace

TEST_CASE("scheme c card follows the embedded imsi") {
    Pair p(Scheme::C);
    p.card.terminal_profile({true, true});
    auto target = *p.hn.trigger_change("acct", 0).allocated;
    auto r = p.authenticate();
    REQUIRE(std::holds_alternative<Accepted>(r.outcome));
    REQUIRE(r.change);
    CHECK(r.change->from == fixture::imsi(1));
    CHECK(r.change->to == target);
    CHECK(r.change->cause == ImsiChange::Cause::SignalC);
    CHECK(r.status_byte);
    CHECK(p.card.read_ef_imsi() == target);
    CHECK(p.card.change_count() == 1);

    auto cmd = p.card.fetch();
    CHECK(cmd.kind == ProactiveCommand::Kind::Refresh);
    p.card.terminal_response();
    CHECK_FALSE(p.card.pending_refresh());

    // The next batch under the new IMSI promotes it; a later signal C vector
    // for the same IMSI would be ignored by the card anyway.
    auto again = p.authenticate();
    CHECK_FALSE(again.change);
    CHECK(p.hn.record("acct").current_imsi == target);
}

TEST_CASE("scheme b card steps through its list") {
    Pair p(Scheme::B);
    p.hn.trigger_change("acct", 0);
    auto r = p.authenticate();
    REQUIRE(r.change);
    CHECK(r.change->to == fixture::imsi(2));
    CHECK(p.card.list_cursor() == 1);
    CHECK_FALSE(p.authenticate().change);
}

TEST_CASE("scheme a threshold ignores the first use of a new imsi") {
    Pair p(Scheme::A, 2);
    CHECK_FALSE(p.authenticate().change);
    auto r = p.authenticate();
    REQUIRE(r.change);
    CHECK(r.change->cause == ImsiChange::Cause::Threshold);
    CHECK(p.card.read_ef_imsi() == fixture::imsi(2));
    // First use confirms, then two counted runs.
    CHECK_FALSE(p.authenticate().change);
    CHECK_FALSE(p.authenticate().change);
    CHECK(p.authenticate().change);
    CHECK(p.card.read_ef_imsi() == fixture::imsi(3));
    CHECK(p.card.auth_counter() == 5);
}

TEST_CASE("cyclic selection wraps and pseudorandom never repeats the current entry") {
    auto u = fixture::card(Scheme::B, 1);
    Usim cyclic(u);
    cyclic.change_imsi(fixture::imsi(3));
    CHECK(cyclic.select_next_imsi() == fixture::imsi(1));

    u.selection = SelectionMode::PseudoRandom;
    u.selection_seed = 1234;
    Usim random(u);
    for (int i = 0; i < 50; ++i) {
        auto before = random.read_ef_imsi();
        auto next = random.select_next_imsi();
        CHECK(next != before);
        random.change_imsi(next);
    }
    CHECK_THROWS_AS(Usim(fixture::card(Scheme::C, 1)).select_next_imsi(), UsimProtocolError);
}

TEST_CASE("rejected challenges change nothing") {
    Pair p(Scheme::C);
    Block128 rand{};
    rand[0] = 1;
    auto r = p.card.handle_auth_request(rand, Autn{});
    CHECK(std::holds_alternative<MacFailure>(r.outcome));
    CHECK_FALSE(r.change);
    CHECK(p.card.auth_counter() == 0);
    CHECK(p.card.stored_sqn().value() == 32);
}

TEST_CASE("proactive protocol misuse") {
    Usim card(fixture::card(Scheme::C, 1));
    CHECK_THROWS_AS(card.fetch(), UsimProtocolError);
    CHECK_THROWS_AS(card.terminal_response(), UsimProtocolError);
    card.change_imsi(fixture::imsi(9));
    CHECK_THROWS_AS(card.fetch(), UsimProtocolError);  // no terminal profile yet
    card.terminal_profile({true, false});
    CHECK(card.fetch().kind == ProactiveCommand::Kind::DisplayText);
    card.power_cycle();
    CHECK_FALSE(card.pending_refresh());
    CHECK(card.read_ef_imsi() == fixture::imsi(9));
    CHECK_THROWS_AS(card.change_imsi(Imsi::make("002", "01", "0000000001")), UsimProtocolError);
}

TEST_CASE("personalization checks") {
    auto u = fixture::card(Scheme::B, 1);
    u.predefined.erase(u.predefined.begin() + 1, u.predefined.end());
    CHECK_THROWS(Usim{u});
    u = fixture::card(Scheme::A, 1);
    u.imsi = fixture::imsi(99);
    CHECK_THROWS(Usim{u});
    CHECK(parse_selection_mode("pseudorandom") == SelectionMode::PseudoRandom);
    CHECK_THROWS(parse_selection_mode("lifo"));
}
