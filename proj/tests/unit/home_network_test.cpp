#include <doctest.h>

#include "fixtures.hpp"

using namespace mimsi;

namespace {

HomeNetwork network_with_pool(std::size_t pool = 5) {
    HomeNetwork hn(Rng(42), fixture::prefix());
    for (const auto& i : fixture::imsis(9000, pool)) hn.add_free_imsi(i);
    return hn;
}

}  // namespace

TEST_CASE("scheme c change lifecycle") {
    auto hn = network_with_pool();
    hn.provision(fixture::provisioning("alice", Scheme::C, 1));
    auto old = fixture::imsi(1);
    CHECK(hn.check_invariants().empty());
    CHECK(hn.free_count() == 5);

    auto t = hn.trigger_change("alice", 10);
    REQUIRE(t.allocated);
    auto fresh = *t.allocated;
    CHECK(hn.index().at(fresh).status == ImsiStatus::InTransit);
    CHECK(hn.find_account(fresh) == "alice");
    CHECK(hn.free_count() == 4);
    CHECK(hn.trigger_change("alice", 11).already_pending);
    CHECK(hn.check_invariants().empty());

    // Every vector under the old IMSI carries the embedding; the flag stays up.
    for (int round = 0; round < 2; ++round) {
        auto batch = hn.request_vectors(old, 5, 20);
        CHECK_FALSE(batch.promotion);
        for (const auto& v : batch.vectors) CHECK(v.kind == RandKind::SignalC);
        CHECK(hn.record("alice").imsi_change_flag);
    }

    auto batch = hn.request_vectors(fresh, 3, 30);
    REQUIRE(batch.promotion);
    CHECK(batch.promotion->promoted == fresh);
    CHECK(batch.promotion->released == old);
    for (const auto& v : batch.vectors) CHECK(v.kind == RandKind::Plain);
    const auto& rec = hn.record("alice");
    CHECK(rec.current_imsi == fresh);
    CHECK_FALSE(rec.imsi_change_flag);
    CHECK(rec.history.size() == 2);
    CHECK(hn.index().at(fresh).status == ImsiStatus::Allocated);
    CHECK(hn.index().at(old).status == ImsiStatus::Free);
    CHECK_FALSE(hn.find_account(old));
    CHECK(hn.free_count() == 5);
    CHECK(hn.check_invariants().empty());

    // Second request under the new IMSI: no second promotion.
    CHECK_FALSE(hn.request_vectors(fresh, 1, 40).promotion);
    CHECK_THROWS_AS(hn.request_vectors(old, 1, 50), HomeNetworkError);
}

TEST_CASE("scheme b flag resets at the first embed") {
    HomeNetwork hn(Rng(1), fixture::prefix());
    hn.provision(fixture::provisioning("bob", Scheme::B, 100));
    hn.trigger_change("bob", 0);
    auto batch = hn.request_vectors(fixture::imsi(100), 4, 0);
    CHECK(batch.flag_set_at_generation);
    CHECK(batch.vectors[0].kind == RandKind::SignalB);
    for (std::size_t i = 1; i < 4; ++i) CHECK(batch.vectors[i].kind == RandKind::Plain);
    CHECK_FALSE(hn.record("bob").imsi_change_flag);
    // Every predefined IMSI resolves.
    for (const auto& i : fixture::imsis(100, 3)) CHECK(hn.find_account(i) == "bob");
    CHECK(hn.request_vectors(fixture::imsi(101), 1, 0).account == "bob");
    CHECK(hn.record("bob").current_imsi == fixture::imsi(101));
    CHECK(hn.check_invariants().empty());
}

TEST_CASE("scheme a triggers are refused") {
    HomeNetwork hn(Rng(1), fixture::prefix());
    hn.provision(fixture::provisioning("carol", Scheme::A, 200));
    try {
        hn.trigger_change("carol", 0);
        FAIL("expected an error");
    } catch (const HomeNetworkError& e) {
        CHECK(e.kind() == HomeNetworkError::Kind::Unsupported);
    }
}

TEST_CASE("pool exhaustion and history exclusion") {
    auto hn = network_with_pool(1);
    hn.provision(fixture::provisioning("dave", Scheme::C, 1));
    auto first = *hn.trigger_change("dave", 0).allocated;
    hn.request_vectors(first, 1, 0);
    // The pool now holds only dave's old IMSI, which he may not reuse.
    CHECK(hn.free_count() == 1);
    try {
        hn.trigger_change("dave", 1);
        FAIL("expected an error");
    } catch (const HomeNetworkError& e) {
        CHECK(e.kind() == HomeNetworkError::Kind::PoolExhausted);
    }
    CHECK_FALSE(hn.record("dave").imsi_change_flag);
    CHECK(hn.check_invariants().empty());
}

TEST_CASE("unknown identities and accounts") {
    auto hn = network_with_pool();
    CHECK_THROWS_AS(hn.request_vectors(fixture::imsi(9000), 1, 0), HomeNetworkError);
    CHECK_THROWS_AS(hn.request_vectors(fixture::imsi(1), 1, 0), HomeNetworkError);
    CHECK_THROWS_AS(hn.trigger_change("nobody", 0), HomeNetworkError);
}

TEST_CASE("provisioning conflicts") {
    auto hn = network_with_pool();
    hn.provision(fixture::provisioning("a", Scheme::C, 1));
    CHECK_THROWS_AS(hn.provision(fixture::provisioning("a", Scheme::C, 2)), HomeNetworkError);
    CHECK_THROWS_AS(hn.provision(fixture::provisioning("b", Scheme::C, 1)), HomeNetworkError);
    CHECK_THROWS_AS(hn.provision(fixture::provisioning("c", Scheme::C, 9000)), HomeNetworkError);
    auto bad = fixture::provisioning("d", Scheme::C, 3);
    bad.amf = kSmacAmf;
    CHECK_THROWS_AS(hn.provision(bad), HomeNetworkError);
    CHECK_THROWS_AS(hn.add_free_imsi(Imsi::make("002", "01", "0000000001")), HomeNetworkError);
}

TEST_CASE("sqn exhaustion disables the account") {
    HomeNetwork hn(Rng(1), fixture::prefix());
    auto p = fixture::provisioning("e", Scheme::C, 1);
    p.initial_sqn = Sqn(Sqn::kMax - 2);
    hn.provision(p);
    CHECK_THROWS_AS(hn.request_vectors(fixture::imsi(1), 5, 0), HomeNetworkError);
    CHECK(hn.record("e").disabled);
}

TEST_CASE("corruption is caught by the scan") {
    auto hn = network_with_pool();
    hn.provision(fixture::provisioning("f", Scheme::C, 1));
    hn.corrupt_drop_index_entry(fixture::imsi(1));
    auto problems = hn.check_invariants();
    REQUIRE_FALSE(problems.empty());
    CHECK(problems.front().starts_with("conservation"));
}

TEST_CASE("change policies") {
    ChangePolicyEngine engine;
    engine.configure("n", {ChangePolicy::Kind::EveryNAuthentications, 3, 0});
    engine.configure("roam", {ChangePolicy::Kind::OnServingNetworkChange, 0, 0});
    engine.configure("clock", {ChangePolicy::Kind::FixedInterval, 0, 1000});
    engine.configure("manual", {});

    auto auth = [&](const std::string& a) {
        return engine.tick({PolicyEvent::Kind::Authentication, 0, a, "home"});
    };
    CHECK(auth("n").empty());
    CHECK(auth("n").empty());
    CHECK(auth("n") == std::vector<AccountId>{"n"});
    CHECK(auth("n").empty());
    CHECK(auth("manual").empty());

    CHECK(engine.tick({PolicyEvent::Kind::Attach, 0, "roam", "home"}).empty());
    CHECK(engine.tick({PolicyEvent::Kind::Attach, 0, "roam", "home"}).empty());
    CHECK(engine.tick({PolicyEvent::Kind::Attach, 0, "roam", "visited"}) == std::vector<AccountId>{"roam"});

    CHECK(engine.tick({PolicyEvent::Kind::Clock, 999, std::nullopt, {}}).empty());
    CHECK(engine.tick({PolicyEvent::Kind::Clock, 1000, std::nullopt, {}}) == std::vector<AccountId>{"clock"});
    CHECK(engine.tick({PolicyEvent::Kind::Clock, 1500, std::nullopt, {}}).empty());
    CHECK(engine.tick({PolicyEvent::Kind::Clock, 3500, std::nullopt, {}}) == std::vector<AccountId>{"clock"});

    CHECK_THROWS(engine.configure("bad", {ChangePolicy::Kind::EveryNAuthentications, 0, 0}));
    CHECK(parse_policy_kind("every_n") == ChangePolicy::Kind::EveryNAuthentications);
    CHECK_THROWS(parse_policy_kind("weekly"));
}
