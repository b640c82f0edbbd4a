#include <doctest.h>

#include "explorer.hpp"
#include "simulator.hpp"
#include "sweep.hpp"

using namespace mimsi;
using nlohmann::json;

namespace {

json small_world(const char* scheme = "C") {
    json doc = json::parse(R"({
      "format": "mimsi-scenario/1",
      "seed": 11,
      "duration_ms": 21600000,
      "operator": {"mcc": "001", "mnc": "01"},
      "networks": [{"id": "home", "batch_size": 3}, {"id": "visited", "batch_size": 2}],
      "population": {"count": 4, "policy": {"name": "every_n", "n": 2}},
      "imsi_pool": {"msin_start": 900000, "count": 30},
      "workload": {"calls_per_hour": 6, "power_cycles_per_day": 6, "off_duration_mean_ms": 600000,
                   "roams_per_day": 4, "identity_loss_probability": 0.2},
      "air": {"delay_ms": 30, "loss_probability": 0.05, "duplicate_probability": 0.05},
      "core": {"min_delay_ms": 10, "max_delay_ms": 300, "duplicate_probability": 0.1},
      "attacks": [{"kind": "inject_random", "at_ms": 7200000, "count": 20},
                  {"kind": "inject_replay", "at_ms": 9000000, "count": 5},
                  {"kind": "catch", "at_ms": 10000000, "network": "home"}]
    })");
    doc["population"]["scheme"] = scheme;
    if (std::string(scheme) == "A") {
        doc["population"]["policy"] = {{"name", "manual"}};
        doc["population"]["change_threshold"] = 2;
    }
    return doc;
}

}  // namespace

TEST_CASE("runs are byte identical for one seed") {
    auto sc = parse_scenario(small_world());
    auto a = run_scenario(sc, {}, "h");
    auto b = run_scenario(sc, {}, "h");
    CHECK(a.trace_jsonl == b.trace_jsonl);
    CHECK(a.metrics_json == b.metrics_json);
    auto c = run_scenario(parse_scenario(small_world(), 12), {}, "h");
    CHECK(a.trace_jsonl != c.trace_jsonl);
}

TEST_CASE("a busy scheme c run keeps every audit clean") {
    auto r = run_scenario(parse_scenario(small_world()));
    CHECK_FALSE(r.violation);
    CHECK(r.stats.scheduler_events > 100);
    CHECK(r.stats.invariant_checks == r.stats.scheduler_events);
    CHECK(r.stats.promotions > 0);
    CHECK(r.stats.promotion_violations == 0);
    CHECK(r.stats.embed_violations == 0);
    CHECK(r.stats.abandon_violations == 0);
    CHECK(r.stats.false_detections == 0);
    CHECK(r.stats.attacker_changes == 0);
    CHECK(r.stats.random_injections.accepted == 0);
    CHECK(r.stats.replay_injections.accepted == 0);
    CHECK(r.stats.replay_injections.sqn_stale == r.stats.replay_injections.attempts);
    CHECK(r.metrics["auth"]["conservation_ok"] == true);
    CHECK(r.metrics["format"] == "mimsi-metrics/1");
}

TEST_CASE("schemes a and b run clean") {
    for (const char* scheme : {"A", "B"}) {
        CAPTURE(scheme);
        auto r = run_scenario(parse_scenario(small_world(scheme)));
        CHECK_FALSE(r.violation);
        CHECK(r.stats.changes_on_card > 0);
        CHECK(r.stats.false_detections == 0);
    }
}

TEST_CASE("keys stay out of the trace unless requested") {
    auto sc = parse_scenario(small_world());
    auto plain = run_scenario(sc);
    CHECK(plain.trace_jsonl.find("\"xres\":\"redacted\"") != std::string::npos);
    RunOptions opt;
    opt.debug_keys = true;
    auto debug = run_scenario(sc, opt);
    CHECK(debug.trace_jsonl.find("\"xres\":\"redacted\"") == std::string::npos);
    CHECK(debug.trace_jsonl.find("465b5ce8") == std::string::npos);
}

TEST_CASE("zero duration produces an empty run") {
    auto doc = small_world();
    doc["duration_ms"] = 0;
    auto r = run_scenario(parse_scenario(doc));
    CHECK(r.trace.events().empty());
    CHECK(r.stats.scheduler_events == 0);
    CHECK(r.metrics["pseudonyms"]["mean"] == 0.0);
}

TEST_CASE("the desync fault stops the run with the invariant name") {
    RunOptions opt;
    opt.fault = "desync";
    auto r = run_scenario(parse_scenario(small_world()), opt);
    REQUIRE(r.violation);
    CHECK(r.violation->find("conservation") != std::string::npos);
}

TEST_CASE("sweeps aggregate and reject empty ranges") {
    auto doc = small_world();
    doc["duration_ms"] = 3600000;
    auto agg = run_sweep(doc, 1, 3);
    CHECK(agg["format"] == "mimsi-sweep/1");
    CHECK(agg["seeds"]["count"] == 3);
    CHECK(agg["members"].size() == 3);
    CHECK(agg["signals"]["false_detections"] == 0);
    CHECK(agg["promotions"]["violations"] == 0);
    CHECK_THROWS(run_sweep(doc, 5, 4));
    RunOptions opt;
    opt.fault = "desync";
    try {
        run_sweep(doc, 7, 9, opt);
        FAIL("expected a failure");
    } catch (const SweepFailure& e) {
        CHECK(e.seed() == 7);
    }
}

TEST_CASE("latency summary") {
    auto s = summarize({4, 1, 3, 2});
    CHECK(s.count == 4);
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.max == 4);
    CHECK(summarize({}).count == 0);
}

TEST_CASE("explorer passes the built-in skeletons") {
    for (const auto& sk : standard_skeletons()) {
        CAPTURE(sk.name);
        auto v = exhaustive_small_run(sk);
        CHECK(v.ok);
        CHECK(v.violations.empty());
        CHECK(v.leaves > 0);
    }
}

TEST_CASE("explorer limits") {
    Skeleton sk{"too-long", Scheme::C, std::vector<Step>(kMaxSkeletonSteps + 1, Step::Request)};
    CHECK_THROWS(exhaustive_small_run(sk));
    Skeleton small{"tiny", Scheme::C, {Step::Trigger, Step::Request, Step::Deliver, Step::Request, Step::Deliver, Step::Deliver}};
    CHECK_THROWS_AS(exhaustive_small_run(small, 3), StateSpaceExceeded);
}
