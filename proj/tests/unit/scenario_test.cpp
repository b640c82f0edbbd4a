#include <doctest.h>

#include <algorithm>

#include "scenario.hpp"

using namespace mimsi;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({
      "format": "mimsi-scenario/1",
      "seed": 3,
      "duration_ms": 3600000,
      "operator": {"mcc": "001", "mnc": "01"},
      "networks": [{"id": "home", "batch_size": 4}],
      "subscribers": [{
        "account": "alice",
        "k": "465b5ce8b199b49faa5f0a2ee238a6bc",
        "op": "cdc202d5123e20f62b6d676ac72cb318",
        "scheme": "C",
        "imsi": "001010000000001",
        "policy": {"name": "every_n", "n": 2}
      }],
      "imsi_pool": {"msin_start": 500, "count": 10}
    })");
}

std::vector<std::string> problems(const json& doc) {
    try {
        parse_scenario(doc);
    } catch (const ScenarioError& e) {
        return e.problems();
    }
    return {};
}

bool mentions(const std::vector<std::string>& list, std::string_view text) {
    return std::any_of(list.begin(), list.end(), [&](const std::string& p) { return p.find(text) != std::string::npos; });
}

}  // namespace

TEST_CASE("minimal scenario") {
    auto sc = parse_scenario(minimal());
    CHECK(sc.seed == 3);
    CHECK(sc.networks.size() == 1);
    REQUIRE(sc.subscribers.size() == 1);
    const auto& s = sc.subscribers[0];
    CHECK(s.opc == from_hex<16>("cd63cb71954a9f4e48a5994e37a02baf"));
    CHECK(s.policy.kind == ChangePolicy::Kind::EveryNAuthentications);
    CHECK(s.initial_network == "home");
    CHECK(sc.pool.size() == 10);
    CHECK(sc.pool.front().digits() == "001010000000500");
}

TEST_CASE("seed override") {
    CHECK(parse_scenario(minimal(), 99).seed == 99);
}

TEST_CASE("errors carry field paths and are all reported") {
    auto doc = minimal();
    doc["subscribers"][0]["k"] = "abc";
    doc["subscribers"][0]["scheme"] = "Q";
    doc["networks"][0]["batch_size"] = 0;
    doc["surprise"] = true;
    auto p = problems(doc);
    CHECK(mentions(p, "subscribers[0].k"));
    CHECK(mentions(p, "subscribers[0].scheme"));
    CHECK(mentions(p, "networks[0].batch_size"));
    CHECK(mentions(p, "surprise: unknown field"));
}

TEST_CASE("cross checks") {
    auto doc = minimal();
    doc["subscribers"][0]["imsi"] = "002010000000001";
    CHECK(mentions(problems(doc), "operator"));

    doc = minimal();
    doc["subscribers"][0]["scheme"] = "A";
    doc["subscribers"][0]["predefined"] = {"001010000000001", "001010000000002"};
    CHECK(mentions(problems(doc), "manual"));

    doc = minimal();
    doc["subscribers"][0]["predefined"] = {"001010000000001", "001010000000002"};
    CHECK(mentions(problems(doc), "predefined"));

    doc = minimal();
    doc["subscribers"][0]["scheme"] = "B";
    doc["subscribers"][0]["predefined"] = {"001010000000002", "001010000000003"};
    CHECK(mentions(problems(doc), "subscribers[0].imsi"));

    doc = minimal();
    doc["subscribers"][0]["opc"] = "cd63cb71954a9f4e48a5994e37a02baf";
    CHECK(mentions(problems(doc), "exactly one"));

    doc = minimal();
    doc["subscribers"][0]["amf"] = "ffff";
    CHECK(mentions(problems(doc), "amf"));

    doc = minimal();
    doc["imsi_pool"] = {"001010000000001"};
    CHECK(mentions(problems(doc), "001010000000001"));

    doc = minimal();
    doc["attacks"] = {{{"kind", "catch"}, {"at_ms", 5}, {"network", "mars"}}};
    CHECK(mentions(problems(doc), "attacks[0].network"));
}

TEST_CASE("generated population") {
    auto doc = minimal();
    doc.erase("subscribers");
    doc["population"] = {{"count", 12}, {"scheme", "B"}, {"msin_start", 100}, {"predefined_count", 3}};
    auto sc = parse_scenario(doc);
    REQUIRE(sc.subscribers.size() == 12);
    CHECK(sc.subscribers[0].account == "sub-0001");
    CHECK(sc.subscribers[0].predefined.size() == 3);
    CHECK(sc.subscribers[0].key != sc.subscribers[1].key);
    // Same seed, same keys.
    CHECK(parse_scenario(doc).subscribers[5].key == sc.subscribers[5].key);
    CHECK(parse_scenario(doc, 4).subscribers[5].key != sc.subscribers[5].key);
}

TEST_CASE("dotted overrides") {
    auto doc = minimal();
    apply_override(doc, "subscribers.0.policy.n", 7);
    apply_override(doc, "duration_ms", 5);
    CHECK(doc["subscribers"][0]["policy"]["n"] == 7);
    CHECK(doc["duration_ms"] == 5);
    CHECK_THROWS(apply_override(doc, "subscribers.9.k", "00"));
}
