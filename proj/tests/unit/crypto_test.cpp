#include <doctest.h>

#include <bit>
#include <set>

#include "aka.hpp"
#include "conformance.hpp"
#include "fixtures.hpp"

using namespace mimsi;

namespace {

int bit_distance(const Block64& a, const Block64& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
    return d;
}

}  // namespace

TEST_CASE("milenage set 1") {
    auto m = fixture::milenage1();
    auto rand = from_hex<16>("23553cbe9637a89d218ae64dae47bf35");
    Sqn sqn = Sqn::from_bytes(from_hex<6>("ff9bb4d0b607"));
    Amf amf{0xb9b9};
    CHECK(to_hex(m.f1(rand, sqn, amf)) == "4a9ffac354dfafb3");
    CHECK(to_hex(m.f1_star(rand, sqn, amf)) == "01cfaf9ec4e871e9");
    auto out = m.f2345(rand);
    CHECK(to_hex(out.res) == "a54211d5e3ba50bf");
    CHECK(to_hex(out.ck) == "b40ba9a3c58b2a05bbf0d987b21bf8cb");
    CHECK(to_hex(out.ik) == "f769bcd751044604127672711c6d3441");
    CHECK(to_hex(out.ak) == "aa689c648370");
    CHECK(to_hex(m.f5_star(rand)) == "451e8beca43b");
    CHECK(to_hex(derive_opc(fixture::key1(), from_hex<16>("cdc202d5123e20f62b6d676ac72cb318"))) ==
          "cd63cb71954a9f4e48a5994e37a02baf");
}

TEST_CASE("milenage sets 1 to 7") {
    for (const auto& t : milenage_test_sets()) {
        CAPTURE(t.number);
        SubscriberKey k{from_hex<16>(t.k)};
        Block128 opc = derive_opc(k, from_hex<16>(t.op));
        REQUIRE(to_hex(opc) == t.opc);
        Milenage m(k, opc);
        auto rand = from_hex<16>(t.rand);
        Sqn sqn = Sqn::from_bytes(from_hex<6>(t.sqn));
        Amf amf{static_cast<std::uint16_t>(std::stoul(t.amf, nullptr, 16))};
        CHECK(to_hex(m.f1(rand, sqn, amf)) == t.f1);
        CHECK(to_hex(m.f1_star(rand, sqn, amf)) == t.f1_star);
        CHECK(to_hex(m.f2(rand)) == t.f2);
        CHECK(to_hex(m.f3(rand)) == t.f3);
        CHECK(to_hex(m.f4(rand)) == t.f4);
        CHECK(to_hex(m.f5(rand)) == t.f5);
        CHECK(to_hex(m.f5_star(rand)) == t.f5_star);
    }
}

TEST_CASE("smac and ek frozen values") {
    auto m = fixture::milenage1();
    CHECK(to_hex(smac(m, Sqn(1))) == "c84a4c69c0fd6775");
    CHECK(to_hex(ek(m, Sqn(1))) == "f4a7b32c82a2");
    CHECK(to_hex(smac(m, Sqn(0x123456789abc))) == "2f3898f1dbc277ac");
    CHECK(to_hex(ek(m, Sqn(0x123456789abc))) == "18500bead20e");
    CHECK(to_hex(ek_input(Sqn(1))) == "000000000001a5a5a5a5a5a5a5a5a5a5");
}

TEST_CASE("f1 avalanche on single rand bit flips") {
    Rng rng(5);
    auto m = fixture::milenage1();
    long total = 0;
    const int trials = 2000;
    for (int i = 0; i < trials; ++i) {
        Block128 rand;
        fill_random(rng, rand);
        auto base = m.f1(rand, Sqn(i + 1), kNormalAmf);
        rand[(i * 7) % 16] ^= static_cast<std::uint8_t>(1u << (i % 8));
        total += bit_distance(base, m.f1(rand, Sqn(i + 1), kNormalAmf));
    }
    double mean = double(total) / trials;
    CHECK(mean > 24.0);
    CHECK(mean < 40.0);
}

TEST_CASE("smac separates adjacent sequence numbers and the normal f1 domain") {
    Rng rng(11);
    int collisions = 0, overlaps = 0;
    for (int i = 0; i < 10000; ++i) {
        SubscriberKey k;
        fill_random(rng, k.bytes);
        Block128 opc;
        fill_random(rng, opc);
        Milenage m(k, opc);
        Sqn s(rng() & Sqn::kMax >> 1);
        if (smac(m, s) == smac(m, s.next())) ++collisions;
        if (smac(m, s) == m.f1(Block128{}, s, kNormalAmf)) ++overlaps;
    }
    CHECK(collisions == 0);
    CHECK(overlaps == 0);
}

TEST_CASE("ek is distinct across sequence numbers and conceals reversibly") {
    auto m = fixture::milenage1();
    std::set<Block48> seen;
    for (std::uint64_t s = 1; s <= 10000; ++s) seen.insert(ek(m, Sqn(s * 7919)));
    CHECK(seen.size() == 10000);

    MsinBlock msin = encode_msin("1234567890");
    auto key = ek(m, Sqn(0x123456789abc));
    CHECK(to_hex(msin ^ key) == "39136e6ddbf1");
    CHECK(((msin ^ key) ^ key) == msin);
}

TEST_CASE("sqn is 48 bits") {
    CHECK(Sqn::from_bytes(from_hex<6>("ff9bb4d0b607")).value() == 0xff9bb4d0b607ULL);
    CHECK(to_hex(Sqn(0x010203040506).to_bytes()) == "010203040506");
    CHECK_THROWS_AS(Sqn(Sqn::kMax + 1), SqnOverflow);
    CHECK_THROWS_AS(Sqn(Sqn::kMax).next(), SqnOverflow);
}

TEST_CASE("hex helpers") {
    CHECK(to_hex(from_hex<2>("aBcD")) == "abcd");
    std::array<std::uint8_t, 2> out{};
    CHECK_THROWS(from_hex("abc", out));
    CHECK_THROWS(from_hex("zz00", out));
}

TEST_CASE("aes copies are independent") {
    Aes128 a(fixture::key1().bytes);
    Aes128 b(a);
    Block128 x{};
    CHECK(a.encrypt(x) == b.encrypt(x));
}
