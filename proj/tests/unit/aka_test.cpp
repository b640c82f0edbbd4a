#include <doctest.h>

#include "fixtures.hpp"

using namespace mimsi;

namespace {

AucCredentials creds(std::uint64_t sqn = 32) { return {fixture::milenage1(), Sqn(sqn), kNormalAmf}; }

Sqn recovered_sqn(const Milenage& m, const AuthVector& v) {
    return Sqn::from_bytes(v.autn.sqn_xor_ak ^ m.f5(v.rand));
}

}  // namespace

TEST_CASE("plain vectors advance the sequence number by one") {
    auto c = creds();
    Rng rng(1);
    auto m = fixture::milenage1();
    auto v1 = generate_vector_plain(c, rng);
    auto v2 = generate_vector_plain(c, rng);
    CHECK(recovered_sqn(m, v1).value() == 33);
    CHECK(recovered_sqn(m, v2).value() == 34);
    CHECK(c.sqn.value() == 34);
    CHECK(v1.kind == RandKind::Plain);
    CHECK(v1.xres == m.f2(v1.rand));
    CHECK(v1.autn.mac == m.f1(v1.rand, Sqn(33), kNormalAmf));
}

TEST_CASE("autn byte layout round trips") {
    auto c = creds();
    Rng rng(2);
    auto v = generate_vector_plain(c, rng);
    auto bytes = v.autn.to_bytes();
    CHECK(Autn::from_bytes(bytes) == v.autn);
    CHECK(bytes[6] == 0x00);
    CHECK(bytes[7] == 0x00);
}

TEST_CASE("a synchronized card accepts and rejects the replay") {
    auto c = creds();
    Rng rng(3);
    auto m = fixture::milenage1();
    Sqn stored(32);
    auto v = generate_vector_plain(c, rng);
    auto first = verify_on_usim(m, stored, v.rand, v.autn);
    REQUIRE(std::holds_alternative<Accepted>(first));
    CHECK(std::get<Accepted>(first).res == v.xres);
    CHECK(std::get<Accepted>(first).ck == v.ck);
    CHECK(stored.value() == 33);

    auto again = verify_on_usim(m, stored, v.rand, v.autn);
    REQUIRE(std::holds_alternative<SqnStale>(again));
    CHECK(std::get<SqnStale>(again).received.value() == 33);
    CHECK(stored.value() == 33);
}

TEST_CASE("mac is checked before freshness") {
    auto c = creds();
    Rng rng(4);
    auto m = fixture::milenage1();
    auto v = generate_vector_plain(c, rng);
    Sqn stored(1000);
    auto tampered = v.autn;
    tampered.mac[0] ^= 1;
    CHECK(std::holds_alternative<MacFailure>(verify_on_usim(m, stored, v.rand, tampered)));
    CHECK(std::holds_alternative<SqnStale>(verify_on_usim(m, stored, v.rand, v.autn)));
    CHECK(stored.value() == 1000);
}

TEST_CASE("signal b layout and detection") {
    auto c = creds();
    Rng rng(5);
    auto m = fixture::milenage1();
    auto v = generate_vector_signal_b(c, rng);
    CHECK(v.kind == RandKind::SignalB);
    Sqn sqn = recovered_sqn(m, v);
    CHECK(smac_field(v.rand) == smac(m, sqn));

    Sqn stored(32);
    auto outcome = verify_on_usim(m, stored, v.rand, v.autn);
    REQUIRE(std::holds_alternative<Accepted>(outcome));
    auto sig = detect_signal(m, Scheme::B, fixture::prefix(), fixture::imsi(1), v.rand, sqn);
    CHECK(std::holds_alternative<ChangeB>(sig));
    // Scheme A cards never look.
    CHECK(std::holds_alternative<NoSignal>(detect_signal(m, Scheme::A, fixture::prefix(), fixture::imsi(1), v.rand, sqn)));
}

TEST_CASE("signal c carries the concealed new imsi") {
    auto c = creds();
    Rng rng(6);
    auto m = fixture::milenage1();
    auto target = fixture::imsi(1234567890);
    auto v = generate_vector_signal_c(c, target, rng);
    CHECK(v.kind == RandKind::SignalC);
    Sqn sqn = recovered_sqn(m, v);
    CHECK(concealed_msin_field(v.rand) == (encode_msin(target.msin()) ^ ek(m, sqn)));
    CHECK(smac_field(v.rand) == smac(m, sqn));

    auto sig = detect_signal(m, Scheme::C, fixture::prefix(), fixture::imsi(1), v.rand, sqn);
    REQUIRE(std::holds_alternative<ChangeC>(sig));
    CHECK(std::get<ChangeC>(sig).new_imsi == target);

    // Already on the target: nothing to do.
    CHECK(std::holds_alternative<NoSignal>(detect_signal(m, Scheme::C, fixture::prefix(), target, v.rand, sqn)));
}

TEST_CASE("tampering with the concealed field breaks the mac") {
    auto c = creds();
    Rng rng(7);
    auto m = fixture::milenage1();
    auto v = generate_vector_signal_c(c, fixture::imsi(77), rng);
    for (int bit = 0; bit < 48; ++bit) {
        auto rand = v.rand;
        rand[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        Sqn stored(32);
        CHECK(std::holds_alternative<MacFailure>(verify_on_usim(m, stored, rand, v.autn)));
    }
}

TEST_CASE("plain vectors raise no signal") {
    auto c = creds();
    Rng rng(8);
    auto m = fixture::milenage1();
    Sqn stored(32);
    int detections = 0;
    for (int i = 0; i < 20000; ++i) {
        auto v = generate_vector_plain(c, rng);
        auto outcome = verify_on_usim(m, stored, v.rand, v.autn);
        REQUIRE(std::holds_alternative<Accepted>(outcome));
        Sqn s = std::get<Accepted>(outcome).received_sqn;
        for (auto scheme : {Scheme::B, Scheme::C})
            if (!std::holds_alternative<NoSignal>(detect_signal(m, scheme, fixture::prefix(), fixture::imsi(1), v.rand, s)))
                ++detections;
    }
    CHECK(detections == 0);
}

TEST_CASE("random challenges are refused") {
    auto m = fixture::milenage1();
    Rng rng(9);
    Sqn stored(32);
    int accepted = 0;
    for (int i = 0; i < 20000; ++i) {
        Block128 rand, autn;
        fill_random(rng, rand);
        fill_random(rng, autn);
        if (std::holds_alternative<Accepted>(verify_on_usim(m, stored, rand, Autn::from_bytes(autn)))) ++accepted;
    }
    CHECK(accepted == 0);
    CHECK(stored.value() == 32);
}

TEST_CASE("the reserved amf is refused for normal vectors") {
    AucCredentials c{fixture::milenage1(), Sqn(1), kSmacAmf};
    Rng rng(10);
    CHECK_THROWS(generate_vector_plain(c, rng));
}

TEST_CASE("sqn exhaustion is a hard error") {
    auto c = creds(Sqn::kMax);
    Rng rng(11);
    CHECK_THROWS_AS(generate_vector_plain(c, rng), SqnOverflow);
}

TEST_CASE("scheme names") {
    CHECK(parse_scheme("A") == Scheme::A);
    CHECK(to_string(Scheme::C) == "C");
    CHECK_THROWS(parse_scheme("D"));
}
