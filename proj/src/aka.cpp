#include "aka.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mimsi {

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::A: return "A";
        case Scheme::B: return "B";
        case Scheme::C: return "C";
    }
    return "?";
}

Scheme parse_scheme(std::string_view text) {
    if (text == "A" || text == "a") return Scheme::A;
    if (text == "B" || text == "b") return Scheme::B;
    if (text == "C" || text == "c") return Scheme::C;
    throw std::invalid_argument("unknown scheme '" + std::string(text) + "' (expected A, B or C)");
}

std::string_view to_string(RandKind kind) {
    switch (kind) {
        case RandKind::Plain: return "plain";
        case RandKind::SignalB: return "signal_b";
        case RandKind::SignalC: return "signal_c";
    }
    return "?";
}

Block128 Autn::to_bytes() const {
    Block128 out;
    auto amf_bytes = amf.to_bytes();
    std::copy(sqn_xor_ak.begin(), sqn_xor_ak.end(), out.begin());
    std::copy(amf_bytes.begin(), amf_bytes.end(), out.begin() + 6);
    std::copy(mac.begin(), mac.end(), out.begin() + 8);
    return out;
}

Autn Autn::from_bytes(const Block128& bytes) {
    Autn a;
    std::copy_n(bytes.begin(), 6, a.sqn_xor_ak.begin());
    a.amf.value = static_cast<std::uint16_t>((bytes[6] << 8) | bytes[7]);
    std::copy_n(bytes.begin() + 8, 8, a.mac.begin());
    return a;
}

Block128 compose_signal_b(const Block64& r, const Block64& smac) {
    Block128 rand;
    std::copy(r.begin(), r.end(), rand.begin());
    std::copy(smac.begin(), smac.end(), rand.begin() + 8);
    return rand;
}

Block128 compose_signal_c(const MsinBlock& concealed_msin, std::uint16_t r, const Block64& smac) {
    Block128 rand;
    std::copy(concealed_msin.begin(), concealed_msin.end(), rand.begin());
    rand[6] = static_cast<std::uint8_t>(r >> 8);
    rand[7] = static_cast<std::uint8_t>(r);
    std::copy(smac.begin(), smac.end(), rand.begin() + 8);
    return rand;
}

Block64 smac_field(const Block128& rand) {
    Block64 out;
    std::copy_n(rand.begin() + 8, 8, out.begin());
    return out;
}

MsinBlock concealed_msin_field(const Block128& rand) {
    MsinBlock out;
    std::copy_n(rand.begin(), 6, out.begin());
    return out;
}

namespace {

bool all_zero(const Block128& b) {
    return std::all_of(b.begin(), b.end(), [](std::uint8_t x) { return x == 0; });
}

AuthVector build_vector(const AucCredentials& creds, const Block128& rand, Sqn sqn, RandKind kind) {
    if (creds.amf == kSmacAmf) throw std::logic_error("AMF 0xFFFF is reserved for SMAC");
    auto f = creds.milenage.f2345(rand);
    AuthVector v;
    v.rand = rand;
    v.xres = f.res;
    v.ck = f.ck;
    v.ik = f.ik;
    v.autn.sqn_xor_ak = sqn.to_bytes() ^ f.ak;
    v.autn.amf = creds.amf;
    v.autn.mac = creds.milenage.f1(rand, sqn, creds.amf);
    v.kind = kind;
    return v;
}

}  // namespace

AuthVector generate_vector_plain(AucCredentials& creds, Rng& rng) {
    Sqn sqn = creds.sqn.next();
    Block128 rand;
    do {
        fill_random(rng, rand);
    } while (all_zero(rand));
    auto v = build_vector(creds, rand, sqn, RandKind::Plain);
    creds.sqn = sqn;
    return v;
}

AuthVector generate_vector_signal_b(AucCredentials& creds, Rng& rng) {
    Sqn sqn = creds.sqn.next();
    auto mac = smac(creds.milenage, sqn);
    Block64 r;
    fill_random(rng, r);
    auto v = build_vector(creds, compose_signal_b(r, mac), sqn, RandKind::SignalB);
    creds.sqn = sqn;
    return v;
}

AuthVector generate_vector_signal_c(AucCredentials& creds, const Imsi& new_imsi, Rng& rng) {
    Sqn sqn = creds.sqn.next();
    auto concealed = encode_msin(new_imsi.msin()) ^ ek(creds.milenage, sqn);
    auto mac = smac(creds.milenage, sqn);
    std::array<std::uint8_t, 2> r;
    fill_random(rng, r);
    auto rand = compose_signal_c(concealed, static_cast<std::uint16_t>((r[0] << 8) | r[1]), mac);
    auto v = build_vector(creds, rand, sqn, RandKind::SignalC);
    creds.sqn = sqn;
    return v;
}

std::string_view outcome_name(const AkaOutcome& outcome) {
    if (std::holds_alternative<Accepted>(outcome)) return "accepted";
    if (std::holds_alternative<MacFailure>(outcome)) return "mac_failure";
    return "sqn_stale";
}

AkaOutcome verify_on_usim(const Milenage& milenage, Sqn& stored_sqn, const Block128& rand,
                          const Autn& autn) {
    auto f = milenage.f2345(rand);
    Sqn received = Sqn::from_bytes(autn.sqn_xor_ak ^ f.ak);
    if (milenage.f1(rand, received, autn.amf) != autn.mac) return MacFailure{};
    if (!(received > stored_sqn)) return SqnStale{received, stored_sqn};
    stored_sqn = received;
    return Accepted{f.res, f.ck, f.ik, received};
}

SignalResult detect_signal(const Milenage& milenage, Scheme scheme, const OperatorPrefix& prefix,
                           const Imsi& current_imsi, const Block128& rand, Sqn received_sqn) {
    if (scheme == Scheme::A) return NoSignal{};
    if (smac_field(rand) != smac(milenage, received_sqn)) return NoSignal{};
    if (scheme == Scheme::B) return ChangeB{};

    auto block = concealed_msin_field(rand) ^ ek(milenage, received_sqn);
    try {
        auto imsi = prefix.with_msin(decode_msin(block));
        if (imsi == current_imsi) return NoSignal{};
        return ChangeC{std::move(imsi)};
    } catch (const EncodingError&) {
        return NoSignal{true};
    } catch (const InvalidImsi&) {
        return NoSignal{true};
    }
}

}  // namespace mimsi
