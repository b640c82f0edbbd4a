#pragma once

#include <string>
#include <vector>

#include "aka.hpp"
#include "home_network.hpp"
#include "usim.hpp"

namespace fixture {

using namespace mimsi;

// MILENAGE test set 1 key material.
inline SubscriberKey key1() { return {from_hex<16>("465b5ce8b199b49faa5f0a2ee238a6bc")}; }
inline Block128 opc1() { return from_hex<16>("cd63cb71954a9f4e48a5994e37a02baf"); }

inline const OperatorPrefix& prefix() {
    static const OperatorPrefix p{"001", "01"};
    return p;
}

inline Imsi imsi(std::uint64_t msin) {
    std::string digits = std::to_string(msin);
    return prefix().with_msin(std::string(10 - digits.size(), '0') + digits);
}

inline std::vector<Imsi> imsis(std::uint64_t first, std::size_t count) {
    std::vector<Imsi> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(imsi(first + i));
    return out;
}

inline Milenage milenage1() { return Milenage(key1(), opc1()); }

inline Provisioning provisioning(const std::string& account, Scheme scheme, std::uint64_t msin) {
    Provisioning p{account, key1(), opc1(), kNormalAmf, Sqn(32), scheme, imsi(msin), {}};
    if (scheme != Scheme::C) p.predefined = imsis(msin, 3);
    return p;
}

inline UsimPersonalization card(Scheme scheme, std::uint64_t msin, std::uint32_t threshold = 0) {
    UsimPersonalization u{key1(), opc1(), Sqn(32), scheme, imsi(msin), {}, SelectionMode::Cyclic, 0, threshold,
                          prefix()};
    if (scheme != Scheme::C) u.predefined = imsis(msin, 3);
    return u;
}

}  // namespace fixture
