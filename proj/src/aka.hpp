#pragma once

#include <optional>
#include <string_view>
#include <variant>

#include "crypto.hpp"
#include "identity.hpp"
#include "random.hpp"

namespace mimsi {

enum class Scheme { A, B, C };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);

struct Autn {
    Block48 sqn_xor_ak{};
    Amf amf{};
    Block64 mac{};

    Block128 to_bytes() const;
    static Autn from_bytes(const Block128& bytes);
    bool operator==(const Autn&) const = default;
};

/// How the AuC built a RAND. Home-network bookkeeping only; nothing on the
/// air interface carries it.
enum class RandKind { Plain, SignalB, SignalC };

std::string_view to_string(RandKind kind);

struct AuthVector {
    Block128 rand{};
    Block64 xres{};
    Block128 ck{};
    Block128 ik{};
    Autn autn{};
    RandKind kind = RandKind::Plain;
};

// RAND layouts, first-listed field at byte 0:
//   signal B: r(8) | smac(8)
//   signal C: concealed msin(6) | r(2) | smac(8)
Block128 compose_signal_b(const Block64& r, const Block64& smac);
Block128 compose_signal_c(const MsinBlock& concealed_msin, std::uint16_t r, const Block64& smac);
Block64 smac_field(const Block128& rand);
MsinBlock concealed_msin_field(const Block128& rand);

/// The AuC's per-subscriber cryptographic state.
struct AucCredentials {
    Milenage milenage;
    Sqn sqn;
    Amf amf = kNormalAmf;
};

AuthVector generate_vector_plain(AucCredentials& creds, Rng& rng);
AuthVector generate_vector_signal_b(AucCredentials& creds, Rng& rng);
AuthVector generate_vector_signal_c(AucCredentials& creds, const Imsi& new_imsi, Rng& rng);

struct Accepted {
    Block64 res{};
    Block128 ck{};
    Block128 ik{};
    Sqn received_sqn;
};
struct MacFailure {};
struct SqnStale {
    Sqn received;
    Sqn stored;
};

using AkaOutcome = std::variant<Accepted, MacFailure, SqnStale>;

std::string_view outcome_name(const AkaOutcome& outcome);

/// Card-side AKA check. `stored_sqn` is advanced only on acceptance.
AkaOutcome verify_on_usim(const Milenage& milenage, Sqn& stored_sqn, const Block128& rand,
                          const Autn& autn);

struct NoSignal {
    bool decode_failed = false;
};
struct ChangeB {};
struct ChangeC {
    Imsi new_imsi;
};

using SignalResult = std::variant<NoSignal, ChangeB, ChangeC>;

/// Run after an accepted AKA. Scheme A cards never look for a signal.
SignalResult detect_signal(const Milenage& milenage, Scheme scheme, const OperatorPrefix& prefix,
                           const Imsi& current_imsi, const Block128& rand, Sqn received_sqn);

}  // namespace mimsi
