#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mimsi {

class EncodingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidImsi : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// 15-digit subscriber identity, MCC(3) + MNC(2|3) + MSIN(10|9).
///
/// The MNC length is an operator property, so it travels with the value.
/// Equality and ordering look only at the digit string: two IMSIs from one
/// operator are equal exactly when their MSINs are.
class Imsi {
public:
    static constexpr std::size_t kDigits = 15;

    static Imsi make(std::string_view mcc, std::string_view mnc, std::string_view msin);
    static Imsi parse(std::string_view digits, std::size_t mnc_length = 2);

    std::string_view digits() const { return digits_; }
    std::string_view mcc() const { return std::string_view(digits_).substr(0, 3); }
    std::string_view mnc() const { return std::string_view(digits_).substr(3, mnc_length_); }
    std::string_view msin() const { return std::string_view(digits_).substr(3 + mnc_length_); }
    std::size_t mnc_length() const { return mnc_length_; }

    bool operator==(const Imsi& other) const { return digits_ == other.digits_; }
    std::strong_ordering operator<=>(const Imsi& other) const { return digits_ <=> other.digits_; }

private:
    Imsi(std::string digits, std::size_t mnc_length)
        : digits_(std::move(digits)), mnc_length_(mnc_length) {}

    std::string digits_;
    std::size_t mnc_length_;
};

/// Operator prefix known to the card; used to rebuild an IMSI from an MSIN.
struct OperatorPrefix {
    std::string mcc;
    std::string mnc;

    Imsi with_msin(std::string_view msin) const { return Imsi::make(mcc, mnc, msin); }
    bool operator==(const OperatorPrefix&) const = default;
};

enum class ImsiStatus { Free, InTransit, Allocated };

std::string_view to_string(ImsiStatus status);

using NetworkId = std::string;

struct Tmsi {
    std::uint32_t value = 0;
    NetworkId network;

    bool operator==(const Tmsi&) const = default;
};

using MsinBlock = std::array<std::uint8_t, 6>;

// BCD, earlier digit in the low nibble, 0xF filler up to 48 bits.
MsinBlock encode_msin(std::string_view msin);
std::string decode_msin(const MsinBlock& block);

bool is_digit_string(std::string_view s);

}  // namespace mimsi

template <>
struct std::hash<mimsi::Imsi> {
    std::size_t operator()(const mimsi::Imsi& imsi) const noexcept {
        return std::hash<std::string_view>{}(imsi.digits());
    }
};
