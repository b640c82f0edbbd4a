#include "identity.hpp"

#include <algorithm>

namespace mimsi {

bool is_digit_string(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

Imsi Imsi::make(std::string_view mcc, std::string_view mnc, std::string_view msin) {
    if (mcc.size() != 3)
        throw InvalidImsi("MCC must have 3 digits, got " + std::to_string(mcc.size()));
    if (mnc.size() != 2 && mnc.size() != 3)
        throw InvalidImsi("MNC must have 2 or 3 digits, got " + std::to_string(mnc.size()));
    if (mnc.size() + msin.size() != 12)
        throw InvalidImsi("MNC and MSIN lengths must sum to 12, got " +
                          std::to_string(mnc.size() + msin.size()));
    std::string digits;
    digits.reserve(kDigits);
    digits.append(mcc).append(mnc).append(msin);
    if (!is_digit_string(digits)) throw InvalidImsi("IMSI contains a non-digit: " + digits);
    return Imsi(std::move(digits), mnc.size());
}

Imsi Imsi::parse(std::string_view digits, std::size_t mnc_length) {
    if (digits.size() != kDigits)
        throw InvalidImsi("IMSI must have 15 digits, got " + std::to_string(digits.size()));
    if (mnc_length != 2 && mnc_length != 3)
        throw InvalidImsi("MNC length must be 2 or 3");
    return make(digits.substr(0, 3), digits.substr(3, mnc_length), digits.substr(3 + mnc_length));
}

std::string_view to_string(ImsiStatus status) {
    switch (status) {
        case ImsiStatus::Free: return "free";
        case ImsiStatus::InTransit: return "in_transit";
        case ImsiStatus::Allocated: return "allocated";
    }
    return "?";
}

MsinBlock encode_msin(std::string_view msin) {
    if (msin.size() != 9 && msin.size() != 10)
        throw EncodingError("MSIN must have 9 or 10 digits, got " + std::to_string(msin.size()));
    if (!is_digit_string(msin)) throw EncodingError("MSIN contains a non-digit");

    MsinBlock block;
    block.fill(0xFF);
    for (std::size_t i = 0; i < msin.size(); ++i) {
        auto digit = static_cast<std::uint8_t>(msin[i] - '0');
        auto& byte = block[i / 2];
        if (i % 2 == 0)
            byte = static_cast<std::uint8_t>((byte & 0xF0) | digit);
        else
            byte = static_cast<std::uint8_t>((byte & 0x0F) | (digit << 4));
    }
    return block;
}

std::string decode_msin(const MsinBlock& block) {
    std::string msin;
    msin.reserve(12);
    bool in_filler = false;
    for (std::size_t i = 0; i < block.size() * 2; ++i) {
        std::uint8_t nibble = (i % 2 == 0) ? (block[i / 2] & 0x0F) : (block[i / 2] >> 4);
        if (in_filler) {
            if (nibble != 0x0F) throw EncodingError("non-filler nibble after filler region");
            continue;
        }
        if (nibble == 0x0F) {
            in_filler = true;
        } else if (nibble > 9) {
            throw EncodingError("nibble is not a BCD digit");
        } else {
            msin.push_back(static_cast<char>('0' + nibble));
        }
    }
    if (msin.size() < 9) throw EncodingError("fewer than 9 MSIN digits");
    if (msin.size() > 10) throw EncodingError("more than 10 MSIN digits");
    return msin;
}

}  // namespace mimsi
