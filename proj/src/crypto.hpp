#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mimsi {

using Block128 = std::array<std::uint8_t, 16>;
using Block64 = std::array<std::uint8_t, 8>;
using Block48 = std::array<std::uint8_t, 6>;

std::string to_hex(std::span<const std::uint8_t> bytes);
void from_hex(std::string_view hex, std::span<std::uint8_t> out);

template <std::size_t N>
std::array<std::uint8_t, N> from_hex(std::string_view hex) {
    std::array<std::uint8_t, N> out{};
    from_hex(hex, out);
    return out;
}

template <std::size_t N>
std::array<std::uint8_t, N> operator^(const std::array<std::uint8_t, N>& a,
                                      const std::array<std::uint8_t, N>& b) {
    std::array<std::uint8_t, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i] ^ b[i];
    return out;
}

struct SubscriberKey {
    Block128 bytes{};
    bool operator==(const SubscriberKey&) const = default;
};

class SqnOverflow : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// 48-bit sequence number.
class Sqn {
public:
    static constexpr std::uint64_t kMax = (std::uint64_t{1} << 48) - 1;

    constexpr Sqn() = default;
    explicit Sqn(std::uint64_t value);

    static Sqn from_bytes(const Block48& bytes);
    Block48 to_bytes() const;
    std::uint64_t value() const { return value_; }
    Sqn next() const;

    auto operator<=>(const Sqn&) const = default;

private:
    std::uint64_t value_ = 0;
};

struct Amf {
    std::uint16_t value = 0;
    std::array<std::uint8_t, 2> to_bytes() const {
        return {static_cast<std::uint8_t>(value >> 8), static_cast<std::uint8_t>(value)};
    }
    bool operator==(const Amf&) const = default;
};

inline constexpr Amf kNormalAmf{0x0000};
inline constexpr Amf kSmacAmf{0xFFFF};
inline constexpr std::uint8_t kEkPadByte = 0xA5;

/// AES-128 block encryption under a fixed key (OpenSSL EVP, ECB, one block
/// at a time). Copies re-key a fresh context. A single instance is not safe
/// to use from two threads at once.
class Aes128 {
public:
    explicit Aes128(const Block128& key);
    Aes128(const Aes128& other);
    Aes128& operator=(const Aes128& other);
    Aes128(Aes128&&) noexcept = default;
    Aes128& operator=(Aes128&&) noexcept = default;
    ~Aes128();

    Block128 encrypt(const Block128& block) const;

private:
    struct CtxDeleter {
        void operator()(void* ctx) const;
    };
    Block128 key_;
    std::unique_ptr<void, CtxDeleter> ctx_;
};

Block128 derive_opc(const SubscriberKey& key, const Block128& op);

/// The MILENAGE f1..f5 / f1* / f5* functions for one (K, OPc) pair.
class Milenage {
public:
    struct F2345 {
        Block64 res;
        Block128 ck;
        Block128 ik;
        Block48 ak;
    };

    Milenage(const SubscriberKey& key, const Block128& opc);

    Block64 f1(const Block128& rand, Sqn sqn, Amf amf) const;
    Block64 f1_star(const Block128& rand, Sqn sqn, Amf amf) const;
    F2345 f2345(const Block128& rand) const;
    Block64 f2(const Block128& rand) const { return f2345(rand).res; }
    Block128 f3(const Block128& rand) const;
    Block128 f4(const Block128& rand) const;
    Block48 f5(const Block128& rand) const;
    Block48 f5_star(const Block128& rand) const;

    const Block128& opc() const { return opc_; }

private:
    Block128 temp(const Block128& rand) const;
    Block128 out1(const Block128& rand, Sqn sqn, Amf amf) const;
    Block128 out_n(const Block128& temp, unsigned rotate_bytes, std::uint8_t constant) const;

    Aes128 aes_;
    Block128 opc_;
};

/// Sequence MAC: f1 keyed by K over the all-zero RAND with the reserved AMF.
Block64 smac(const Milenage& milenage, Sqn sqn);

/// 48-bit concealment key: f5 over SQN padded with a fixed constant.
Block48 ek(const Milenage& milenage, Sqn sqn);

Block128 ek_input(Sqn sqn);

}  // namespace mimsi
