#include "crypto.hpp"

#include <openssl/evp.h>

#include <algorithm>

namespace mimsi {

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

EVP_CIPHER_CTX* make_ctx(const Block128& key) {
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (ctx == nullptr) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
    if (EVP_EncryptInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.data(), nullptr) != 1) {
        EVP_CIPHER_CTX_free(ctx);
        throw std::runtime_error("AES-128 key setup failed");
    }
    EVP_CIPHER_CTX_set_padding(ctx, 0);
    return ctx;
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0F]);
    }
    return out;
}

void from_hex(std::string_view hex, std::span<std::uint8_t> out) {
    if (hex.size() != out.size() * 2)
        throw std::invalid_argument("expected " + std::to_string(out.size() * 2) +
                                    " hex digits, got " + std::to_string(hex.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
}

Sqn::Sqn(std::uint64_t value) : value_(value) {
    if (value > kMax) throw SqnOverflow("SQN exceeds 48 bits");
}

Sqn Sqn::from_bytes(const Block48& bytes) {
    std::uint64_t v = 0;
    for (auto b : bytes) v = (v << 8) | b;
    return Sqn(v);
}

Block48 Sqn::to_bytes() const {
    Block48 out;
    for (int i = 5; i >= 0; --i) out[static_cast<std::size_t>(5 - i)] = static_cast<std::uint8_t>(value_ >> (8 * i));
    return out;
}

Sqn Sqn::next() const {
    if (value_ == kMax) throw SqnOverflow("SQN would wrap past 2^48 - 1");
    return Sqn(value_ + 1);
}

void Aes128::CtxDeleter::operator()(void* ctx) const {
    EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx));
}

Aes128::Aes128(const Block128& key) : key_(key), ctx_(make_ctx(key)) {}

Aes128::Aes128(const Aes128& other) : key_(other.key_), ctx_(make_ctx(other.key_)) {}

Aes128& Aes128::operator=(const Aes128& other) {
    if (this != &other) {
        ctx_.reset(make_ctx(other.key_));
        key_ = other.key_;
    }
    return *this;
}

Aes128::~Aes128() = default;

Block128 Aes128::encrypt(const Block128& block) const {
    Block128 out;
    int len = 0;
    auto* ctx = static_cast<EVP_CIPHER_CTX*>(ctx_.get());
    if (EVP_EncryptUpdate(ctx, out.data(), &len, block.data(), static_cast<int>(block.size())) != 1 ||
        len != 16)
        throw std::runtime_error("AES-128 encryption failed");
    return out;
}

Block128 derive_opc(const SubscriberKey& key, const Block128& op) {
    return Aes128(key.bytes).encrypt(op) ^ op;
}

Milenage::Milenage(const SubscriberKey& key, const Block128& opc) : aes_(key.bytes), opc_(opc) {}

Block128 Milenage::temp(const Block128& rand) const { return aes_.encrypt(rand ^ opc_); }

Block128 Milenage::out1(const Block128& rand, Sqn sqn, Amf amf) const {
    auto sqn_bytes = sqn.to_bytes();
    auto amf_bytes = amf.to_bytes();
    Block128 in1;
    for (std::size_t i = 0; i < 6; ++i) in1[i] = in1[i + 8] = sqn_bytes[i];
    for (std::size_t i = 0; i < 2; ++i) in1[i + 6] = in1[i + 14] = amf_bytes[i];

    // r1 = 64 bits, c1 = 0
    Block128 input;
    for (std::size_t i = 0; i < 16; ++i) input[(i + 8) % 16] = in1[i] ^ opc_[i];
    return aes_.encrypt(input ^ temp(rand)) ^ opc_;
}

Block128 Milenage::out_n(const Block128& t, unsigned rotate_bytes, std::uint8_t constant) const {
    Block128 input;
    for (std::size_t i = 0; i < 16; ++i) input[(i + 16 - rotate_bytes) % 16] = t[i] ^ opc_[i];
    input[15] ^= constant;
    return aes_.encrypt(input) ^ opc_;
}

Block64 Milenage::f1(const Block128& rand, Sqn sqn, Amf amf) const {
    auto out = out1(rand, sqn, amf);
    Block64 mac;
    std::copy_n(out.begin(), 8, mac.begin());
    return mac;
}

Block64 Milenage::f1_star(const Block128& rand, Sqn sqn, Amf amf) const {
    auto out = out1(rand, sqn, amf);
    Block64 mac;
    std::copy_n(out.begin() + 8, 8, mac.begin());
    return mac;
}

Milenage::F2345 Milenage::f2345(const Block128& rand) const {
    auto t = temp(rand);
    F2345 r;
    auto out2 = out_n(t, 0, 1);
    std::copy_n(out2.begin() + 8, 8, r.res.begin());
    std::copy_n(out2.begin(), 6, r.ak.begin());
    r.ck = out_n(t, 4, 2);
    r.ik = out_n(t, 8, 4);
    return r;
}

Block128 Milenage::f3(const Block128& rand) const { return out_n(temp(rand), 4, 2); }

Block128 Milenage::f4(const Block128& rand) const { return out_n(temp(rand), 8, 4); }

Block48 Milenage::f5(const Block128& rand) const {
    auto out2 = out_n(temp(rand), 0, 1);
    Block48 ak;
    std::copy_n(out2.begin(), 6, ak.begin());
    return ak;
}

Block48 Milenage::f5_star(const Block128& rand) const {
    auto out5 = out_n(temp(rand), 12, 8);
    Block48 ak;
    std::copy_n(out5.begin(), 6, ak.begin());
    return ak;
}

Block64 smac(const Milenage& milenage, Sqn sqn) {
    return milenage.f1(Block128{}, sqn, kSmacAmf);
}

Block128 ek_input(Sqn sqn) {
    Block128 input;
    input.fill(kEkPadByte);
    auto bytes = sqn.to_bytes();
    std::copy(bytes.begin(), bytes.end(), input.begin());
    return input;
}

Block48 ek(const Milenage& milenage, Sqn sqn) { return milenage.f5(ek_input(sqn)); }

}  // namespace mimsi
