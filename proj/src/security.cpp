#include "offat/security.hpp"

#include <limits>
#include <memory>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include "offat/error.hpp"
#include "offat/rng.hpp"

namespace offat {
namespace {

struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const noexcept { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;

CipherCtx make_ctx() {
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw std::bad_alloc();
    return ctx;
}

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string GroupKey::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

GroupKey GroupKey::generate(Rng& rng) {
    GroupKey key;
    rng.fill(key.bytes);
    return key;
}

GroupKey parse_psk(std::string_view hex) {
    if (hex.size() != 64) throw Error(Errc::BadLength, std::to_string(hex.size()) + " digits, need 64");
    GroupKey key;
    for (std::size_t i = 0; i < 32; ++i) {
        int hi = hex_digit(hex[2 * i]);
        int lo = hex_digit(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw Error(Errc::BadDigit, "non-hex digit near offset " + std::to_string(2 * i));
        key.bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return key;
}

std::array<std::uint8_t, 25> SealedHeader::aad() const {
    std::array<std::uint8_t, 25> out{};
    std::copy(sender.bytes.begin(), sender.bytes.end(), out.begin());
    for (int i = 0; i < 8; ++i) out[16 + i] = static_cast<std::uint8_t>(seq >> (56 - 8 * i));
    out[24] = kind;
    return out;
}

NonceState::NonceState(const DeviceId& sender) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(sender.bytes.data(), sender.bytes.size(), digest);
    std::copy_n(digest, prefix_.size(), prefix_.begin());
}

std::array<std::uint8_t, kNonceBytes> NonceState::next() {
    if (counter_ == std::numeric_limits<std::uint64_t>::max()) throw Error(Errc::NonceExhausted);
    ++counter_;
    std::array<std::uint8_t, kNonceBytes> nonce{};
    std::copy(prefix_.begin(), prefix_.end(), nonce.begin());
    for (int i = 0; i < 8; ++i) nonce[4 + i] = static_cast<std::uint8_t>(counter_ >> (56 - 8 * i));
    return nonce;
}

SealedFrame seal(const GroupKey& key, const SealedHeader& header, std::span<const std::uint8_t> plaintext,
                 NonceState& nonce_state) {
    SealedFrame out;
    out.header = header;
    out.nonce = nonce_state.next();
    out.ciphertext.resize(plaintext.size() + kTagBytes);
    const auto aad = header.aad();

    auto ctx = make_ctx();
    int len = 0;
    bool ok = EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) == 1 &&
              EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.bytes.data(), out.nonce.data()) == 1 &&
              EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1 &&
              EVP_EncryptUpdate(ctx.get(), out.ciphertext.data(), &len, plaintext.data(),
                                static_cast<int>(plaintext.size())) == 1 &&
              EVP_EncryptFinal_ex(ctx.get(), out.ciphertext.data() + len, &len) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagBytes,
                                  out.ciphertext.data() + plaintext.size()) == 1;
    if (!ok) throw std::runtime_error("AES-GCM encryption failed");
    return out;
}

std::pair<SealedHeader, std::vector<std::uint8_t>> open(const GroupKey& key, const SealedFrame& sealed) {
    if (sealed.ciphertext.size() < kTagBytes) throw Error(Errc::AuthenticationFailure, "short ciphertext");
    const std::size_t body = sealed.ciphertext.size() - kTagBytes;
    std::vector<std::uint8_t> plaintext(body);
    std::array<std::uint8_t, kTagBytes> tag{};
    std::copy(sealed.ciphertext.end() - kTagBytes, sealed.ciphertext.end(), tag.begin());
    const auto aad = sealed.header.aad();

    auto ctx = make_ctx();
    int len = 0;
    bool ok = EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) == 1 &&
              EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.bytes.data(), sealed.nonce.data()) == 1 &&
              EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1 &&
              EVP_DecryptUpdate(ctx.get(), plaintext.data(), &len, sealed.ciphertext.data(),
                                static_cast<int>(body)) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagBytes, tag.data()) == 1 &&
              EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + len, &len) == 1;
    if (!ok) throw Error(Errc::AuthenticationFailure);
    return {sealed.header, std::move(plaintext)};
}

}  // namespace offat
