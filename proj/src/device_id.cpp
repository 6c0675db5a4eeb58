#include "offat/device_id.hpp"

#include <openssl/sha.h>

#include "offat/error.hpp"
#include "offat/rng.hpp"

namespace offat {
namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

template <typename Tag>
std::string Id16<Tag>::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

template <typename Tag>
Id16<Tag> Id16<Tag>::from_hex(std::string_view text) {
    if (text.size() != 32) throw Error(Errc::InvalidArgument, "id must be 32 hex digits");
    Id16 id;
    for (std::size_t i = 0; i < 16; ++i) {
        int hi = hex_value(text[2 * i]);
        int lo = hex_value(text[2 * i + 1]);
        if (hi < 0 || lo < 0) throw Error(Errc::InvalidArgument, "id is not hexadecimal");
        id.bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return id;
}

template <typename Tag>
Id16<Tag> Id16<Tag>::random(Rng& rng) {
    Id16 id;
    rng.fill(id.bytes);
    return id;
}

template struct Id16<DeviceTag>;
template struct Id16<InvitationTag>;

DeviceId device_id_from_label(std::string_view label) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(label.data()), label.size(), digest);
    DeviceId id;
    std::copy_n(digest, id.bytes.size(), id.bytes.begin());
    return id;
}

}  // namespace offat
