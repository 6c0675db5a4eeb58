#pragma once

// Big-endian byte writer/reader shared by the wire and payload codecs.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "offat/error.hpp"

namespace offat::detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void text(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

    std::vector<std::uint8_t> take() { return std::move(out_); }
    std::size_t size() const noexcept { return out_.size(); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> in, Errc on_error) : in_(in), err_(on_error) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto out = in_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    std::string text(std::size_t n) {
        auto b = bytes(n);
        return std::string(b.begin(), b.end());
    }
    template <std::size_t N>
    void fill(std::array<std::uint8_t, N>& out) {
        auto b = bytes(N);
        std::copy(b.begin(), b.end(), out.begin());
    }

    std::size_t remaining() const noexcept { return in_.size() - pos_; }
    void expect_end() const {
        if (remaining() != 0) throw Error(err_, std::to_string(remaining()) + " trailing bytes");
    }
    [[noreturn]] void fail(const std::string& why) const { throw Error(err_, why); }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw Error(err_, "truncated");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v = v << 8 | in_[pos_++];
        return v;
    }

    std::span<const std::uint8_t> in_;
    Errc err_;
    std::size_t pos_ = 0;
};

}  // namespace offat::detail
