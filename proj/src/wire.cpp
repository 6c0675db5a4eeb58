#include "offat/wire.hpp"

#include "bytes.hpp"
#include "offat/error.hpp"
#include "offat/profile.hpp"

namespace offat {
namespace {

void put_ssid(detail::ByteWriter& w, const std::string& ssid) {
    if (ssid.size() > kSsidMaxBytes) throw Error(Errc::MalformedFrame, "ssid longer than 32 bytes");
    w.u8(static_cast<std::uint8_t>(ssid.size()));
    w.text(ssid);
}

std::string get_ssid(detail::ByteReader& r) {
    auto n = r.u8();
    if (n > kSsidMaxBytes) r.fail("ssid_len > 32");
    return r.text(n);
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

FrameType frame_type(const WireFrame& frame) noexcept { return static_cast<FrameType>(frame.index()); }

const char* frame_type_name(FrameType type) noexcept {
    switch (type) {
        case FrameType::Beacon: return "beacon";
        case FrameType::Probe: return "probe";
        case FrameType::Invite: return "invite";
        case FrameType::InviteResponse: return "invite_response";
        case FrameType::GroupSealed: return "group_sealed";
    }
    return "?";
}

std::vector<std::uint8_t> encode_frame(const WireFrame& frame) {
    detail::ByteWriter w;
    w.bytes(kWireMagic);
    w.u8(kWireVersion);
    w.u8(static_cast<std::uint8_t>(frame_type(frame)));
    std::visit(overloaded{
                   [&](const BeaconFrame& f) {
                       w.bytes(f.device.bytes);
                       put_ssid(w, f.ssid);
                       w.u8(f.listen_channel);
                   },
                   [&](const ProbeFrame& f) {
                       w.bytes(f.device.bytes);
                       w.u8(f.channel);
                       put_ssid(w, f.ssid);
                   },
                   [&](const InviteFrame& f) {
                       w.bytes(f.invitation.bytes);
                       w.bytes(f.from.bytes);
                       w.u8(f.go_intent);
                       put_ssid(w, f.ssid);
                   },
                   [&](const InviteResponseFrame& f) {
                       w.bytes(f.invitation.bytes);
                       w.u8(f.accept ? 1 : 0);
                       w.u8(f.go_intent);
                       if (f.credentials) {
                           w.bytes(f.credentials->psk.bytes);
                           w.u8(f.credentials->group_address);
                       }
                   },
                   [&](const SealedFrame& f) {
                       w.bytes(f.header.sender.bytes);
                       w.u64(f.header.seq);
                       w.u8(f.header.kind);
                       w.bytes(f.nonce);
                       w.u32(static_cast<std::uint32_t>(f.ciphertext.size()));
                       w.bytes(f.ciphertext);
                   },
               },
               frame);
    return w.take();
}

WireFrame decode_frame(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, Errc::MalformedFrame);
    std::array<std::uint8_t, 4> magic{};
    r.fill(magic);
    if (magic != kWireMagic) r.fail("bad magic");
    if (r.u8() != kWireVersion) r.fail("unsupported version");
    const auto type = r.u8();
    WireFrame out;
    switch (static_cast<FrameType>(type)) {
        case FrameType::Beacon: {
            BeaconFrame f;
            r.fill(f.device.bytes);
            f.ssid = get_ssid(r);
            f.listen_channel = r.u8();
            out = std::move(f);
            break;
        }
        case FrameType::Probe: {
            ProbeFrame f;
            r.fill(f.device.bytes);
            f.channel = r.u8();
            f.ssid = get_ssid(r);
            out = std::move(f);
            break;
        }
        case FrameType::Invite: {
            InviteFrame f;
            r.fill(f.invitation.bytes);
            r.fill(f.from.bytes);
            f.go_intent = r.u8();
            f.ssid = get_ssid(r);
            out = std::move(f);
            break;
        }
        case FrameType::InviteResponse: {
            InviteResponseFrame f;
            r.fill(f.invitation.bytes);
            auto accept = r.u8();
            if (accept > 1) r.fail("accept flag must be 0 or 1");
            f.accept = accept == 1;
            f.go_intent = r.u8();
            if (r.remaining() != 0) {
                if (!f.accept) r.fail("credentials on a decline");
                GroupCredentials c;
                r.fill(c.psk.bytes);
                c.group_address = r.u8();
                f.credentials = c;
            }
            out = std::move(f);
            break;
        }
        case FrameType::GroupSealed: {
            SealedFrame f;
            r.fill(f.header.sender.bytes);
            f.header.seq = r.u64();
            f.header.kind = r.u8();
            r.fill(f.nonce);
            auto len = r.u32();
            if (len < kTagBytes) r.fail("ciphertext shorter than its tag");
            if (len != r.remaining()) r.fail("ct_len does not match frame size");
            auto ct = r.bytes(len);
            f.ciphertext.assign(ct.begin(), ct.end());
            out = std::move(f);
            break;
        }
        default:
            r.fail("unknown frame type " + std::to_string(type));
    }
    r.expect_end();
    return out;
}

}  // namespace offat
