#include "offat/messaging.hpp"

#include <algorithm>
#include <cmath>

#include "bytes.hpp"
#include "offat/error.hpp"

namespace offat {
namespace {

constexpr double kInkScale = 65535.0;

std::uint16_t to_fixed(double v) { return static_cast<std::uint16_t>(std::lround(v * kInkScale)); }

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        int extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xe0) == 0xc0) {
            extra = 1, cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            extra = 2, cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            extra = 3, cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) return false;
        for (int k = 1; k <= extra; ++k) {
            auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xc0) != 0x80) return false;
            cp = cp << 6 | (cc & 0x3f);
        }
        static constexpr std::uint32_t min_cp[] = {0, 0x80, 0x800, 0x10000};
        if (cp < min_cp[extra] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
        i += extra + 1;
    }
    return true;
}

}  // namespace

const char* message_kind_name(MessageKind kind) noexcept {
    switch (kind) {
        case MessageKind::Chat: return "chat";
        case MessageKind::Ink: return "ink";
        case MessageKind::File: return "file";
        case MessageKind::Control: return "control";
    }
    return "?";
}

void validate_ink(const InkNote& note) {
    if (note.strokes.empty()) throw Error(Errc::MalformedInk, "no strokes");
    if (note.strokes.size() > 0xffff) throw Error(Errc::MalformedInk, "too many strokes");
    for (const auto& stroke : note.strokes) {
        if (stroke.size() > 0xffff) throw Error(Errc::MalformedInk, "too many points");
        if (stroke.size() < 2) throw Error(Errc::MalformedInk, "stroke with fewer than 2 points");
        for (const auto& p : stroke) {
            if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
                throw Error(Errc::MalformedInk, "coordinate outside [0,1]");
            }
        }
    }
}

std::vector<std::uint8_t> encode_ink(const InkNote& note) {
    validate_ink(note);
    detail::ByteWriter w;
    w.u16(static_cast<std::uint16_t>(note.strokes.size()));
    for (const auto& stroke : note.strokes) {
        w.u16(static_cast<std::uint16_t>(stroke.size()));
        for (const auto& p : stroke) {
            w.u16(to_fixed(p.x));
            w.u16(to_fixed(p.y));
        }
    }
    return w.take();
}

InkNote decode_ink(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, Errc::MalformedInk);
    InkNote note;
    const auto strokes = r.u16();
    if (strokes == 0) r.fail("no strokes");
    note.strokes.reserve(strokes);
    for (std::uint16_t s = 0; s < strokes; ++s) {
        const auto points = r.u16();
        if (points < 2) r.fail("stroke with fewer than 2 points");
        Stroke stroke;
        stroke.reserve(points);
        for (std::uint16_t i = 0; i < points; ++i) {
            double x = r.u16() / kInkScale;
            double y = r.u16() / kInkScale;
            stroke.push_back({x, y});
        }
        note.strokes.push_back(std::move(stroke));
    }
    r.expect_end();
    return note;
}

MessageKind kind_of(const Payload& payload) noexcept {
    return static_cast<MessageKind>(payload.index());
}

std::vector<std::uint8_t> encode_payload(const Payload& payload) {
    detail::ByteWriter w;
    switch (kind_of(payload)) {
        case MessageKind::Chat:
            w.text(std::get<std::string>(payload));
            break;
        case MessageKind::Ink:
            return encode_ink(std::get<InkNote>(payload));
        case MessageKind::File: {
            const auto& f = std::get<FileChunk>(payload);
            w.u16(static_cast<std::uint16_t>(f.name.size()));
            w.text(f.name);
            w.u32(f.index);
            w.u32(f.total);
            w.u32(static_cast<std::uint32_t>(f.data.size()));
            w.bytes(f.data);
            break;
        }
        case MessageKind::Control: {
            const auto& c = std::get<ControlPayload>(payload);
            w.u8(static_cast<std::uint8_t>(c.op));
            w.u8(static_cast<std::uint8_t>(c.roster.size()));
            for (const auto& [id, addr] : c.roster) {
                w.bytes(id.bytes);
                w.u8(addr);
            }
            break;
        }
    }
    return w.take();
}

Payload decode_payload(MessageKind kind, std::span<const std::uint8_t> bytes) {
    switch (kind) {
        case MessageKind::Chat: {
            std::string text(bytes.begin(), bytes.end());
            if (text.empty() || !valid_utf8(text)) throw Error(Errc::Malformed, "chat body");
            return text;
        }
        case MessageKind::Ink:
            return decode_ink(bytes);
        case MessageKind::File: {
            detail::ByteReader r(bytes, Errc::Malformed);
            FileChunk f;
            f.name = r.text(r.u16());
            f.index = r.u32();
            f.total = r.u32();
            auto data = r.bytes(r.u32());
            f.data.assign(data.begin(), data.end());
            r.expect_end();
            if (f.name.empty() || f.total == 0 || f.index >= f.total) r.fail("file chunk header");
            return f;
        }
        case MessageKind::Control: {
            detail::ByteReader r(bytes, Errc::Malformed);
            ControlPayload c;
            auto op = r.u8();
            if (op > static_cast<std::uint8_t>(ControlPayload::Op::Dissolve)) r.fail("control op");
            c.op = static_cast<ControlPayload::Op>(op);
            auto n = r.u8();
            for (int i = 0; i < n; ++i) {
                DeviceId id;
                r.fill(id.bytes);
                c.roster[id] = r.u8();
            }
            r.expect_end();
            return c;
        }
    }
    throw Error(Errc::Malformed, "unknown message kind");
}

Message compose(const DeviceId& sender, Payload payload, SequenceState& seq_state, bool connected) {
    if (!connected) throw Error(Errc::NotConnected);
    switch (kind_of(payload)) {
        case MessageKind::Chat: {
            const auto& text = std::get<std::string>(payload);
            if (text.empty()) throw Error(Errc::EmptyBody);
            if (text.size() > kMaxPayloadBytes) {
                throw Error(Errc::OversizePayload, std::to_string(text.size()) + " bytes");
            }
            if (!valid_utf8(text)) throw Error(Errc::Malformed, "chat text is not UTF-8");
            break;
        }
        case MessageKind::Ink:
            validate_ink(std::get<InkNote>(payload));
            break;
        case MessageKind::File: {
            const auto& f = std::get<FileChunk>(payload);
            if (f.data.empty()) throw Error(Errc::EmptyBody);
            if (f.data.size() > kMaxPayloadBytes) {
                throw Error(Errc::OversizePayload, std::to_string(f.data.size()) + " bytes");
            }
            if (f.name.empty() || f.name.size() > 0xffff || f.total == 0 || f.index >= f.total) {
                throw Error(Errc::Malformed, "file chunk needs name and index < total");
            }
            break;
        }
        case MessageKind::Control:
            break;
    }
    Message m;
    m.sender = sender;
    m.kind = kind_of(payload);
    m.payload = std::move(payload);
    m.seq = seq_state.advance();
    return m;
}

std::uint64_t ReplayGuard::high(const DeviceId& sender) const {
    auto it = high_.find(sender);
    if (it == high_.end()) throw Error(Errc::UnknownSender, sender.hex());
    return it->second;
}

InboundVerdict ReplayGuard::accept_inbound(const DeviceId& sender, std::uint64_t seq) {
    auto it = high_.find(sender);
    if (it == high_.end()) throw Error(Errc::UnknownSender, sender.hex());
    std::uint64_t& high = it->second;
    InboundVerdict v;
    if (seq <= high) {
        v.action = InboundVerdict::Action::Duplicate;
        return v;
    }
    if (midstream_.erase(sender) == 0 && seq > high + 1) v.gap = SeqGap{high + 1, seq - 1};
    high = seq;
    return v;
}

RouteResult route(const Group& group, const DeviceId& sender, const DeviceId& at) {
    if (!group.contains(at)) throw Error(Errc::NotMember, "receiver " + at.hex());
    if (!group.contains(sender)) throw Error(Errc::NotMember, "sender " + sender.hex());
    RouteResult r;
    r.deliver_local = sender != at;
    if (at == group.owner) {
        for (const auto& [id, addr] : group.members) {
            if (id != group.owner && id != sender) r.forward_to.push_back(id);
        }
    }
    return r;
}

}  // namespace offat
