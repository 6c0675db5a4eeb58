#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "offat/device_id.hpp"
#include "offat/grouping.hpp"

namespace offat {

inline constexpr std::size_t kMaxPayloadBytes = 64 * 1024;

enum class MessageKind : std::uint8_t { Chat = 0, Ink = 1, File = 2, Control = 3 };

const char* message_kind_name(MessageKind kind) noexcept;

struct InkPoint {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const InkPoint&) const = default;
};

using Stroke = std::vector<InkPoint>;

struct InkNote {
    std::vector<Stroke> strokes;
    bool operator==(const InkNote&) const = default;
};

/// Throws Errc::MalformedInk.
void validate_ink(const InkNote& note);

/// Big-endian: u16 stroke_count, then per stroke u16 point_count followed
/// by point_count x (u16 x, u16 y); coordinates stored as round(v * 65535).
std::vector<std::uint8_t> encode_ink(const InkNote& note);
InkNote decode_ink(std::span<const std::uint8_t> bytes);

struct FileChunk {
    std::string name;
    std::uint32_t index = 0;
    std::uint32_t total = 1;
    std::vector<std::uint8_t> data;
    bool operator==(const FileChunk&) const = default;
};

/// Group membership bookkeeping carried inside sealed frames.
struct ControlPayload {
    enum class Op : std::uint8_t { Roster = 0, Leave = 1, Dissolve = 2 };
    Op op = Op::Roster;
    std::map<DeviceId, std::uint8_t> roster;  // Roster only
    bool operator==(const ControlPayload&) const = default;
};

using Payload = std::variant<std::string, InkNote, FileChunk, ControlPayload>;

MessageKind kind_of(const Payload& payload) noexcept;

struct Message {
    DeviceId sender;
    std::uint64_t seq = 0;
    MessageKind kind = MessageKind::Chat;
    Payload payload;
    bool operator==(const Message&) const = default;
};

/// Per-sender counter; the first message of a group session is seq 1.
class SequenceState {
public:
    std::uint64_t last() const noexcept { return last_; }
    std::uint64_t advance() noexcept { return ++last_; }
    void reset() noexcept { last_ = 0; }

private:
    std::uint64_t last_ = 0;
};

/// Validates the body and stamps the next sequence number. Throws
/// Errc::NotConnected, Errc::EmptyBody, Errc::OversizePayload,
/// Errc::MalformedInk or Errc::Malformed (chat text is not UTF-8).
Message compose(const DeviceId& sender, Payload payload, SequenceState& seq_state, bool connected);

std::vector<std::uint8_t> encode_payload(const Payload& payload);
/// Throws Errc::Malformed / Errc::MalformedInk.
Payload decode_payload(MessageKind kind, std::span<const std::uint8_t> bytes);

struct SeqGap {
    std::uint64_t first = 0;
    std::uint64_t last = 0;
    bool operator==(const SeqGap&) const = default;
};

struct InboundVerdict {
    enum class Action { Deliver, Duplicate };
    Action action = Action::Deliver;
    std::optional<SeqGap> gap;
};

/// Highest accepted sequence number per sender.
class ReplayGuard {
public:
    void admit(const DeviceId& sender) { high_.try_emplace(sender, 0); }
    /// For a sender whose session began before we joined: its first
    /// accepted seq becomes the baseline instead of a gap.
    void admit_midstream(const DeviceId& sender) {
        if (high_.try_emplace(sender, 0).second) midstream_.insert(sender);
    }
    void forget(const DeviceId& sender) {
        high_.erase(sender);
        midstream_.erase(sender);
    }
    void clear() noexcept {
        high_.clear();
        midstream_.clear();
    }
    bool knows(const DeviceId& sender) const { return high_.contains(sender); }
    std::uint64_t high(const DeviceId& sender) const;

    /// Throws Errc::UnknownSender.
    InboundVerdict accept_inbound(const DeviceId& sender, std::uint64_t seq);

private:
    std::map<DeviceId, std::uint64_t> high_;
    std::set<DeviceId> midstream_;
};

struct RouteResult {
    bool deliver_local = false;
    std::vector<DeviceId> forward_to;
};

/// Star topology: the owner fans out to every member but the sender;
/// a client only delivers locally. Throws Errc::NotMember.
RouteResult route(const Group& group, const DeviceId& sender, const DeviceId& at);

}  // namespace offat
