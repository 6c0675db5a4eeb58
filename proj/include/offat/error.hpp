#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace offat {

enum class Errc {
    // profile
    Oversize,
    IllegalCharacter,
    Malformed,
    EmptyProfile,
    // discovery
    AlreadyRunning,
    NotRunning,
    // grouping
    PeerUnknown,
    PeerBusy,
    DuplicatePending,
    AlreadyResolved,
    ExpiredInvitation,
    UnknownInvitation,
    GroupFull,
    NotOwner,
    NotInGroup,
    // messaging
    NotConnected,
    OversizePayload,
    EmptyBody,
    UnknownSender,
    NotMember,
    MalformedInk,
    // security
    BadLength,
    BadDigit,
    NonceExhausted,
    AuthenticationFailure,
    // simnet
    SchemaError,
    UnknownDevice,
    // node / wire
    MalformedFrame,
    ParseError,
    InvalidProfile,
    InvalidConfig,
    PortInUse,
    MulticastJoinFailed,
    InvalidArgument,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    explicit Error(Errc code) : std::runtime_error(std::string(errc_name(code))), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace offat
