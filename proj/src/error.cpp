#include "offat/error.hpp"

namespace offat {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::Oversize: return "Oversize";
        case Errc::IllegalCharacter: return "IllegalCharacter";
        case Errc::Malformed: return "Malformed";
        case Errc::EmptyProfile: return "EmptyProfile";
        case Errc::AlreadyRunning: return "AlreadyRunning";
        case Errc::NotRunning: return "NotRunning";
        case Errc::PeerUnknown: return "PeerUnknown";
        case Errc::PeerBusy: return "PeerBusy";
        case Errc::DuplicatePending: return "DuplicatePending";
        case Errc::AlreadyResolved: return "AlreadyResolved";
        case Errc::ExpiredInvitation: return "ExpiredInvitation";
        case Errc::UnknownInvitation: return "UnknownInvitation";
        case Errc::GroupFull: return "GroupFull";
        case Errc::NotOwner: return "NotOwner";
        case Errc::NotInGroup: return "NotInGroup";
        case Errc::NotConnected: return "NotConnected";
        case Errc::OversizePayload: return "OversizePayload";
        case Errc::EmptyBody: return "EmptyBody";
        case Errc::UnknownSender: return "UnknownSender";
        case Errc::NotMember: return "NotMember";
        case Errc::MalformedInk: return "MalformedInk";
        case Errc::BadLength: return "BadLength";
        case Errc::BadDigit: return "BadDigit";
        case Errc::NonceExhausted: return "NonceExhausted";
        case Errc::AuthenticationFailure: return "AuthenticationFailure";
        case Errc::SchemaError: return "SchemaError";
        case Errc::UnknownDevice: return "UnknownDevice";
        case Errc::MalformedFrame: return "MalformedFrame";
        case Errc::ParseError: return "ParseError";
        case Errc::InvalidProfile: return "InvalidProfile";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::PortInUse: return "PortInUse";
        case Errc::MulticastJoinFailed: return "MulticastJoinFailed";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace offat
