#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace offat {

/// SSIDs are limited to 32 octets; the profile encoding must fit.
inline constexpr std::size_t kSsidMaxBytes = 32;

struct Profile {
    std::string name;
    std::vector<std::string> interests;

    bool operator==(const Profile&) const = default;
};

/// Keyword -> occurrence count (vector-space profile).
struct WeightedProfile {
    std::map<std::string, std::uint64_t> weights;
};

/// Integer percentage in [0, 100].
class SimilarityPercent {
public:
    constexpr SimilarityPercent() = default;
    explicit SimilarityPercent(int value);

    constexpr int value() const noexcept { return value_; }
    auto operator<=>(const SimilarityPercent&) const = default;

private:
    int value_ = 0;
};

/// Turns free text into a keyword list: whitespace runs become one comma,
/// comma runs collapse, edges are trimmed. Keywords are lower-cased and
/// de-duplicated keeping the first occurrence.
std::vector<std::string> normalize_interests(std::string_view raw);

/// Convenience: name plus free-text interests, normalized.
Profile make_profile(std::string name, std::string_view raw_interests);

/// Throws Errc::IllegalCharacter / Errc::Malformed / Errc::Oversize.
void validate_profile(const Profile& profile);

/// "name#kw1,kw2" - at most kSsidMaxBytes UTF-8 bytes.
std::string encode_ssid(const Profile& profile);

/// Splits on the first '#'. Throws Errc::Malformed when there is no '#',
/// the name is empty, or the input is longer than an SSID.
Profile decode_ssid(std::string_view ssid);

/// decode_ssid without the exception: nullopt marks an opaque peer
/// (legacy MAC-style device id).
std::optional<Profile> try_decode_ssid(std::string_view ssid) noexcept;

/// round(100 * |A n B| / |A u B|), half-up; 0 when both are empty.
SimilarityPercent keyword_similarity(std::span<const std::string> a, std::span<const std::string> b);

/// Cosine of the angle between two weight vectors over the keyword union.
/// Throws Errc::EmptyProfile if either side has no keywords.
double cosine_similarity(const WeightedProfile& a, const WeightedProfile& b);

/// Pluggable percentage used by the peer table.
using SimilarityFn =
    std::function<SimilarityPercent(std::span<const std::string>, std::span<const std::string>)>;

}  // namespace offat
