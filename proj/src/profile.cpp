#include "offat/profile.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "offat/error.hpp"

namespace offat {
namespace {

// Java's \s: [ \t\n\x0B\f\r]
bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool keyword_chars_ok(std::string_view kw) {
    return !kw.empty() && std::none_of(kw.begin(), kw.end(), [](char c) {
        return c == '#' || c == ',' || is_space(c);
    });
}

std::size_t encoded_size(const Profile& p) {
    std::size_t n = p.name.size() + 1;
    for (std::size_t i = 0; i < p.interests.size(); ++i) n += p.interests[i].size() + (i ? 1 : 0);
    return n;
}

std::vector<std::string> unique_sorted(std::span<const std::string> words) {
    std::vector<std::string> out(words.begin(), words.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

SimilarityPercent::SimilarityPercent(int value) : value_(value) {
    if (value < 0 || value > 100) throw Error(Errc::InvalidArgument, "similarity outside [0,100]");
}

std::vector<std::string> normalize_interests(std::string_view raw) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && seen.insert(current).second) out.push_back(current);
        current.clear();
    };
    for (char c : raw) {
        if (c == ',' || is_space(c)) {
            flush();
        } else {
            current.push_back(ascii_lower(c));
        }
    }
    flush();
    return out;
}

Profile make_profile(std::string name, std::string_view raw_interests) {
    return Profile{std::move(name), normalize_interests(raw_interests)};
}

void validate_profile(const Profile& profile) {
    if (profile.name.empty()) throw Error(Errc::Malformed, "empty name");
    if (profile.name.find('#') != std::string::npos) {
        throw Error(Errc::IllegalCharacter, "'#' in name");
    }
    std::set<std::string_view> seen;
    for (const auto& kw : profile.interests) {
        if (!keyword_chars_ok(kw)) throw Error(Errc::IllegalCharacter, "bad keyword '" + kw + "'");
        if (std::any_of(kw.begin(), kw.end(), [](char c) { return c >= 'A' && c <= 'Z'; })) {
            throw Error(Errc::Malformed, "keyword '" + kw + "' is not lower-case");
        }
        if (!seen.insert(kw).second) throw Error(Errc::Malformed, "duplicate keyword '" + kw + "'");
    }
    if (auto n = encoded_size(profile); n > kSsidMaxBytes) {
        throw Error(Errc::Oversize, std::to_string(n) + " bytes > " + std::to_string(kSsidMaxBytes));
    }
}

std::string encode_ssid(const Profile& profile) {
    validate_profile(profile);
    std::string out = profile.name;
    out.push_back('#');
    for (std::size_t i = 0; i < profile.interests.size(); ++i) {
        if (i) out.push_back(',');
        out += profile.interests[i];
    }
    return out;
}

Profile decode_ssid(std::string_view ssid) {
    if (ssid.size() > kSsidMaxBytes) throw Error(Errc::Malformed, "longer than an SSID");
    auto hash = ssid.find('#');
    if (hash == std::string_view::npos) throw Error(Errc::Malformed, "no '#'");
    if (hash == 0) throw Error(Errc::Malformed, "empty name");
    Profile p{std::string(ssid.substr(0, hash)), normalize_interests(ssid.substr(hash + 1))};
    for (const auto& kw : p.interests) {
        if (kw.find('#') != std::string::npos) throw Error(Errc::Malformed, "'#' in interests");
    }
    return p;
}

std::optional<Profile> try_decode_ssid(std::string_view ssid) noexcept {
    try {
        return decode_ssid(ssid);
    } catch (...) {
        return std::nullopt;
    }
}

SimilarityPercent keyword_similarity(std::span<const std::string> a, std::span<const std::string> b) {
    const auto sa = unique_sorted(a);
    const auto sb = unique_sorted(b);
    std::size_t common = 0;
    auto ia = sa.begin();
    auto ib = sb.begin();
    while (ia != sa.end() && ib != sb.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common, ++ia, ++ib;
        }
    }
    const std::size_t all = sa.size() + sb.size() - common;
    if (all == 0) return SimilarityPercent(0);
    // round half up of 100 * common / all
    return SimilarityPercent(static_cast<int>((200 * common + all) / (2 * all)));
}

double cosine_similarity(const WeightedProfile& a, const WeightedProfile& b) {
    if (a.weights.empty() || b.weights.empty()) throw Error(Errc::EmptyProfile);
    for (const auto* w : {&a.weights, &b.weights}) {
        for (const auto& [kw, count] : *w) {
            if (count == 0) throw Error(Errc::InvalidArgument, "zero count for '" + kw + "'");
        }
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    // Both maps are sorted: a merge walk visits the keyword union once.
    auto ia = a.weights.begin();
    auto ib = b.weights.begin();
    while (ia != a.weights.end() || ib != b.weights.end()) {
        double wa = 0.0;
        double wb = 0.0;
        if (ib == b.weights.end() || (ia != a.weights.end() && ia->first < ib->first)) {
            wa = static_cast<double>(ia++->second);
        } else if (ia == a.weights.end() || ib->first < ia->first) {
            wb = static_cast<double>(ib++->second);
        } else {
            wa = static_cast<double>(ia++->second);
            wb = static_cast<double>(ib++->second);
        }
        dot += wa * wb;
        na += wa * wa;
        nb += wb * wb;
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

}  // namespace offat
