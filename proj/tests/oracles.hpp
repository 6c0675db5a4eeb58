#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline int jaccard_percent(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::vector<std::string> both, either;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(both));
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(either));
    if (either.empty()) return 0;
    return static_cast<int>(std::lround(100.0 * static_cast<double>(both.size()) / static_cast<double>(either.size())));
}

inline double cosine(const std::map<std::string, std::uint64_t>& a, const std::map<std::string, std::uint64_t>& b) {
    std::set<std::string> keys;
    for (const auto& [k, v] : a) keys.insert(k);
    for (const auto& [k, v] : b) keys.insert(k);
    std::vector<double> va, vb;
    for (const auto& k : keys) {
        auto ia = a.find(k);
        auto ib = b.find(k);
        va.push_back(ia == a.end() ? 0.0 : static_cast<double>(ia->second));
        vb.push_back(ib == b.end() ? 0.0 : static_cast<double>(ib->second));
    }
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        dot += va[i] * vb[i];
        na += va[i] * va[i];
        nb += vb[i] * vb[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline std::uint16_t quantize(double v) { return static_cast<std::uint16_t>(std::floor(v * 65535.0 + 0.5)); }

struct GoldenRow {
    const char* raw;
    const char* normalized;
};

// Generated from a separate implementation of the whitespace -> comma,
// comma-run collapse chain, then edge trim, ASCII lower-case and dedupe.
inline const std::vector<GoldenRow>& normalization_golden() {
    static const std::vector<GoldenRow> rows = {
        {"music  chess,  go", "music,chess,go"},
        {"", ""},
        {" ", ""},
        {",", ""},
        {",,,", ""},
        {"music", "music"},
        {"Music", "music"},
        {"MUSIC music Music", "music"},
        {"Jobs,,jobs  JOBS", "jobs"},
        {"a b c", "a,b,c"},
        {"a,b,c", "a,b,c"},
        {"a, b, c", "a,b,c"},
        {"a ,b ,c", "a,b,c"},
        {" a b c ", "a,b,c"},
        {",a,b,c,", "a,b,c"},
        {"a\x09""b\x0a""c", "a,b,c"},
        {"a\x0d""\x0a""b", "a,b"},
        {"a\x0b""b\x0c""c", "a,b,c"},
        {"  leading", "leading"},
        {"trailing  ", "trailing"},
        {"x,,,,y", "x,y"},
        {"x , , , y", "x,y"},
        {"one two two three one", "one,two,three"},
        {"Go go GO gO", "go"},
        {"c++ java", "c++,java"},
        {"rock&roll jazz", "rock&roll,jazz"},
        {"hip-hop,r&b", "hip-hop,r&b"},
        {"caf\xc3""\xa9"" bar", "caf\xc3""\xa9"",bar"},
        {"CAF\xc3""\x89"" caf\xc3""\xa9""", "caf\xc3""\x89"",caf\xc3""\xa9"""},
        {"\xe6""\x97""\xa5""\xe6""\x9c""\xac"" \xe4""\xb8""\xad""\xe6""\x96""\x87""", "\xe6""\x97""\xa5""\xe6""\x9c""\xac"",\xe4""\xb8""\xad""\xe6""\x96""\x87"""},
        {"a#b c", "a#b,c"},
        {"#tag", "#tag"},
        {"1 2 3", "1,2,3"},
        {"2024 ai ML", "2024,ai,ml"},
        {"data-science machine_learning", "data-science,machine_learning"},
        {"x.y z.w", "x.y,z.w"},
        {"  ,  ,  ", ""},
        {"a,\x09""b", "a,b"},
        {"\x09""\x09""", ""},
        {"A,a,B,b", "a,b"},
        {"food, travel ,photography", "food,travel,photography"},
        {"Music Chess Go Food", "music,chess,go,food"},
        {"kw1,kw2 kw3\x09""kw4\x0a""kw5", "kw1,kw2,kw3,kw4,kw5"},
        {"e-mail  E-MAIL", "e-mail"},
        {"\xce""\xb1"" \xce""\xb2"" \xce""\x93""", "\xce""\xb1"",\xce""\xb2"",\xce""\x93"""},
        {"tennis,,  ,,golf", "tennis,golf"},
        {"art", "art"},
        {"Zz zZ zz", "zz"},
        {"hello world hello", "hello,world"},
        {"  multiple   spaces   here  ", "multiple,spaces,here"},
    };
    return rows;
}

}  // namespace oracle
