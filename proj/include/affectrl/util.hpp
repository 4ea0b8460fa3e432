#pragma once

#include <cctype>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace affectrl {

inline std::string trim(std::string_view s) {
    const char* ws = " \t\n\r\f\v";
    auto begin = s.find_first_not_of(ws);
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(ws);
    return std::string(s.substr(begin, end - begin + 1));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    std::string h = to_lower(haystack);
    std::string n = to_lower(needle);
    return h.find(n) != std::string::npos;
}

// Trim, case-fold, and strip terminal punctuation. Label comparison is
// done on this normalized form.
inline std::string normalize_label_text(std::string_view raw) {
    std::string s = to_lower(trim(raw));
    while (!s.empty()) {
        char c = s.back();
        if (c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':') {
            s.pop_back();
        } else {
            break;
        }
    }
    return trim(s);
}

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Deterministic RNG stream derived from a seed plus stream coordinates.
// Streams are independent of worker scheduling: the same coordinates
// always yield the same generator state.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                                std::uint64_t c = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c),    static_cast<std::uint32_t>(c >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace affectrl
