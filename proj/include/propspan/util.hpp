#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace propspan {

// 64-bit FNV-1a. Used for feature hashing, vocabulary/config hashes and
// seeding the synthetic feature generator.
inline constexpr uint64_t kFnvOffset = 1469598103934665603ull;
inline constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a64(uint64_t v, uint64_t h = kFnvOffset) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Utf8Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Decodes UTF-8 into Unicode scalar values. All character offsets in the
// toolkit are counted in scalar values, never bytes.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);
std::size_t utf8_length(std::string_view s);

// Slice [start, end) of a UTF-8 string addressed in scalar values.
std::string utf8_slice(std::string_view s, std::size_t start, std::size_t end);

inline bool is_ascii_space(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v';
}

inline std::string lowercase_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::string hex_string(uint64_t v);
uint64_t parse_hex(const std::string& s);

}  // namespace propspan
