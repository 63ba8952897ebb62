#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Small text and hashing helpers shared by the prompt, backend and metric code.
namespace advicl::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
// Splits on any run of ASCII whitespace; empty input yields no tokens.
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(std::span<const std::string> parts, std::string_view sep);
bool contains_ci(std::string_view haystack, std::string_view needle);

// Length of the longest common subsequence of two token lists.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// Stable non-cryptographic hashing for seeds. Identical on every platform.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);
// Maps a hash to [0, 1).
double unit_interval(std::uint64_t h);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace advicl::text
