#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dualmem::text {

// Strips ASCII whitespace from both ends.
std::string trim(std::string_view s);

// Unicode NFC normalization. Invalid UTF-8 is passed through unchanged.
std::string nfc(std::string_view s);

std::string to_lower_ascii(std::string_view s);

// Lowercase word tokens: maximal runs of ASCII alphanumerics; any other byte
// (punctuation, whitespace, non-ASCII) is a separator.
std::vector<std::string> tokenize(std::string_view s);

// tokenize() followed by sort + unique.
std::vector<std::string> token_set(std::string_view s);

// Size of the intersection of two sorted, unique token vectors.
std::size_t overlap(const std::vector<std::string>& a, const std::vector<std::string>& b);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace dualmem::text
