#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mercator::text {

/// Lowercased runs of ASCII alphanumerics. Bytes >= 0x80 are kept inside
/// tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

/// True when the keyword's token sequence occurs contiguously in `tokens`.
/// Matching is case-insensitive and on whole words: "EU" does not match
/// "queue".
bool contains_keyword(const std::vector<std::string>& tokens, std::string_view keyword);

std::string trim(std::string_view s);

}  // namespace mercator::text
