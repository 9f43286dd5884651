#include "mercator/text.hpp"

#include <algorithm>
#include <cctype>

namespace mercator::text {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        out.push_back(std::move(current));
    }
    return out;
}

bool contains_keyword(const std::vector<std::string>& tokens, std::string_view keyword) {
    const auto needle = tokenize(keyword);
    if (needle.empty()) {
        return false;
    }
    return std::search(tokens.begin(), tokens.end(), needle.begin(), needle.end()) != tokens.end();
}

std::string trim(std::string_view s) {
    const auto not_space = [](char c) { return !std::isspace(static_cast<unsigned char>(c)); };
    const auto first = std::find_if(s.begin(), s.end(), not_space);
    const auto last = std::find_if(s.rbegin(), s.rend(), not_space).base();
    return first < last ? std::string(first, last) : std::string();
}

}  // namespace mercator::text
