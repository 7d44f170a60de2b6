#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vwsd {

/// NFKC-normalizes and lowercases UTF-8 text (root locale).
std::string normalize_text(std::string_view text);

/// Normalizes, then splits on Unicode whitespace and punctuation.
/// Shared by corpus statistics, the article index and sense descriptions.
std::vector<std::string> tokenize(std::string_view text);

/// Joins tokens with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens);

/// The non-target part of a context phrase: the context tokens with the
/// first occurrence of the target token sequence removed, joined by spaces.
/// Falls back to the normalized target word when nothing remains.
std::string context_word(std::string_view target, std::string_view context);

} // namespace vwsd
