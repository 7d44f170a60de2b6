#include "vwsd/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <stdexcept>

namespace vwsd {

namespace {

icu::UnicodeString normalized_unicode(std::string_view text) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFKC normalizer unavailable");
    const auto source = icu::UnicodeString::fromUTF8(
        icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    icu::UnicodeString out = nfkc->normalize(source, status);
    if (U_FAILURE(status)) throw std::runtime_error("NFKC normalization failed");
    out.toLower(icu::Locale::getRoot());
    return out;
}

bool is_separator(UChar32 c) { return u_isUWhiteSpace(c) || u_ispunct(c); }

} // namespace

std::string normalize_text(std::string_view text) {
    std::string out;
    normalized_unicode(text).toUTF8String(out);
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    const icu::UnicodeString u = normalized_unicode(text);
    std::vector<std::string> tokens;
    int32_t start = -1;
    auto flush = [&](int32_t end) {
        if (start >= 0 && end > start) {
            std::string token;
            u.tempSubStringBetween(start, end).toUTF8String(token);
            tokens.push_back(std::move(token));
        }
        start = -1;
    };
    for (int32_t i = 0; i < u.length();) {
        const UChar32 c = u.char32At(i);
        if (is_separator(c)) {
            flush(i);
        } else if (start < 0) {
            start = i;
        }
        i = u.moveIndex32(i, 1);
    }
    flush(u.length());
    return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

std::string context_word(std::string_view target, std::string_view context) {
    const auto target_tokens = tokenize(target);
    auto tokens = tokenize(context);
    if (!target_tokens.empty()) {
        auto it = std::search(tokens.begin(), tokens.end(), target_tokens.begin(),
                              target_tokens.end());
        if (it != tokens.end()) tokens.erase(it, it + static_cast<std::ptrdiff_t>(target_tokens.size()));
    }
    if (tokens.empty()) return join_tokens(target_tokens);
    return join_tokens(tokens);
}

} // namespace vwsd
