#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "vcasft/errors.hpp"

namespace vcasft::text {

/// Canonical composition (NFC). All stored and compared text goes through
/// this so Devanagari byte sequences stay stable across round trips.
inline std::string normalize_nfc(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2 *nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        throw Error("ICU NFC instance unavailable");
    }
    icu::UnicodeString in = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    icu::UnicodeString out = nfc->normalize(in, status);
    if (U_FAILURE(status)) {
        throw Error("NFC normalization failed");
    }
    std::string result;
    out.toUTF8String(result);
    return result;
}

inline std::string to_lower(std::string_view utf8) {
    icu::UnicodeString s = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    s.toLower();
    std::string result;
    s.toUTF8String(result);
    return result;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

namespace detail {

inline bool is_digit_cp(UChar32 c) { return c >= '0' && c <= '9'; }

/// Punctuation is blanked out except for '.' and ',' sandwiched between
/// digits, which keeps "2.5" and "1,000" as single tokens.
inline icu::UnicodeString strip_punctuation(const icu::UnicodeString &s) {
    icu::UnicodeString out;
    int32_t n = s.countChar32();
    for (int32_t i = 0; i < n; ++i) {
        UChar32 c = s.char32At(s.moveIndex32(0, i));
        bool punct = u_ispunct(c) || u_charType(c) == U_MATH_SYMBOL || c == U'`';
        if (punct && (c == U'.' || c == U',')) {
            UChar32 prev = i > 0 ? s.char32At(s.moveIndex32(0, i - 1)) : 0;
            UChar32 next = i + 1 < n ? s.char32At(s.moveIndex32(0, i + 1)) : 0;
            if (is_digit_cp(prev) && is_digit_cp(next)) {
                punct = false;
            }
        }
        if (punct) {
            out.append(static_cast<UChar32>(' '));
        } else {
            out.append(c);
        }
    }
    return out;
}

} // namespace detail

/// NFC -> lowercase -> punctuation stripped -> whitespace split.
/// This is the shared normalization used by the text metrics and the
/// factual-containment scorer.
inline std::vector<std::string> normalize_tokens(std::string_view utf8) {
    icu::UnicodeString s = icu::UnicodeString::fromUTF8(
        icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2 *nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_SUCCESS(status)) {
        s = nfc->normalize(s, status);
    }
    s.toLower();
    s = detail::strip_punctuation(s);

    std::vector<std::string> tokens;
    icu::UnicodeString current;
    int32_t n = s.countChar32();
    for (int32_t i = 0; i <= n; ++i) {
        UChar32 c = i < n ? s.char32At(s.moveIndex32(0, i)) : U' ';
        if (u_isUWhiteSpace(c) || c == U' ') {
            if (!current.isEmpty()) {
                std::string tok;
                current.toUTF8String(tok);
                tokens.push_back(std::move(tok));
                current.remove();
            }
        } else {
            current.append(c);
        }
    }
    return tokens;
}

// ---------------------------------------------------------------------------
// Porter stemmer (classic algorithm), used for the METEOR stage-2 match on
// English tokens. Hindi tokens pass through the identity stemmer.
// ---------------------------------------------------------------------------

namespace detail {

inline bool porter_is_consonant(const std::string &w, std::size_t i) {
    switch (w[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !porter_is_consonant(w, i - 1);
        default:
            return true;
    }
}

// Measure m: number of VC sequences in w[0..len).
inline int porter_measure(const std::string &w, std::size_t len) {
    int m = 0;
    bool prev_vowel = false;
    for (std::size_t i = 0; i < len; ++i) {
        bool cons = porter_is_consonant(w, i);
        if (!cons) {
            prev_vowel = true;
        } else if (prev_vowel) {
            ++m;
            prev_vowel = false;
        }
    }
    return m;
}

inline bool porter_has_vowel(const std::string &w, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
        if (!porter_is_consonant(w, i)) return true;
    }
    return false;
}

inline bool porter_double_consonant(const std::string &w) {
    std::size_t n = w.size();
    return n >= 2 && w[n - 1] == w[n - 2] && porter_is_consonant(w, n - 1);
}

// *o: cvc where final c is not w, x, or y.
inline bool porter_cvc(const std::string &w) {
    std::size_t n = w.size();
    if (n < 3) return false;
    if (!porter_is_consonant(w, n - 3) || porter_is_consonant(w, n - 2) || !porter_is_consonant(w, n - 1)) {
        return false;
    }
    char c = w[n - 1];
    return c != 'w' && c != 'x' && c != 'y';
}

inline bool ends_with(const std::string &w, std::string_view suf) {
    return w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
}

inline bool porter_replace(std::string &w, std::string_view suf, std::string_view rep, int min_m) {
    if (!ends_with(w, suf)) return false;
    std::size_t stem_len = w.size() - suf.size();
    if (porter_measure(w, stem_len) > min_m) {
        w.replace(stem_len, suf.size(), rep);
        return true;
    }
    return true; // suffix matched, rule consumed even if not applied
}

} // namespace detail

inline std::string porter_stem(std::string word) {
    using namespace detail;
    if (word.size() <= 2) return word;
    for (char &c : word) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }

    // Step 1a
    if (ends_with(word, "sses")) word.erase(word.size() - 2);
    else if (ends_with(word, "ies")) word.erase(word.size() - 2);
    else if (!ends_with(word, "ss") && ends_with(word, "s")) word.pop_back();

    // Step 1b
    bool step1b_extra = false;
    if (ends_with(word, "eed")) {
        if (porter_measure(word, word.size() - 3) > 0) word.pop_back();
    } else if (ends_with(word, "ed") && porter_has_vowel(word, word.size() - 2)) {
        word.erase(word.size() - 2);
        step1b_extra = true;
    } else if (ends_with(word, "ing") && porter_has_vowel(word, word.size() - 3)) {
        word.erase(word.size() - 3);
        step1b_extra = true;
    }
    if (step1b_extra) {
        if (ends_with(word, "at") || ends_with(word, "bl") || ends_with(word, "iz")) {
            word.push_back('e');
        } else if (porter_double_consonant(word) && !ends_with(word, "l") && !ends_with(word, "s") &&
                   !ends_with(word, "z")) {
            word.pop_back();
        } else if (porter_measure(word, word.size()) == 1 && porter_cvc(word)) {
            word.push_back('e');
        }
    }

    // Step 1c
    if (ends_with(word, "y") && porter_has_vowel(word, word.size() - 1)) {
        word.back() = 'i';
    }

    // Step 2
    static const std::pair<std::string_view, std::string_view> step2[] = {
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"}};
    for (const auto &[suf, rep] : step2) {
        if (ends_with(word, suf)) {
            porter_replace(word, suf, rep, 0);
            break;
        }
    }

    // Step 3
    static const std::pair<std::string_view, std::string_view> step3[] = {
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""}};
    for (const auto &[suf, rep] : step3) {
        if (ends_with(word, suf)) {
            porter_replace(word, suf, rep, 0);
            break;
        }
    }

    // Step 4
    static const std::string_view step4[] = {"al",   "ance", "ence", "er",  "ic",  "able", "ible",
                                             "ant",  "ement", "ment", "ent", "ou",  "ism",  "ate",
                                             "iti",  "ous",  "ive",  "ize"};
    for (std::string_view suf : step4) {
        if (ends_with(word, suf)) {
            std::size_t stem_len = word.size() - suf.size();
            if (porter_measure(word, stem_len) > 1) {
                word.erase(stem_len);
            }
            break;
        }
    }
    if (ends_with(word, "ion")) {
        std::size_t stem_len = word.size() - 3;
        if (stem_len > 0 && (word[stem_len - 1] == 's' || word[stem_len - 1] == 't') &&
            porter_measure(word, stem_len) > 1) {
            word.erase(stem_len);
        }
    }

    // Step 5a
    if (ends_with(word, "e")) {
        std::size_t stem_len = word.size() - 1;
        int m = porter_measure(word, stem_len);
        std::string stem = word.substr(0, stem_len);
        if (m > 1 || (m == 1 && !porter_cvc(stem))) {
            word.pop_back();
        }
    }
    // Step 5b
    if (porter_double_consonant(word) && ends_with(word, "l") && porter_measure(word, word.size()) > 1) {
        word.pop_back();
    }
    return word;
}

// ---------------------------------------------------------------------------
// Numeric literal and unit extraction (constant-replacement validation and
// the local final-answer fallback).
// ---------------------------------------------------------------------------

struct NumericLiteral {
    double value = 0.0;
    std::string literal;  // exact source text of the number
    std::string unit;     // adjacent unit token, empty if none
    std::size_t position = 0;
};

namespace detail {

inline bool is_ascii_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Words that look like a trailing token but are never units.
inline const std::set<std::string> &unit_blocklist() {
    static const std::set<std::string> words = {
        "and", "or",  "of",  "to",   "in", "is",  "are", "the", "a",  "an",  "by", "with",
        "for", "at",  "as",  "from", "on", "if",  "था",  "और",  "का", "की",  "के", "से",
        "में",  "है",  "हैं",   "तथा",  "या", "जिसका", "jo", "एक"};
    return words;
}

inline std::size_t codepoint_count(std::string_view utf8) {
    std::size_t n = 0;
    for (char c : utf8) {
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    }
    return n;
}

// Reads a unit-ish token starting at `i`: letters (any script) optionally
// mixed with '/', '^', degree signs, '%' and exponent digits, e.g. "Ω",
// "m/s^2", "किमी". Returns empty when the token does not look like a unit.
inline std::string read_unit_token(std::string_view s, std::size_t i) {
    std::size_t start = i;
    std::size_t j = i;
    bool has_letter = false;
    while (j < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[j]);
        if (c < 0x80) {
            if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
                has_letter = true;
                ++j;
            } else if (c == '/' || c == '^' || c == '%' || (c >= '0' && c <= '9' && j > start)) {
                ++j;
            } else {
                break;
            }
        } else {
            // multi-byte codepoint: accept letters and middle-dot style joins
            std::size_t len = (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : 4;
            if (j + len > s.size()) break;
            std::string_view cp = s.substr(j, len);
            if (cp == "·" || cp == "°" || cp == "µ" || cp == "μ") {
                j += len;
                continue;
            }
            icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(cp.data(), static_cast<int32_t>(cp.size())));
            UChar32 ucp = u.char32At(0);
            if (u_isalpha(ucp)) {
                has_letter = true;
                j += len;
            } else {
                break;
            }
        }
    }
    if (!has_letter || j == start) return {};
    std::string tok(s.substr(start, j - start));
    if (unit_blocklist().count(to_lower(tok)) > 0) return {};
    if (codepoint_count(tok) > 8) return {};
    return tok;
}

} // namespace detail

/// Finds decimal/integer literals (optional sign, decimal point, scientific
/// notation) together with their adjacent unit tokens.
inline std::vector<NumericLiteral> find_numeric_literals(std::string_view s) {
    std::vector<NumericLiteral> out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        bool sign = (c == '+' || c == '-') && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]));
        if (!std::isdigit(static_cast<unsigned char>(c)) && !sign) {
            ++i;
            continue;
        }
        // literals embedded in identifiers (H2O) are not constants
        if (i > 0 && detail::is_ascii_alnum(s[i - 1])) {
            ++i;
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
            continue;
        }
        std::size_t start = i;
        if (sign) ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i < s.size() && s[i] == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
            ++i;
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        }
        if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
            std::size_t k = i + 1;
            if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
            if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
                i = k;
                while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
            }
        }
        NumericLiteral lit;
        lit.position = start;
        lit.literal = std::string(s.substr(start, i - start));
        lit.value = std::stod(lit.literal);
        // unit may follow directly ("5Ω") or after spaces ("5 Ω")
        std::size_t k = i;
        while (k < s.size() && s[k] == ' ') ++k;
        lit.unit = detail::read_unit_token(s, k);
        out.push_back(std::move(lit));
    }
    return out;
}

struct NumericAnswer {
    double value = 0.0;
    std::string unit;
};

/// Local fallback for final-answer extraction: the last numeric literal in
/// the text together with its unit. Judge-backed extraction lives in the
/// metrics module.
inline std::optional<NumericAnswer> extract_final_numeric_local(std::string_view answer_text) {
    auto literals = find_numeric_literals(answer_text);
    if (literals.empty()) return std::nullopt;
    const NumericLiteral &last = literals.back();
    return NumericAnswer{last.value, last.unit};
}

/// Distinct unit tokens appearing next to numeric literals, in first-seen order.
inline std::vector<std::string> unit_tokens(std::string_view s) {
    std::vector<std::string> units;
    for (const auto &lit : find_numeric_literals(s)) {
        if (!lit.unit.empty() && std::find(units.begin(), units.end(), lit.unit) == units.end()) {
            units.push_back(lit.unit);
        }
    }
    return units;
}

/// Stopword filter used by the factual scorer; tokens surviving this are
/// "content" unigrams. Falls back to all tokens when everything is filtered.
inline std::vector<std::string> content_tokens(const std::vector<std::string> &tokens) {
    static const std::set<std::string> stop = {
        "a",  "an", "the", "is",  "are", "was", "were", "of",  "to", "in", "on", "and",
        "or", "it", "its", "that", "this", "be",  "by",  "for", "at", "as",
        "का", "की", "के",  "है",  "हैं",  "में",   "से",   "और",  "यह", "वह", "एक", "को", "तथा", "या"};
    std::vector<std::string> out;
    for (const auto &t : tokens) {
        if (stop.count(t) == 0) out.push_back(t);
    }
    if (out.empty()) return tokens;
    return out;
}

} // namespace vcasft::text
