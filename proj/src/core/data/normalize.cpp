#include "core/data/normalize.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/uscript.h>

#include <vector>

#include "core/common/error.hpp"

namespace asn::data {

namespace {

const icu::Normalizer2& nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* instance = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || !instance) fail(ErrorCode::State, "ICU NFC normalizer unavailable");
    return *instance;
}

bool is_combining_or_joiner(UChar32 cp) {
    if (cp == 0x200C || cp == 0x200D) return true; // ZWNJ / ZWJ
    const auto type = u_charType(cp);
    return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK || type == U_ENCLOSING_MARK;
}

bool is_punctuation(UChar32 cp) {
    switch (u_charType(cp)) {
        case U_DASH_PUNCTUATION:
        case U_START_PUNCTUATION:
        case U_END_PUNCTUATION:
        case U_CONNECTOR_PUNCTUATION:
        case U_OTHER_PUNCTUATION:
        case U_INITIAL_PUNCTUATION:
        case U_FINAL_PUNCTUATION:
            return true;
        default:
            return false;
    }
}

bool is_emoji(UChar32 cp) {
    if (cp == 0xFE0E || cp == 0xFE0F) return true; // variation selectors
    if (cp >= 0x1F1E6 && cp <= 0x1F1FF) return true; // regional indicators
    // ASCII digits/#/* carry Emoji=Yes (keycap bases); only treat
    // non-ASCII emoji-property characters as emoji.
    return cp > 0x7F && u_hasBinaryProperty(cp, UCHAR_EMOJI);
}

UScriptCode script_of(UChar32 cp) {
    UErrorCode status = U_ZERO_ERROR;
    UScriptCode script = uscript_getScript(cp, &status);
    if (U_FAILURE(status)) return USCRIPT_UNKNOWN;
    return script;
}

} // namespace

std::string normalize(const std::string& raw, const NormalizationPolicy& policy) {
    icu::UnicodeString input = icu::UnicodeString::fromUTF8(raw);
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString composed = nfc().normalize(input, status);
    if (U_FAILURE(status)) fail(ErrorCode::Parse, "Unicode normalization failed");

    icu::UnicodeString kept;
    bool previous_dropped = false;
    for (std::int32_t i = 0; i < composed.length();) {
        const UChar32 cp = composed.char32At(i);
        i += U16_LENGTH(cp);

        bool drop;
        if (u_isUWhiteSpace(cp)) {
            kept.append(static_cast<UChar32>(' '));
            previous_dropped = false;
            continue;
        } else if (previous_dropped && is_combining_or_joiner(cp)) {
            // a mark whose base went away goes with it
            drop = true;
        } else if (is_emoji(cp)) {
            drop = policy.strip_emoji;
        } else if (u_isdigit(cp)) {
            drop = policy.strip_digits;
        } else if (is_punctuation(cp)) {
            drop = policy.strip_punctuation;
        } else {
            const UScriptCode script = script_of(cp);
            if (script == USCRIPT_BENGALI || is_combining_or_joiner(cp)) {
                drop = false;
            } else if (script == USCRIPT_LATIN) {
                drop = policy.strip_latin;
            } else {
                drop = policy.strip_other;
            }
        }
        if (drop) {
            previous_dropped = true;
        } else {
            kept.append(cp);
            previous_dropped = false;
        }
    }

    // Stripping may create fresh adjacencies; re-composing keeps the output
    // a fixed point of this function.
    icu::UnicodeString recomposed = nfc().normalize(kept, status);
    if (U_FAILURE(status)) fail(ErrorCode::Parse, "Unicode normalization failed");

    icu::UnicodeString collapsed;
    bool pending_space = false;
    bool any = false;
    for (std::int32_t i = 0; i < recomposed.length();) {
        const UChar32 cp = recomposed.char32At(i);
        i += U16_LENGTH(cp);
        if (cp == ' ') {
            pending_space = any;
            continue;
        }
        if (pending_space) {
            collapsed.append(static_cast<UChar32>(' '));
            pending_space = false;
        }
        collapsed.append(cp);
        any = true;
    }

    std::string out;
    collapsed.toUTF8String(out);
    return out;
}

} // namespace asn::data
