#pragma once

#include <string>

namespace asn::data {

// Character-class removal is policy-driven rather than hardwired: transfer
// corpora keep Latin (code-mixed text), the source pipeline strips it.
struct NormalizationPolicy {
    bool strip_emoji = true;
    bool strip_latin = true;
    bool strip_punctuation = true;
    bool strip_digits = false;
    // Anything that is not Bengali, whitespace, or a class kept above:
    // other scripts, symbols, control characters.
    bool strip_other = true;
};

// Canonicalizes a raw string:
//   1. Unicode NFC (composed form)
//   2. class stripping per policy; combining marks and joiners whose base
//      was stripped go with it, so no new composition pairs appear
//   3. a final NFC pass, then whitespace runs collapse to single spaces
//      and the ends are trimmed
// Idempotent: normalize(normalize(x), p) == normalize(x, p). Empty output
// is legal; rejection is the caller's decision.
std::string normalize(const std::string& raw, const NormalizationPolicy& policy);

} // namespace asn::data
