#include "core/data/tokenize.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "core/common/error.hpp"

namespace asn::data {

namespace {

bool is_punct_cp(UChar32 cp) {
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

const char* kPadToken = "<pad>";
const char* kUnkToken = "<unk>";

} // namespace

std::vector<std::string> WhitespacePunctTokenizer::tokenize(const std::string& text) const {
    icu::UnicodeString s = icu::UnicodeString::fromUTF8(text);
    std::vector<std::string> out;
    icu::UnicodeString current;
    bool current_is_punct = false;

    auto flush = [&]() {
        if (current.isEmpty()) return;
        std::string token;
        current.toUTF8String(token);
        out.push_back(std::move(token));
        current.remove();
    };

    for (std::int32_t i = 0; i < s.length();) {
        const UChar32 cp = s.char32At(i);
        i += U16_LENGTH(cp);
        if (u_isUWhiteSpace(cp)) {
            flush();
            continue;
        }
        const bool punct = is_punct_cp(cp);
        if (!current.isEmpty() && punct != current_is_punct) flush();
        current.append(cp);
        current_is_punct = punct;
    }
    flush();
    return out;
}

std::size_t Vocabulary::lookup(const std::string& token) const {
    auto it = token_to_index.find(token);
    return it == token_to_index.end() ? kUnk : it->second;
}

std::size_t Vocabulary::extend(const std::vector<std::string>& tokens) {
    std::size_t added = 0;
    for (const auto& token : tokens) {
        if (token_to_index.count(token)) continue;
        token_to_index.emplace(token, index_to_token.size());
        index_to_token.push_back(token);
        ++added;
    }
    return added;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, std::size_t min_frequency) {
    std::map<std::string, std::size_t> freq; // ordered: deterministic ties
    for (const auto& tokens : corpus)
        for (const auto& token : tokens) ++freq[token];

    std::vector<std::pair<std::string, std::size_t>> retained;
    for (const auto& [token, count] : freq)
        if (count >= min_frequency) retained.emplace_back(token, count);
    std::stable_sort(retained.begin(), retained.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocabulary vocab;
    vocab.min_frequency = min_frequency;
    vocab.index_to_token = {kPadToken, kUnkToken};
    vocab.token_to_index = {{kPadToken, Vocabulary::kPad}, {kUnkToken, Vocabulary::kUnk}};
    for (auto& [token, count] : retained) {
        vocab.token_to_index.emplace(token, vocab.index_to_token.size());
        vocab.index_to_token.push_back(token);
    }
    return vocab;
}

std::vector<std::size_t> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                                std::size_t max_length) {
    if (max_length < 1) fail(ErrorCode::InvalidArgument, "encode: max_length must be >= 1");
    std::vector<std::size_t> ids(max_length, Vocabulary::kPad);
    const std::size_t n = std::min(tokens.size(), max_length);
    for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.lookup(tokens[i]);
    return ids;
}

std::vector<std::string> decode(const std::vector<std::size_t>& ids, const Vocabulary& vocab) {
    std::vector<std::string> tokens;
    for (std::size_t id : ids) {
        if (id == Vocabulary::kPad) continue;
        if (id >= vocab.size())
            fail(ErrorCode::InvalidArgument, "decode: index " + std::to_string(id) + " out of vocabulary");
        tokens.push_back(vocab.index_to_token[id]);
    }
    return tokens;
}

void save_vocab(const std::string& path, const Vocabulary& vocab) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["min_frequency"] = vocab.min_frequency;
    doc["tokens"] = vocab.index_to_token;
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write vocabulary: " + path);
    out << doc.dump(2) << "\n";
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open vocabulary: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, "vocabulary parse failure: " + std::string(e.what()));
    }
    Vocabulary vocab;
    vocab.min_frequency = doc.value("min_frequency", std::size_t{1});
    vocab.index_to_token = doc.at("tokens").get<std::vector<std::string>>();
    if (vocab.index_to_token.size() < 2)
        fail(ErrorCode::Parse, "vocabulary missing special tokens: " + path);
    for (std::size_t i = 0; i < vocab.index_to_token.size(); ++i)
        vocab.token_to_index.emplace(vocab.index_to_token[i], i);
    return vocab;
}

} // namespace asn::data
