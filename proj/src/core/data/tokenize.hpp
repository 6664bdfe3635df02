#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace asn::data {

// Interface so a subword tokenizer can be swapped in later without touching
// the encode path.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(const std::string& text) const = 0;
};

// Whitespace split, then maximal punctuation runs peeled off as standalone
// tokens ("ভালো!!" -> "ভালো", "!!").
class WhitespacePunctTokenizer : public Tokenizer {
public:
    std::vector<std::string> tokenize(const std::string& text) const override;
};

struct Vocabulary {
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kUnk = 1;

    // indices contiguous from 0; PAD=0, UNK=1; retained tokens from 2 up
    std::vector<std::string> index_to_token;
    std::unordered_map<std::string, std::size_t> token_to_index;
    std::size_t min_frequency = 1;

    std::size_t size() const { return index_to_token.size(); }
    std::size_t lookup(const std::string& token) const;
    bool contains(const std::string& token) const { return token_to_index.count(token) != 0; }

    // Appends unseen tokens with fresh indices; returns how many were added.
    std::size_t extend(const std::vector<std::string>& tokens);
};

// Deterministic: retained tokens ordered by (frequency desc, token asc).
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, std::size_t min_frequency);

// Fixed-length index sequence: unknown tokens -> UNK, right-padded with PAD,
// truncated past max_length. Errors if max_length < 1.
std::vector<std::size_t> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                                std::size_t max_length);

// Inverse of encode up to truncation: PAD dropped, UNK rendered as the UNK
// token string.
std::vector<std::string> decode(const std::vector<std::size_t>& ids, const Vocabulary& vocab);

void save_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::string& path);

} // namespace asn::data
