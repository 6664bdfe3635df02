#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/data/normalize.hpp"
#include "core/data/review.hpp"
#include "core/data/tokenize.hpp"

namespace asn::data {

enum class DatasetFormat { Jsonl, Csv };

struct RejectedRow {
    std::size_t line = 0;
    std::string reason;
    std::string raw;
};

struct LoadReport {
    std::vector<Review> reviews;
    std::vector<RejectedRow> rejected;
    std::vector<std::string> warnings;
};

struct LoadOptions {
    // When set, texts are normalized on ingest and reviews whose text
    // normalizes to empty are rejected.
    std::optional<NormalizationPolicy> normalize;
};

// Malformed rows land in the rejection report with a reason, never silently
// dropped. Zero valid rows is a hard error.
LoadReport load_dataset(const std::string& path, DatasetFormat format, const LoadOptions& options = {});

void save_jsonl(const std::string& path, const std::vector<Review>& reviews);
nlohmann::json review_to_json(const Review& review);
Review review_from_json(const nlohmann::json& row);

struct SplitRatios {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

struct DatasetSplit {
    std::vector<Review> train;
    std::vector<Review> validation;
    std::vector<Review> test;
    std::uint64_t seed = 0;
    SplitRatios ratios;
};

// Seeded shuffle; train = floor(N*r1), validation = floor(N*r2), remainder
// to test. Optional stratification interleaves label groups before the cut;
// the default mirrors plain shuffling.
DatasetSplit split(const std::vector<Review>& reviews, SplitRatios ratios, std::uint64_t seed,
                   bool stratified = false);

// Counts per sentiment (Positive, Negative, Neutral) among annotations of
// one aspect.
std::array<std::size_t, kSentimentCount> class_distribution(const std::vector<Review>& reviews,
                                                            Aspect aspect);

// |A ∩ B| / |A ∪ B|; 1.0 when both sets are empty (documented convention).
double jaccard_similarity(const std::set<std::string>& a, const std::set<std::string>& b);

struct CorpusStats {
    std::size_t total_reviews = 0;
    std::map<std::string, std::size_t> platform_counts; // unset platform -> "Other"
    std::map<std::string, std::array<std::size_t, kSentimentCount>> aspect_distribution;
    std::vector<Aspect> occupied_aspects;
    // pairwise vocabulary Jaccard over occupied aspects, unit diagonal
    std::vector<std::vector<double>> aspect_jaccard;
    std::map<std::string, std::size_t> length_histogram; // fixed bins by token count
    double mean_token_count = 0.0;
};

CorpusStats corpus_stats(const std::vector<Review>& reviews, const Tokenizer& tokenizer);
nlohmann::json stats_to_json(const CorpusStats& stats);

} // namespace asn::data
