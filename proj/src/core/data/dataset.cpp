#include "core/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "core/common/error.hpp"
#include "core/common/log.hpp"
#include "core/common/rng.hpp"

namespace asn::data {

namespace {

using nlohmann::json;

void sort_annotations(std::vector<Annotation>& annotations) {
    std::sort(annotations.begin(), annotations.end(), [](const Annotation& a, const Annotation& b) {
        return static_cast<int>(a.aspect) < static_cast<int>(b.aspect);
    });
}

// Throws asn::Error(Parse) with a row-level reason on any violation.
Review validate_row(Review review, const LoadOptions& options) {
    if (options.normalize) {
        review.text = normalize(review.text, *options.normalize);
    }
    if (review.text.empty()) fail(ErrorCode::Parse, "empty text after normalization");
    if (review.annotations.empty()) fail(ErrorCode::Parse, "no annotations");
    sort_annotations(review.annotations);
    for (std::size_t i = 1; i < review.annotations.size(); ++i) {
        if (review.annotations[i].aspect == review.annotations[i - 1].aspect)
            fail(ErrorCode::Parse, std::string("duplicate aspect: ") +
                                       aspect_name(review.annotations[i].aspect));
    }
    return review;
}

Review row_from_json_checked(const json& row) {
    if (!row.is_object()) fail(ErrorCode::Parse, "row is not a JSON object");
    Review review = review_from_json(row);
    return review;
}

// Minimal RFC-4180 reader: quoted fields, doubled quotes, embedded commas
// and newlines.
std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    char c;
    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&]() {
        if (!row.empty() || field_started || !field.empty()) {
            end_field();
            rows.push_back(row);
            row.clear();
        }
    };
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get(c);
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
            field_started = true;
        } else if (c == '\n') {
            end_row();
        } else if (c != '\r') {
            field.push_back(c);
            field_started = true;
        }
    }
    end_row();
    return rows;
}

// Pipe-delimited annotation column: "Quality:Positive|Price:Negative".
std::vector<Annotation> parse_annotation_column(const std::string& column) {
    std::vector<Annotation> annotations;
    std::stringstream ss(column);
    std::string item;
    while (std::getline(ss, item, '|')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) fail(ErrorCode::Parse, "annotation missing ':' separator: " + item);
        annotations.push_back({parse_aspect(item.substr(0, colon)), parse_sentiment(item.substr(colon + 1))});
    }
    return annotations;
}

const char* length_bin(std::size_t tokens) {
    if (tokens <= 5) return "1-5";
    if (tokens <= 10) return "6-10";
    if (tokens <= 15) return "11-15";
    if (tokens <= 20) return "16-20";
    if (tokens <= 30) return "21-30";
    if (tokens <= 50) return "31-50";
    return "51+";
}

} // namespace

json review_to_json(const Review& review) {
    json row;
    row["id"] = review.id;
    row["text"] = review.text;
    json anns = json::array();
    for (const auto& ann : review.annotations)
        anns.push_back({{"aspect", aspect_name(ann.aspect)}, {"sentiment", sentiment_name(ann.sentiment)}});
    row["annotations"] = anns;
    if (review.platform) row["platform"] = *review.platform;
    row["domain"] = review.domain;
    if (review.error_tag) row["error_tag"] = error_tag_name(*review.error_tag);
    return row;
}

Review review_from_json(const json& row) {
    Review review;
    review.id = row.value("id", "");
    if (!row.contains("text") || !row["text"].is_string()) fail(ErrorCode::Parse, "missing text field");
    review.text = row["text"].get<std::string>();
    if (!row.contains("annotations") || !row["annotations"].is_array())
        fail(ErrorCode::Parse, "missing annotations array");
    for (const auto& ann : row["annotations"]) {
        if (!ann.contains("aspect") || !ann.contains("sentiment"))
            fail(ErrorCode::Parse, "annotation missing aspect or sentiment");
        review.annotations.push_back({parse_aspect(ann["aspect"].get<std::string>()),
                                      parse_sentiment(ann["sentiment"].get<std::string>())});
    }
    if (row.contains("platform") && row["platform"].is_string())
        review.platform = row["platform"].get<std::string>();
    review.domain = row.value("domain", "source");
    if (row.contains("error_tag") && row["error_tag"].is_string())
        review.error_tag = parse_error_tag(row["error_tag"].get<std::string>());
    return review;
}

LoadReport load_dataset(const std::string& path, DatasetFormat format, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open dataset: " + path);

    LoadReport report;
    std::unordered_set<std::string> seen_ids;

    auto admit = [&](Review review, std::size_t line, const std::string& raw) {
        try {
            Review valid = validate_row(std::move(review), options);
            if (!valid.id.empty() && !seen_ids.insert(valid.id).second) {
                // ids are opaque provenance, not keys; keep both
                report.warnings.push_back("duplicate id '" + valid.id + "' at line " +
                                          std::to_string(line) + " (both kept)");
            }
            report.reviews.push_back(std::move(valid));
        } catch (const Error& e) {
            report.rejected.push_back({line, e.what(), raw});
        }
    };

    if (format == DatasetFormat::Jsonl) {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                admit(row_from_json_checked(json::parse(line)), line_no, line);
            } catch (const json::exception& e) {
                report.rejected.push_back({line_no, std::string("invalid JSON: ") + e.what(), line});
            }
        }
    } else {
        auto rows = read_csv(in);
        if (rows.empty()) fail(ErrorCode::Parse, "empty CSV: " + path);
        const auto& header = rows[0];
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
        for (const char* required : {"text", "annotations"})
            if (!col.count(required))
                fail(ErrorCode::Parse, std::string("CSV missing required column: ") + required);
        auto cell = [&](const std::vector<std::string>& r, const char* name) -> std::string {
            auto it = col.find(name);
            if (it == col.end() || it->second >= r.size()) return "";
            return r[it->second];
        };
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& r = rows[i];
            std::string raw;
            for (std::size_t j = 0; j < r.size(); ++j) raw += (j ? "," : "") + r[j];
            try {
                Review review;
                review.id = cell(r, "id");
                review.text = cell(r, "text");
                review.annotations = parse_annotation_column(cell(r, "annotations"));
                const std::string platform = cell(r, "platform");
                if (!platform.empty()) review.platform = platform;
                const std::string domain = cell(r, "domain");
                review.domain = domain.empty() ? "source" : domain;
                const std::string tag = cell(r, "error_tag");
                if (!tag.empty()) review.error_tag = parse_error_tag(tag);
                admit(std::move(review), i + 1, raw);
            } catch (const Error& e) {
                report.rejected.push_back({i + 1, e.what(), raw});
            }
        }
    }

    for (const auto& warning : report.warnings) log::warn(warning);
    if (report.reviews.empty())
        fail(ErrorCode::Parse, "no valid rows in " + path + " (" + std::to_string(report.rejected.size()) +
                                   " rejected)");
    return report;
}

void save_jsonl(const std::string& path, const std::vector<Review>& reviews) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write dataset: " + path);
    for (const auto& review : reviews) out << review_to_json(review).dump() << "\n";
}

DatasetSplit split(const std::vector<Review>& reviews, SplitRatios ratios, std::uint64_t seed,
                   bool stratified) {
    const std::size_t n = reviews.size();
    if (n < 3) fail(ErrorCode::InvalidArgument, "split: need at least 3 reviews, got " + std::to_string(n));
    const double sum = ratios.train + ratios.validation + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9)
        fail(ErrorCode::InvalidArgument, "split: ratios sum to " + std::to_string(sum) + ", expected 1");

    // generator passed by value: parallel pipelines cannot interleave state
    Rng rng = make_rng(seed, "dataset-split");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    if (stratified) {
        // group by full annotation signature, then round-robin drain so every
        // prefix is approximately label-balanced
        std::map<std::string, std::vector<std::size_t>> strata;
        for (std::size_t idx : order) {
            std::string key;
            for (const auto& ann : reviews[idx].annotations)
                key += std::string(aspect_name(ann.aspect)) + ":" + sentiment_name(ann.sentiment) + "|";
            strata[key].push_back(idx);
        }
        order.clear();
        bool drained = false;
        for (std::size_t round = 0; !drained; ++round) {
            drained = true;
            for (auto& [key, members] : strata) {
                if (round < members.size()) {
                    order.push_back(members[round]);
                    drained = false;
                }
            }
        }
    }

    const auto train_n = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.train));
    const auto val_n = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.validation));

    DatasetSplit out;
    out.seed = seed;
    out.ratios = ratios;
    for (std::size_t i = 0; i < n; ++i) {
        const Review& review = reviews[order[i]];
        if (i < train_n) out.train.push_back(review);
        else if (i < train_n + val_n) out.validation.push_back(review);
        else out.test.push_back(review);
    }
    return out;
}

std::array<std::size_t, kSentimentCount> class_distribution(const std::vector<Review>& reviews,
                                                            Aspect aspect) {
    std::array<std::size_t, kSentimentCount> counts{};
    for (const auto& review : reviews) {
        if (auto s = review.sentiment_for(aspect)) ++counts[static_cast<std::size_t>(*s)];
    }
    return counts;
}

double jaccard_similarity(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t intersection = 0;
    for (const auto& token : a) intersection += b.count(token);
    const std::size_t unions = a.size() + b.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

CorpusStats corpus_stats(const std::vector<Review>& reviews, const Tokenizer& tokenizer) {
    CorpusStats stats;
    stats.total_reviews = reviews.size();

    std::array<std::set<std::string>, kAspectCount> aspect_vocab;
    std::array<bool, kAspectCount> occupied{};
    std::size_t total_tokens = 0;

    for (const auto& review : reviews) {
        ++stats.platform_counts[review.platform.value_or("Other")];
        const auto tokens = tokenizer.tokenize(review.text);
        total_tokens += tokens.size();
        ++stats.length_histogram[length_bin(tokens.size())];
        for (const auto& ann : review.annotations) {
            const auto a = static_cast<std::size_t>(ann.aspect);
            occupied[a] = true;
            ++stats.aspect_distribution[aspect_name(ann.aspect)][static_cast<std::size_t>(ann.sentiment)];
            aspect_vocab[a].insert(tokens.begin(), tokens.end());
        }
    }
    if (!reviews.empty())
        stats.mean_token_count = static_cast<double>(total_tokens) / static_cast<double>(reviews.size());

    for (Aspect aspect : kAllAspects)
        if (occupied[static_cast<std::size_t>(aspect)]) stats.occupied_aspects.push_back(aspect);

    const std::size_t k = stats.occupied_aspects.size();
    stats.aspect_jaccard.assign(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            stats.aspect_jaccard[i][j] =
                i == j ? 1.0
                       : jaccard_similarity(aspect_vocab[static_cast<std::size_t>(stats.occupied_aspects[i])],
                                            aspect_vocab[static_cast<std::size_t>(stats.occupied_aspects[j])]);
        }
    }
    return stats;
}

json stats_to_json(const CorpusStats& stats) {
    json doc;
    doc["schema_version"] = 1;
    doc["total_reviews"] = stats.total_reviews;
    doc["platform_counts"] = stats.platform_counts;
    json dist = json::object();
    for (const auto& [aspect, counts] : stats.aspect_distribution) {
        dist[aspect] = {{"Positive", counts[0]},
                        {"Negative", counts[1]},
                        {"Neutral", counts[2]},
                        {"total", counts[0] + counts[1] + counts[2]}};
    }
    doc["aspect_distribution"] = dist;
    json labels = json::array();
    for (Aspect aspect : stats.occupied_aspects) labels.push_back(aspect_name(aspect));
    doc["aspect_jaccard"] = {{"aspects", labels}, {"matrix", stats.aspect_jaccard}};
    doc["length_histogram"] = stats.length_histogram;
    doc["mean_token_count"] = stats.mean_token_count;
    return doc;
}

} // namespace asn::data
