#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace asn::data {

enum class Aspect { Quality = 0, Service = 1, Price = 2, Decoration = 3 };
enum class Sentiment { Positive = 0, Negative = 1, Neutral = 2 };

// Manual annotation field from the error taxonomy; never produced by code.
enum class ErrorTag { CNP, SE, IS, SV, CDP };

inline constexpr std::size_t kAspectCount = 4;
inline constexpr std::size_t kSentimentCount = 3;

inline constexpr std::array<Aspect, kAspectCount> kAllAspects = {
    Aspect::Quality, Aspect::Service, Aspect::Price, Aspect::Decoration};
inline constexpr std::array<Sentiment, kSentimentCount> kAllSentiments = {
    Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral};

const char* aspect_name(Aspect aspect);
const char* sentiment_name(Sentiment sentiment);
const char* error_tag_name(ErrorTag tag);

// Strict parses: unknown literals throw asn::Error(Parse).
Aspect parse_aspect(const std::string& name);
Sentiment parse_sentiment(const std::string& name);
ErrorTag parse_error_tag(const std::string& name);

struct Annotation {
    Aspect aspect;
    Sentiment sentiment;

    bool operator==(const Annotation&) const = default;
};

// One review text with its (aspect, sentiment) set. Annotations are kept
// sorted by aspect and hold at most one sentiment per aspect.
struct Review {
    std::string id;
    std::string text;
    std::vector<Annotation> annotations;
    std::optional<std::string> platform;
    std::string domain = "source";
    std::optional<ErrorTag> error_tag;

    std::optional<Sentiment> sentiment_for(Aspect aspect) const;
    bool operator==(const Review&) const = default;
};

} // namespace asn::data
