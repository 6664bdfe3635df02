#include "core/data/review.hpp"

#include "core/common/error.hpp"

namespace asn::data {

const char* aspect_name(Aspect aspect) {
    switch (aspect) {
        case Aspect::Quality: return "Quality";
        case Aspect::Service: return "Service";
        case Aspect::Price: return "Price";
        case Aspect::Decoration: return "Decoration";
    }
    return "?";
}

const char* sentiment_name(Sentiment sentiment) {
    switch (sentiment) {
        case Sentiment::Positive: return "Positive";
        case Sentiment::Negative: return "Negative";
        case Sentiment::Neutral: return "Neutral";
    }
    return "?";
}

const char* error_tag_name(ErrorTag tag) {
    switch (tag) {
        case ErrorTag::CNP: return "CNP";
        case ErrorTag::SE: return "SE";
        case ErrorTag::IS: return "IS";
        case ErrorTag::SV: return "SV";
        case ErrorTag::CDP: return "CDP";
    }
    return "?";
}

Aspect parse_aspect(const std::string& name) {
    for (Aspect a : kAllAspects)
        if (name == aspect_name(a)) return a;
    fail(ErrorCode::Parse, "unknown aspect literal: " + name);
}

Sentiment parse_sentiment(const std::string& name) {
    for (Sentiment s : kAllSentiments)
        if (name == sentiment_name(s)) return s;
    fail(ErrorCode::Parse, "unknown sentiment literal: " + name);
}

ErrorTag parse_error_tag(const std::string& name) {
    for (ErrorTag t : {ErrorTag::CNP, ErrorTag::SE, ErrorTag::IS, ErrorTag::SV, ErrorTag::CDP})
        if (name == error_tag_name(t)) return t;
    fail(ErrorCode::Parse, "unknown error tag literal: " + name);
}

std::optional<Sentiment> Review::sentiment_for(Aspect aspect) const {
    for (const auto& ann : annotations)
        if (ann.aspect == aspect) return ann.sentiment;
    return std::nullopt;
}

} // namespace asn::data
