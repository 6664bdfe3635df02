#include "core/common/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace asn::log {

static Level parse_level() {
    const char* env = std::getenv("ASPECTNET_LOG");
    if (!env) return Level::Warn;
    if (std::strcmp(env, "error") == 0) return Level::Error;
    if (std::strcmp(env, "warn") == 0) return Level::Warn;
    if (std::strcmp(env, "info") == 0) return Level::Info;
    if (std::strcmp(env, "debug") == 0) return Level::Debug;
    return Level::Warn;
}

Level threshold() {
    static Level level = parse_level();
    return level;
}

void emit(Level level, const std::string& message) {
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "[aspectnet:%s] %s\n", names[static_cast<int>(level)], message.c_str());
}

} // namespace asn::log
