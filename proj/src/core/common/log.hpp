#pragma once

#include <sstream>
#include <string>

namespace asn::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Resolved once from ASPECTNET_LOG (error|warn|info|debug); default warn.
Level threshold();

void emit(Level level, const std::string& message);

template <typename... Args>
void write(Level level, Args&&... args) {
    if (level > threshold()) return;
    std::ostringstream oss;
    (oss << ... << args);
    emit(level, oss.str());
}

template <typename... Args> void error(Args&&... args) { write(Level::Error, std::forward<Args>(args)...); }
template <typename... Args> void warn(Args&&... args)  { write(Level::Warn, std::forward<Args>(args)...); }
template <typename... Args> void info(Args&&... args)  { write(Level::Info, std::forward<Args>(args)...); }
template <typename... Args> void debug(Args&&... args) { write(Level::Debug, std::forward<Args>(args)...); }

} // namespace asn::log
