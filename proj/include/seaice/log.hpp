#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <utility>

namespace seaice {

enum class LogLevel { Info, Warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

inline LogSink& log_sink() {
  static LogSink sink = [](LogLevel level, const std::string& msg) {
    std::cerr << (level == LogLevel::Warning ? "warning: " : "") << msg << '\n';
  };
  return sink;
}

inline void set_log_sink(LogSink sink) { log_sink() = std::move(sink); }
inline void log_info(const std::string& msg) { log_sink()(LogLevel::Info, msg); }
inline void log_warning(const std::string& msg) { log_sink()(LogLevel::Warning, msg); }

}  // namespace seaice
