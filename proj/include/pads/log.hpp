#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace pads::log {

enum class Level { quiet = 0, warn = 1, info = 2 };

inline std::atomic<int>& level_ref() {
    static std::atomic<int> level{static_cast<int>(Level::quiet)};
    return level;
}

inline void set_level(Level level) { level_ref().store(static_cast<int>(level)); }

inline void write(Level level, std::string_view msg) {
    if (static_cast<int>(level) > level_ref().load()) return;
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::clog << (level == Level::warn ? "[pads warn] " : "[pads] ") << msg << '\n';
}

inline void warn(std::string_view msg) { write(Level::warn, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }

} // namespace pads::log
