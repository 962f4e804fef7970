#pragma once

#include <iostream>
#include <mutex>
#include <string>

namespace faqmap::log {

// Stderr logger, quiet unless FAQMAP_LOG is set ("warn" is the default level;
// "info" enables progress notes, "off" silences everything).

enum class Level { off = 0, warn = 1, info = 2 };

inline Level threshold() {
    static Level level = [] {
        const char* env = std::getenv("FAQMAP_LOG");
        if (!env) return Level::warn;
        std::string v(env);
        if (v == "off") return Level::off;
        if (v == "info") return Level::info;
        return Level::warn;
    }();
    return level;
}

inline std::mutex& mu() {
    static std::mutex m;
    return m;
}

inline void emit(Level level, const char* tag, const std::string& msg) {
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    std::lock_guard<std::mutex> lock(mu());
    std::cerr << "[faqmap " << tag << "] " << msg << "\n";
}

inline void warn(const std::string& msg) { emit(Level::warn, "warn", msg); }
inline void info(const std::string& msg) { emit(Level::info, "info", msg); }

}  // namespace faqmap::log
