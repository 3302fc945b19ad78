#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace lqgd::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

// Controlled by LQG_DECEIVE_LOG in {error, info, debug}; defaults to error.
inline Level level() {
    static const Level lvl = [] {
        const char* env = std::getenv("LQG_DECEIVE_LOG");
        if (!env)
            return Level::Error;
        const std::string v(env);
        if (v == "debug")
            return Level::Debug;
        if (v == "info")
            return Level::Info;
        return Level::Error;
    }();
    return lvl;
}

inline void info(const std::string& msg) {
    if (level() >= Level::Info)
        std::cerr << "[info] " << msg << "\n";
}

inline void debug(const std::string& msg) {
    if (level() >= Level::Debug)
        std::cerr << "[debug] " << msg << "\n";
}

inline void error(const std::string& msg) { std::cerr << "[error] " << msg << "\n"; }

}  // namespace lqgd::log
