#include "spinrat/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace spinrat::log {

namespace {
std::atomic<Level> g_level{Level::Warn};
std::mutex g_mutex;

void emit(Level lvl, const char* tag, std::string_view msg) {
    if (lvl < g_level.load()) return;
    std::lock_guard<std::mutex> lock(g_mutex);
    std::clog << "[" << tag << "] " << msg << '\n';
}
}  // namespace

void set_level(Level level) noexcept { g_level.store(level); }
Level level() noexcept { return g_level.load(); }

void debug(std::string_view msg) { emit(Level::Debug, "debug", msg); }
void info(std::string_view msg) { emit(Level::Info, "info", msg); }
void warn(std::string_view msg) { emit(Level::Warn, "warn", msg); }
void error(std::string_view msg) { emit(Level::Error, "error", msg); }

}  // namespace spinrat::log
