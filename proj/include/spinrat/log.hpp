// Minimal leveled logging to stderr.

#pragma once

#include <string_view>

namespace spinrat::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_level(Level level) noexcept;
Level level() noexcept;

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);
void error(std::string_view msg);

}  // namespace spinrat::log
