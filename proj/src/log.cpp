// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/log.hpp"

#include <atomic>
#include <iostream>

namespace rafe::log {
namespace {
std::atomic<int> g_level{static_cast<int>(Level::Info)};
std::atomic<long> g_warnings{0};

void emit(Level l, const char* tag, std::string_view msg) {
  if (static_cast<int>(l) < g_level.load()) return;
  std::cerr << '[' << tag << "] " << msg << '\n';
}
}  // namespace

void set_level(Level level) { g_level.store(static_cast<int>(level)); }
Level level() { return static_cast<Level>(g_level.load()); }

void debug(std::string_view msg) { emit(Level::Debug, "debug", msg); }
void info(std::string_view msg) { emit(Level::Info, "info", msg); }
void warn(std::string_view msg) {
  ++g_warnings;
  emit(Level::Warn, "warn", msg);
}
void error(std::string_view msg) { emit(Level::Error, "error", msg); }

long warning_count() { return g_warnings.load(); }

}  // namespace rafe::log
