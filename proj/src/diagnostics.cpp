#include "qubitdyne/diagnostics.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace qubitdyne {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink()) sink()(message);
}

WarningSink set_warning_sink(WarningSink s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  return std::exchange(sink(), std::move(s));
}

const char* library_version() { return QUBITDYNE_VERSION; }

}  // namespace qubitdyne
