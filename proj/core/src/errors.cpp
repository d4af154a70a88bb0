#include "highair/errors.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace highair {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s;
  return s;
}

}  // namespace

WarningSink set_warning_sink(WarningSink new_sink) {
  std::lock_guard lock(sink_mutex());
  return std::exchange(sink(), std::move(new_sink));
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) {
    sink()(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

}  // namespace highair
