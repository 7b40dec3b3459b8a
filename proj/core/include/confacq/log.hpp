#pragma once

#include <iostream>
#include <mutex>
#include <string>

namespace confacq::log {

inline std::mutex& mutex() {
  static std::mutex m;
  return m;
}

inline bool& quiet() {
  static bool q = false;
  return q;
}

inline void warn(const std::string& msg) {
  std::lock_guard<std::mutex> lock(mutex());
  std::cerr << "[confacq] warning: " << msg << '\n';
}

inline void info(const std::string& msg) {
  if (quiet()) return;
  std::lock_guard<std::mutex> lock(mutex());
  std::cerr << "[confacq] " << msg << '\n';
}

}  // namespace confacq::log
