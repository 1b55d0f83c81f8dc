#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <ctime>
#include <exception>
#include <functional>
#include <iostream>

#include "wait/core/error.h"

namespace waitsec::cli {

inline constexpr int kExitError = 1;

// Runs a subcommand body and maps thrown errors to "error: ERR_*: message".
inline int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "error: " << e.code_name() << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}

inline std::int64_t now_or(std::int64_t override_now) {
  return override_now >= 0 ? override_now : static_cast<std::int64_t>(std::time(nullptr));
}

}  // namespace waitsec::cli
