#pragma once

#include <stdexcept>
#include <string>

namespace orperc {

// Malformed model, window, or parameter: the caller's input is wrong.
struct spec_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A well-posed request the engine refuses at runtime: enumeration cap
// exceeded, bracket not straddling, no certificate found, target
// unreachable in the window.
struct refusal_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace orperc
