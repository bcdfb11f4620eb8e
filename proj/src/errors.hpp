#pragma once

// Error taxonomy for the lab layer and the exit-code contract of the CLI:
//   0 success, 2 invalid configuration, 3 rejection budget exhausted,
//   4 numerical failure.

#include "lineens/core.hpp"

#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>

namespace lab {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs fn, mapping exceptions to the documented exit codes and printing the
// reason to stderr.
template <class Fn>
int run_guarded(Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const config_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const lineens::rejection_exhausted& e) {
    std::fprintf(stderr,
                 "rejection budget exhausted: %s (attempts=%lld, "
                 "acceptance upper bound %.3e)\n",
                 e.what(), e.attempts, e.acceptance_upper_bound());
    return 3;
  } catch (const lineens::numeric_failure& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}

}  // namespace lab
