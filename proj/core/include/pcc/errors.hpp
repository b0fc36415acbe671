#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcc {

/// Invalid caller-supplied data: bad dimensions, non-finite parameters,
/// out-of-range probabilities.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Stratum { high, low };

inline const char* to_string(Stratum s) { return s == Stratum::high ? "high (S > k)" : "low (S <= k)"; }

/// A PCC draw that would need more subjects from a stratum than it holds.
class InfeasibleDesign : public std::runtime_error {
 public:
  InfeasibleDesign(Stratum stratum, std::size_t requested, std::size_t available)
      : std::runtime_error("infeasible PCC design: " + std::string(to_string(stratum)) + " stratum needs " +
                           std::to_string(requested) + " subjects but holds " + std::to_string(available)),
        stratum_(stratum),
        requested_(requested),
        available_(available) {}

  Stratum stratum() const noexcept { return stratum_; }
  std::size_t requested() const noexcept { return requested_; }
  std::size_t available() const noexcept { return available_; }

 private:
  Stratum stratum_;
  std::size_t requested_;
  std::size_t available_;
};

/// Raised inside long computations when the caller's cancel flag is set.
class Cancelled : public std::runtime_error {
 public:
  Cancelled() : std::runtime_error("cancelled") {}
};

}  // namespace pcc
