#pragma once

#include <stdexcept>
#include <string>

namespace mmsfm {

enum class Errc {
  invalid_input = 1,
  out_of_range,
  degenerate_plan,
  singular_variance,
  training_diverged,
  integration_diverged,
  parse_error,
  io_error,
  checkpoint_mismatch,
};

/// Library-wide exception. `index()` carries a step or line number when the
/// failure is tied to one (diverged training, CSV parse errors), else -1.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, long index = -1)
      : std::runtime_error(what), code_(code), index_(index) {}

  Errc code() const noexcept { return code_; }
  long index() const noexcept { return index_; }

 private:
  Errc code_;
  long index_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what, long index = -1) {
  throw Error(code, what, index);
}

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(Errc::invalid_input, what);
}

}  // namespace mmsfm
