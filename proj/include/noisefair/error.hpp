#pragma once

#include <stdexcept>
#include <string>

namespace noisefair {

enum class ErrorCode {
  InvalidArgument = 1,
  Parse = 2,
  Io = 3,
  Stratification = 4,
  Estimation = 5,
  Divergence = 6,
  Verification = 7,
  Hypothesis = 8,
};

// Every failure in the library surfaces as an Error carrying a stable code;
// the C API maps the code onto nf_status one-to-one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace noisefair
