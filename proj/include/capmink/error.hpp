#pragma once

#include <stdexcept>
#include <string>

namespace capmink {

enum class ErrorCode : int {
  Ok = 0,
  Domain = 1,
  Schema = 2,
  NonConvergence = 3,
  DegenerateBody = 4,
  GridTooCoarse = 5,
  Unbounded = 6,
  Inadmissible = 7,
  LevelOutsideGrid = 8,
  DegenerateCollapse = 9,
  Internal = 10,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace capmink
