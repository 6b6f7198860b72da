// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fw {

// Library-wide error codes. The C API maps these 1:1 onto fw_status values.
enum class Status {
  Ok = 0,
  ShapeMismatch,
  EmptySequence,
  RecordMismatch,
  StrategyUnsupported,
  ActionOutOfRange,
  SpecInvalid,
  TokenOutOfRange,
  EmptyMask,
  NonFiniteGradient,
  ConfigInvalid,
  IoError,
};

const char* status_name(Status s);

class Error : public std::runtime_error {
 public:
  Error(Status code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Status code() const { return code_; }

 private:
  Status code_;
};

[[noreturn]] inline void raise(Status code, const std::string& what) { throw Error(code, what); }

}  // namespace fw
