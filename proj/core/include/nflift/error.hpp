// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace nflift {

enum class ErrorKind {
  kDomain,     // argument outside the documented domain
  kConfig,     // malformed or inconsistent configuration
  kNumerical,  // rank deficiency, NaN, failed factorization
  kSolver,     // optimizer diverged or did not converge
  kIo,         // file could not be read or written
};

const char* to_string(ErrorKind kind);

/// Library-wide exception. `stage` is filled in when an error crosses a
/// pipeline stage boundary (e.g. "solve", "localize").
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string stage = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

  /// Returns a copy tagged with `stage` (keeps an existing tag).
  Error with_stage(const std::string& stage) const;

 private:
  ErrorKind kind_;
  std::string stage_;
};

}  // namespace nflift
