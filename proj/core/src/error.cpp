// SPDX-License-Identifier: Apache-2.0
#include "nflift/error.hpp"

namespace nflift {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kSolver: return "solver";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

static std::string compose(const std::string& what, const std::string& stage) {
  return stage.empty() ? what : "[" + stage + "] " + what;
}

Error::Error(ErrorKind kind, const std::string& what, std::string stage)
    : std::runtime_error(compose(what, stage)), kind_(kind), stage_(std::move(stage)) {}

Error Error::with_stage(const std::string& stage) const {
  if (!stage_.empty()) return *this;
  return Error(kind_, std::runtime_error::what(), stage);
}

}  // namespace nflift
