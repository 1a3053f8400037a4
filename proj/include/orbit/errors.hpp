// Copyright 2026 The ORBIT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace orbit {

/// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorKind {
  kUser,      // bad input, bad config, violated precondition
  kBackend,   // an external model endpoint misbehaved
  kInternal,  // numerical failure or broken invariant
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define ORBIT_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

ORBIT_DEFINE_ERROR(ValidationError, kUser)
ORBIT_DEFINE_ERROR(PreconditionError, kUser)
ORBIT_DEFINE_ERROR(ConfigError, kUser)
ORBIT_DEFINE_ERROR(FormatError, kUser)
ORBIT_DEFINE_ERROR(DimensionError, kUser)
ORBIT_DEFINE_ERROR(DegenerateVectorError, kUser)
ORBIT_DEFINE_ERROR(EmptyInputError, kUser)
ORBIT_DEFINE_ERROR(ReferentialIntegrityError, kUser)
ORBIT_DEFINE_ERROR(EmptyDatabaseError, kUser)
ORBIT_DEFINE_ERROR(TemplateError, kUser)
ORBIT_DEFINE_ERROR(ParseError, kUser)
ORBIT_DEFINE_ERROR(NoQueryTurnError, kUser)
ORBIT_DEFINE_ERROR(AlignmentError, kUser)
ORBIT_DEFINE_ERROR(GroupSizeError, kUser)
ORBIT_DEFINE_ERROR(EmptyCompletionError, kBackend)
ORBIT_DEFINE_ERROR(JudgeParseError, kBackend)
ORBIT_DEFINE_ERROR(RolloutScoringError, kBackend)
ORBIT_DEFINE_ERROR(NumericalError, kInternal)

#undef ORBIT_DEFINE_ERROR

class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool retryable)
      : Error(ErrorKind::kBackend, what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

/// Raised once rubric generation has used up its attempts; keeps every rejection reason.
class GenerationFailedError : public Error {
 public:
  GenerationFailedError(const std::string& what, std::vector<std::string> reasons)
      : Error(ErrorKind::kBackend, what), reasons_(std::move(reasons)) {}
  const std::vector<std::string>& reasons() const noexcept { return reasons_; }

 private:
  std::vector<std::string> reasons_;
};

}  // namespace orbit
