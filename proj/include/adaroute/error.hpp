// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace adaroute {

/// Root of every error raised by the library.
///
/// Errors are split into two families so the CLI can map them to exit codes:
/// IoError (exit 3) and everything else (validation / configuration, exit 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ADAROUTE_DEFINE_ERROR(Name)         \
  class Name : public Error {               \
   public:                                  \
    explicit Name(const std::string& what)  \
        : Error(#Name ": " + what) {}       \
  }

ADAROUTE_DEFINE_ERROR(DimensionError);
ADAROUTE_DEFINE_ERROR(MissingLayerError);
ADAROUTE_DEFINE_ERROR(FormatError);
ADAROUTE_DEFINE_ERROR(ValidationError);
ADAROUTE_DEFINE_ERROR(NotFoundError);
ADAROUTE_DEFINE_ERROR(EmptyTaskError);
ADAROUTE_DEFINE_ERROR(EncoderMismatchError);
ADAROUTE_DEFINE_ERROR(EmptyCatalogError);
ADAROUTE_DEFINE_ERROR(EvaluationError);
ADAROUTE_DEFINE_ERROR(EmptyPoolError);
ADAROUTE_DEFINE_ERROR(InsufficientBudgetError);
ADAROUTE_DEFINE_ERROR(IncompatibleAdaptersError);
ADAROUTE_DEFINE_ERROR(UnpairedTaskError);
ADAROUTE_DEFINE_ERROR(TooFewPointsError);
ADAROUTE_DEFINE_ERROR(ConfigError);
ADAROUTE_DEFINE_ERROR(IoError);

#undef ADAROUTE_DEFINE_ERROR

}  // namespace adaroute
