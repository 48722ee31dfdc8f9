#pragma once

#include <stdexcept>
#include <string>

namespace radloc {

/// Scenario/config file problems: parse failures, invariant violations,
/// bad command-line combinations. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Measurement/counts data problems: schema errors, gaps, ragged rows.
/// CLI maps this to exit code 3.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Every particle received a non-finite log weight, so the ensemble cannot
/// be normalized. CLI maps this to exit code 4.
class DegenerateLikelihoodError : public std::runtime_error {
public:
  explicit DegenerateLikelihoodError(const std::string &msg)
      : std::runtime_error(msg) {}
};

} // namespace radloc
