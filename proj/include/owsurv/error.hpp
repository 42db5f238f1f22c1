#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace owsurv {

// Base of every error the library raises. `kind()` is a stable machine-readable
// tag that the CLI forwards in its error JSON.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept = 0;
  // Process exit code for the CLI contract: 1 data/model failure, 2 usage.
  virtual int exit_code() const noexcept { return 1; }
};

// Bad user configuration (missing column, inconsistent options).
class ConfigurationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "configuration_error"; }
  int exit_code() const noexcept override { return 2; }
};

// Caller violated an API precondition.
class UsageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "usage_error"; }
  int exit_code() const noexcept override { return 2; }
};

// Input data violate a dataset invariant. `row` is 1-based within the data
// rows (header excluded), 0 when the problem is not tied to one row.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg, std::size_t row = 0)
      : Error(msg), row_(row) {}
  const char* kind() const noexcept override { return "data_error"; }
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// A model could not be fitted. Carries the last iterate when available.
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& msg, std::vector<double> last_iterate = {},
                      double score_norm = 0.0)
      : Error(msg), last_iterate_(std::move(last_iterate)), score_norm_(score_norm) {}
  const char* kind() const noexcept override { return "model_error"; }
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double score_norm() const noexcept { return score_norm_; }

 private:
  std::vector<double> last_iterate_;
  double score_norm_;
};

class EstimationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "estimation_error"; }
};

// Propensity scores too close to 0 or 1 for inverse weighting.
class PositivityError : public EstimationError {
 public:
  PositivityError(const std::string& msg, std::vector<std::size_t> rows)
      : EstimationError(msg), rows_(std::move(rows)) {}
  const char* kind() const noexcept override { return "positivity_error"; }
  const std::vector<std::size_t>& rows() const noexcept { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

class VarianceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "variance_error"; }
};

}  // namespace owsurv
