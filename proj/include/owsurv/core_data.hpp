#pragma once

// Dataset, design-matrix and time-grid types shared by every estimator, plus
// CSV ingestion and full-precision CSV output.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "owsurv/error.hpp"

namespace owsurv {

inline constexpr int kTreated = 1;
inline constexpr int kControl = 0;

// Right-censored observational sample: covariates X (n x p, no intercept),
// treatment A, observed time U = min(T, C) and event indicator I(T <= C).
// Validated on construction and immutable afterwards.
class SurvivalDataset {
 public:
  SurvivalDataset(Eigen::MatrixXd covariates, std::vector<int> treatment,
                  std::vector<double> time, std::vector<int> event,
                  std::vector<std::string> covariate_names = {})
      : covariates_(std::move(covariates)),
        treatment_(std::move(treatment)),
        time_(std::move(time)),
        event_(std::move(event)),
        names_(std::move(covariate_names)) {
    validate();
  }

  std::size_t n() const noexcept { return time_.size(); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(covariates_.cols()); }

  const Eigen::MatrixXd& covariates() const noexcept { return covariates_; }
  const std::vector<int>& treatment() const noexcept { return treatment_; }
  const std::vector<double>& time() const noexcept { return time_; }
  const std::vector<int>& event() const noexcept { return event_; }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }

  std::size_t arm_size(int arm) const {
    return static_cast<std::size_t>(std::count(treatment_.begin(), treatment_.end(), arm));
  }

  // Rows in the given order (duplicates allowed, as in bootstrap resamples).
  SurvivalDataset subset(std::span<const std::size_t> rows) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), covariates_.cols());
    std::vector<int> a(rows.size()), d(rows.size());
    std::vector<double> u(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto r = rows[k];
      if (r >= n()) throw UsageError("subset row index out of range");
      x.row(static_cast<Eigen::Index>(k)) = covariates_.row(static_cast<Eigen::Index>(r));
      a[k] = treatment_[r];
      u[k] = time_[r];
      d[k] = event_[r];
    }
    return SurvivalDataset(std::move(x), std::move(a), std::move(u), std::move(d), names_);
  }

  // Row indices belonging to one arm, in dataset order.
  std::vector<std::size_t> arm_rows(int arm) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n(); ++i)
      if (treatment_[i] == arm) rows.push_back(i);
    return rows;
  }

  bool operator==(const SurvivalDataset& other) const {
    return covariates_ == other.covariates_ && treatment_ == other.treatment_ &&
           time_ == other.time_ && event_ == other.event_ && names_ == other.names_;
  }

 private:
  void validate() {
    const std::size_t rows = time_.size();
    if (treatment_.size() != rows || event_.size() != rows ||
        static_cast<std::size_t>(covariates_.rows()) != rows)
      throw DataError("dataset columns have inconsistent lengths");
    if (names_.empty()) {
      for (Eigen::Index j = 0; j < covariates_.cols(); ++j)
        names_.push_back("x" + std::to_string(j + 1));
    }
    if (names_.size() != p()) throw DataError("covariate name count does not match columns");
    if (rows < 2) throw DataError("dataset needs at least 2 rows");
    for (std::size_t i = 0; i < rows; ++i) {
      if (!std::isfinite(time_[i]) || time_[i] < 0.0)
        throw DataError("time must be finite and nonnegative at row " + std::to_string(i + 1), i + 1);
      if (treatment_[i] != 0 && treatment_[i] != 1)
        throw DataError("treatment must be 0 or 1 at row " + std::to_string(i + 1), i + 1);
      if (event_[i] != 0 && event_[i] != 1)
        throw DataError("event must be 0 or 1 at row " + std::to_string(i + 1), i + 1);
      for (Eigen::Index j = 0; j < covariates_.cols(); ++j)
        if (!std::isfinite(covariates_(static_cast<Eigen::Index>(i), j)))
          throw DataError("non-finite covariate at row " + std::to_string(i + 1), i + 1);
    }
    if (arm_size(kTreated) == 0) throw DataError("treated arm is empty");
    if (arm_size(kControl) == 0) throw DataError("control arm is empty");
  }

  Eigen::MatrixXd covariates_;
  std::vector<int> treatment_;
  std::vector<double> time_;
  std::vector<int> event_;
  std::vector<std::string> names_;
};

// Intercept-augmented design [1, X] with per-column standardization used only
// to condition the solvers. Binary (0/1) columns are left untouched.
class DesignMatrix {
 public:
  explicit DesignMatrix(const Eigen::MatrixXd& covariates)
      : values_(covariates.rows(), covariates.cols() + 1),
        center_(Eigen::VectorXd::Zero(covariates.cols() + 1)),
        scale_(Eigen::VectorXd::Ones(covariates.cols() + 1)) {
    values_.col(0).setOnes();
    values_.rightCols(covariates.cols()) = covariates;
    const auto n = static_cast<double>(covariates.rows());
    for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
      const auto col = covariates.col(j);
      const bool binary = (col.array() == 0.0 || col.array() == 1.0).all();
      if (binary || n < 2) continue;
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / (n - 1.0));
      if (!(sd > 0.0)) continue;
      center_(j + 1) = mean;
      scale_(j + 1) = sd;
    }
    standardized_ = values_;
    for (Eigen::Index j = 1; j < values_.cols(); ++j)
      standardized_.col(j) = (values_.col(j).array() - center_(j)) / scale_(j);
  }

  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const Eigen::MatrixXd& standardized() const noexcept { return standardized_; }
  const Eigen::VectorXd& center() const noexcept { return center_; }
  const Eigen::VectorXd& scale() const noexcept { return scale_; }

  // Maps coefficients on the standardized design back to the raw design so
  // that values() * to_original(b) == standardized() * b.
  Eigen::VectorXd to_original(const Eigen::VectorXd& coef) const {
    Eigen::VectorXd out = coef;
    for (Eigen::Index j = 1; j < coef.size(); ++j) {
      out(j) = coef(j) / scale_(j);
      out(0) -= coef(j) * center_(j) / scale_(j);
    }
    return out;
  }

  Eigen::VectorXd to_standardized(const Eigen::VectorXd& coef) const {
    Eigen::VectorXd out = coef;
    for (Eigen::Index j = 1; j < coef.size(); ++j) {
      out(j) = coef(j) * scale_(j);
      out(0) += coef(j) * center_(j);
    }
    return out;
  }

 private:
  Eigen::MatrixXd values_;
  Eigen::MatrixXd standardized_;
  Eigen::VectorXd center_;
  Eigen::VectorXd scale_;
};

// Strictly increasing evaluation times starting at 0.
class TimeGrid {
 public:
  TimeGrid() : times_{0.0} {}

  // A leading 0 is inserted when absent.
  explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.empty() || times_.front() != 0.0) times_.insert(times_.begin(), 0.0);
    for (std::size_t k = 0; k < times_.size(); ++k) {
      if (!std::isfinite(times_[k]) || times_[k] < 0.0)
        throw UsageError("time grid entries must be finite and nonnegative");
      if (k > 0 && !(times_[k] > times_[k - 1]))
        throw UsageError("time grid must be strictly increasing");
    }
  }

  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  double operator[](std::size_t k) const { return times_[k]; }
  double t_max() const { return times_.back(); }

 private:
  std::vector<double> times_;
};

// {0} plus the sorted distinct observed event times.
inline TimeGrid default_time_grid(const SurvivalDataset& data) {
  std::vector<double> ev;
  for (std::size_t i = 0; i < data.n(); ++i)
    if (data.event()[i] == 1 && data.time()[i] > 0.0) ev.push_back(data.time()[i]);
  const bool any_event = std::find(data.event().begin(), data.event().end(), 1) != data.event().end();
  if (!any_event) throw DataError("no events observed in either arm");
  std::sort(ev.begin(), ev.end());
  ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
  return TimeGrid(std::move(ev));
}

struct ColumnMap {
  std::string time = "time";
  std::string event = "event";
  std::string treatment = "treatment";
  // Empty selects every remaining column, in file order.
  std::vector<std::string> covariates;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string s = trim(raw);
  if (s.empty()) throw DataError("missing value in column '" + column + "' at row " + std::to_string(row), row);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v))
    throw DataError("non-numeric value '" + s + "' in column '" + column + "' at row " + std::to_string(row), row);
  return v;
}

// Full-precision decimal, 17 significant digits.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline SurvivalDataset parse_csv(std::istream& in, const ColumnMap& map = {}) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV input is empty (header row required)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < header.size(); ++k) index.emplace(header[k], k);

  auto locate = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw ConfigurationError("column '" + name + "' not found in CSV header");
    return it->second;
  };
  const std::size_t ti = locate(map.time), ei = locate(map.event), ai = locate(map.treatment);

  std::vector<std::string> cov_names = map.covariates;
  if (cov_names.empty()) {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (k != ti && k != ei && k != ai) cov_names.push_back(header[k]);
  }
  std::vector<std::size_t> ci;
  for (const auto& c : cov_names) ci.push_back(locate(c));

  std::vector<double> time;
  std::vector<int> event, treat;
  std::vector<std::vector<double>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty() || detail::trim(line) == "\r") continue;
    ++row;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                          " fields, header has " + std::to_string(header.size()),
                      row);
    const double u = detail::parse_number(f[ti], row, map.time);
    if (u < 0.0) throw DataError("negative time at row " + std::to_string(row), row);
    const double d = detail::parse_number(f[ei], row, map.event);
    if (d != 0.0 && d != 1.0) throw DataError("event must be 0 or 1 at row " + std::to_string(row), row);
    const double a = detail::parse_number(f[ai], row, map.treatment);
    if (a != 0.0 && a != 1.0) throw DataError("treatment must be 0 or 1 at row " + std::to_string(row), row);
    std::vector<double> x;
    x.reserve(ci.size());
    for (std::size_t k = 0; k < ci.size(); ++k) x.push_back(detail::parse_number(f[ci[k]], row, cov_names[k]));
    time.push_back(u);
    event.push_back(static_cast<int>(d));
    treat.push_back(static_cast<int>(a));
    rows.push_back(std::move(x));
  }
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ci.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < ci.size(); ++j)
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return SurvivalDataset(std::move(cov), std::move(treat), std::move(time), std::move(event), std::move(cov_names));
}

inline SurvivalDataset load_csv(const std::string& path, const ColumnMap& map = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open input file '" + path + "'");
  return parse_csv(in, map);
}

// Canonical layout: time,event,treatment,<covariates...>.
inline void write_csv(std::ostream& out, const SurvivalDataset& data) {
  out << "time,event,treatment";
  for (const auto& name : data.covariate_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << detail::format_double(data.time()[i]) << ',' << data.event()[i] << ',' << data.treatment()[i];
    for (std::size_t j = 0; j < data.p(); ++j)
      out << ',' << detail::format_double(data.covariates()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const SurvivalDataset& data) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot open output file '" + path + "'");
  write_csv(out, data);
}

}  // namespace owsurv
