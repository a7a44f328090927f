#ifndef NASOMETRY_STATS_HPP
#define NASOMETRY_STATS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nasometry/error.hpp"

namespace nasometry {

struct TokenRecord {
  std::string source_id;
  std::string speaker;
  std::string system;
  std::string word;
  std::string vowel;
  std::string environment;
  double t_mid_s = 0.0;
  double nasalance_pct = 0.0;

  bool operator==(const TokenRecord&) const = default;
};

// Sum (deviation) coding: level i < k-1 has 1 in column i, the last level
// has -1 everywhere. Throws InvalidArgument on fewer than 2 or duplicate
// levels.
Eigen::MatrixXd deviation_code(std::span<const std::string> levels);

// A categorical predictor with its levels (in coding order) and coding
// matrix.
struct Factor {
  std::string name;  // column prefix: "sys", "env", "vowel"
  std::vector<std::string> levels;
  Eigen::MatrixXd coding;

  static Factor make(std::string name, std::vector<std::string> levels);
  std::size_t index_of(std::string_view level) const;  // throws InvalidArgument
  std::size_t columns() const { return levels.size() - 1; }
};

// Optional explicit level orders; unset factors are ordered lexicographically.
struct LevelOrder {
  std::vector<std::string> system;
  std::vector<std::string> environment;
  std::vector<std::string> vowel;
};

// Column layout: intercept, sys, env, env:sys products (env-major), vowel.
// The vowel block is absent when only one vowel was observed.
struct DesignLayout {
  Factor system;
  Factor environment;
  std::optional<Factor> vowel;

  std::size_t columns() const;
  std::vector<std::string> column_names() const;
  // Model row for a (system, environment) cell with the given vowel weights
  // (one per vowel level; ignored when there is no vowel factor).
  Eigen::RowVectorXd cell_row(std::size_t sys, std::size_t env,
                              std::span<const double> vowel_weights) const;
  // Row for one observation.
  Eigen::RowVectorXd observation_row(std::size_t sys, std::size_t env,
                                     std::optional<std::size_t> vowel) const;
};

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> column_names;
  DesignLayout layout;
};

class RankDeficientError : public NumericError {
 public:
  RankDeficientError(const std::string& what, std::vector<std::string> aliased)
      : NumericError(what), aliased_(std::move(aliased)) {}
  const std::vector<std::string>& aliased() const { return aliased_; }

 private:
  std::vector<std::string> aliased_;
};

// Indices of columns that are (numerically) linear combinations of earlier
// columns, scanning left to right.
std::vector<std::size_t> aliased_columns(const Eigen::MatrixXd& x);

// Throws InvalidArgument on blank fields, nasalance outside [0, 100], or a
// system/environment factor with a single level; RankDeficientError when
// columns are aliased.
Design build_design(std::span<const TokenRecord> records, const LevelOrder& order = {});

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd estimates;
  Eigen::MatrixXd covariance;
  double residual_variance = 0.0;
  std::size_t residual_df = 0;
  std::size_t n_observations = 0;
  // Present when fitted through fit_model.
  std::optional<DesignLayout> layout;
};

// Least squares by Householder QR: estimates, covariance =
// sigma^2 (X'X)^-1, sigma^2 = RSS/(n-p). Throws InvalidArgument when
// n <= p and RankDeficientError on aliased columns.
FitResult ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  std::vector<std::string> names = {});

FitResult fit_model(std::span<const TokenRecord> records, const LevelOrder& order = {});

struct EmmRow {
  std::string system;
  std::string environment;
  double emm = 0.0;
  double se = 0.0;
};

struct EmmTable {
  std::vector<EmmRow> rows;  // system-major, environment-minor
  Eigen::MatrixXd linfct;    // one model row per EMM row
  Eigen::VectorXd estimates;
  Eigen::MatrixXd covariance;
  std::size_t df = 0;
  std::vector<std::string> systems;
  std::vector<std::string> environments;

  std::size_t index(std::string_view system, std::string_view environment) const;
};

// EMMs for every (system, environment) cell, vowel averaged with equal
// weights.
EmmTable emmeans(const FitResult& fit);

struct ContrastRow {
  std::string description;
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double p_adjusted = 1.0;
  // Zero standard error with a non-zero estimate: t is +-inf and p is 0.
  bool degenerate = false;
};

struct ContrastTable {
  std::vector<ContrastRow> rows;
  std::size_t family_size = 1;
};

// Estimate, SE, t and two-sided p for the linear function `l` of the
// coefficients. p_adjusted is left equal to p.
ContrastRow linear_contrast(std::string description, const Eigen::RowVectorXd& l,
                            const Eigen::VectorXd& estimates, const Eigen::MatrixXd& covariance,
                            std::size_t df);

// emm_i - emm_j for every environment pair i < j within one system.
// Bonferroni family defaults to the number of pairs.
ContrastTable pairwise_env_contrasts(const EmmTable& emms, std::string_view within_system,
                                     std::optional<std::size_t> family_size = std::nullopt);

// (emm_iA - emm_jA) - (emm_iB - emm_jB) where A, B are the first and second
// system levels. With levels {icspeech, nosey}, negative values mean the
// contrast is larger for nosey. Throws InvalidArgument unless there are
// exactly two systems. p_adjusted equals p.
ContrastRow system_difference_of_differences(const FitResult& fit,
                                             std::pair<std::size_t, std::size_t> env_pair);

// The difference of differences for every environment pair i < j.
ContrastTable difference_of_differences_table(
    const FitResult& fit, std::optional<std::size_t> family_size = std::nullopt);

// Coefficient table (estimate, se, t, p) with no adjustment.
ContrastTable coefficient_table(const FitResult& fit);

// min(1, p*m) per entry. Throws InvalidArgument on p outside [0, 1] or m < 1.
std::vector<double> bonferroni(std::span<const double> p, std::size_t m);
void apply_bonferroni(ContrastTable& table, std::size_t m);

// Two-sided tail probability 2*(1 - F_t(|t|; df)) via the regularized
// incomplete beta function. Throws InvalidArgument for df < 1.
double student_t_p(double t, double df);

}  // namespace nasometry

#endif  // NASOMETRY_STATS_HPP
