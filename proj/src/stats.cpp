#include "nasometry/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace nasometry {

Eigen::MatrixXd deviation_code(std::span<const std::string> levels) {
  const auto k = static_cast<Eigen::Index>(levels.size());
  if (k < 2) throw InvalidArgument(fmt::format("deviation coding needs >= 2 levels, got {}", k));
  std::set<std::string> seen(levels.begin(), levels.end());
  if (seen.size() != levels.size()) {
    throw InvalidArgument(fmt::format("duplicate factor levels in [{}]", fmt::join(levels, ", ")));
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k - 1);
  for (Eigen::Index i = 0; i < k - 1; ++i) c(i, i) = 1.0;
  c.row(k - 1).setConstant(-1.0);
  return c;
}

Factor Factor::make(std::string name, std::vector<std::string> levels) {
  Eigen::MatrixXd coding = deviation_code(levels);
  return {std::move(name), std::move(levels), std::move(coding)};
}

std::size_t Factor::index_of(std::string_view level) const {
  const auto it = std::find(levels.begin(), levels.end(), level);
  if (it == levels.end()) {
    throw InvalidArgument(fmt::format("unknown level '{}' for factor {}", level, name));
  }
  return static_cast<std::size_t>(it - levels.begin());
}

std::size_t DesignLayout::columns() const {
  const std::size_t s = system.columns();
  const std::size_t e = environment.columns();
  return 1 + s + e + s * e + (vowel ? vowel->columns() : 0);
}

std::vector<std::string> DesignLayout::column_names() const {
  std::vector<std::string> names{"(Intercept)"};
  for (std::size_t i = 0; i < system.columns(); ++i) {
    names.push_back(fmt::format("sys.{}", system.levels[i]));
  }
  for (std::size_t i = 0; i < environment.columns(); ++i) {
    names.push_back(fmt::format("env.{}", environment.levels[i]));
  }
  for (std::size_t e = 0; e < environment.columns(); ++e) {
    for (std::size_t s = 0; s < system.columns(); ++s) {
      names.push_back(fmt::format("env.{}:sys.{}", environment.levels[e], system.levels[s]));
    }
  }
  if (vowel) {
    for (std::size_t i = 0; i < vowel->columns(); ++i) {
      names.push_back(fmt::format("vowel.{}", vowel->levels[i]));
    }
  }
  return names;
}

Eigen::RowVectorXd DesignLayout::cell_row(std::size_t sys, std::size_t env,
                                          std::span<const double> vowel_weights) const {
  const auto s_cols = static_cast<Eigen::Index>(system.columns());
  const auto e_cols = static_cast<Eigen::Index>(environment.columns());
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(columns()));
  Eigen::Index at = 0;
  row(at++) = 1.0;
  const Eigen::RowVectorXd s_code = system.coding.row(static_cast<Eigen::Index>(sys));
  const Eigen::RowVectorXd e_code = environment.coding.row(static_cast<Eigen::Index>(env));
  row.segment(at, s_cols) = s_code;
  at += s_cols;
  row.segment(at, e_cols) = e_code;
  at += e_cols;
  for (Eigen::Index e = 0; e < e_cols; ++e) {
    for (Eigen::Index s = 0; s < s_cols; ++s) row(at++) = e_code(e) * s_code(s);
  }
  if (vowel) {
    if (vowel_weights.size() != vowel->levels.size()) {
      throw InvalidArgument("one vowel weight per vowel level required");
    }
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(vowel->columns()));
    for (std::size_t i = 0; i < vowel_weights.size(); ++i) {
      v += vowel_weights[i] * vowel->coding.row(static_cast<Eigen::Index>(i));
    }
    row.segment(at, v.size()) = v;
  }
  return row;
}

Eigen::RowVectorXd DesignLayout::observation_row(std::size_t sys, std::size_t env,
                                                 std::optional<std::size_t> v) const {
  std::vector<double> w;
  if (vowel) {
    w.assign(vowel->levels.size(), 0.0);
    w.at(v.value()) = 1.0;
  }
  return cell_row(sys, env, w);
}

std::vector<std::size_t> aliased_columns(const Eigen::MatrixXd& x) {
  // Left-to-right Gram-Schmidt with one re-orthogonalization pass.
  std::vector<std::size_t> aliased;
  std::vector<Eigen::VectorXd> basis;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::VectorXd v = x.col(j);
    const double norm0 = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) v -= q.dot(v) * q;
    }
    const double norm = v.norm();
    if (norm0 == 0.0 || norm <= 1e-9 * norm0) {
      aliased.push_back(static_cast<std::size_t>(j));
    } else {
      basis.push_back(v / norm);
    }
  }
  return aliased;
}

namespace {

std::vector<std::string> ordered_levels(const std::set<std::string>& observed,
                                        const std::vector<std::string>& explicit_order,
                                        std::string_view factor) {
  if (explicit_order.empty()) return {observed.begin(), observed.end()};
  std::set<std::string> given(explicit_order.begin(), explicit_order.end());
  if (given.size() != explicit_order.size()) {
    throw InvalidArgument(fmt::format("duplicate levels in the {} order", factor));
  }
  if (given != observed) {
    throw InvalidArgument(fmt::format("explicit {} order [{}] does not match observed levels [{}]",
                                      factor, fmt::join(explicit_order, ", "),
                                      fmt::join(observed, ", ")));
  }
  return explicit_order;
}

RankDeficientError rank_error(const std::vector<std::size_t>& idx,
                              const std::vector<std::string>& names) {
  std::vector<std::string> cols;
  for (std::size_t i : idx) {
    cols.push_back(i < names.size() ? names[i] : fmt::format("column {}", i));
  }
  return RankDeficientError(
      fmt::format("rank-deficient design; aliased columns: {}", fmt::join(cols, ", ")), cols);
}

}  // namespace

Design build_design(std::span<const TokenRecord> records, const LevelOrder& order) {
  std::set<std::string> systems, envs, vowels;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TokenRecord& r = records[i];
    if (r.system.empty() || r.environment.empty() || r.vowel.empty()) {
      throw InvalidArgument(fmt::format("record {} has a blank system, environment or vowel", i + 1));
    }
    if (!(r.nasalance_pct >= 0.0 && r.nasalance_pct <= 100.0)) {
      throw InvalidArgument(
          fmt::format("record {} has nasalance {} outside [0, 100]", i + 1, r.nasalance_pct));
    }
    systems.insert(r.system);
    envs.insert(r.environment);
    vowels.insert(r.vowel);
  }
  if (systems.size() < 2) {
    throw InvalidArgument(fmt::format("system has {} observed level(s); need >= 2", systems.size()));
  }
  if (envs.size() < 2) {
    throw InvalidArgument(
        fmt::format("environment has {} observed level(s); need >= 2", envs.size()));
  }

  Design d;
  d.layout.system = Factor::make("sys", ordered_levels(systems, order.system, "system"));
  d.layout.environment =
      Factor::make("env", ordered_levels(envs, order.environment, "environment"));
  if (vowels.size() >= 2) {
    d.layout.vowel = Factor::make("vowel", ordered_levels(vowels, order.vowel, "vowel"));
  }
  d.column_names = d.layout.column_names();

  const auto n = static_cast<Eigen::Index>(records.size());
  d.x.resize(n, static_cast<Eigen::Index>(d.layout.columns()));
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const TokenRecord& r = records[static_cast<std::size_t>(i)];
    std::optional<std::size_t> v;
    if (d.layout.vowel) v = d.layout.vowel->index_of(r.vowel);
    d.x.row(i) = d.layout.observation_row(d.layout.system.index_of(r.system),
                                          d.layout.environment.index_of(r.environment), v);
    d.y(i) = r.nasalance_pct;
  }
  if (const auto aliased = aliased_columns(d.x); !aliased.empty()) {
    throw rank_error(aliased, d.column_names);
  }
  return d;
}

FitResult ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  std::vector<std::string> names) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n) throw InvalidArgument("response length does not match design rows");
  if (n <= p) {
    throw InvalidArgument(fmt::format("need more observations ({}) than coefficients ({})", n, p));
  }
  if (names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) names.push_back(fmt::format("x{}", j));
  }
  if (const auto aliased = aliased_columns(x); !aliased.empty()) throw rank_error(aliased, names);

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * beta;
  double rss = resid.squaredNorm();
  // Residuals at the rounding level of y are an exact fit.
  if (std::sqrt(rss) <= 64.0 * std::numeric_limits<double>::epsilon() * y.norm()) rss = 0.0;

  const Eigen::MatrixXd r =
      qr.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  FitResult fit;
  fit.names = std::move(names);
  fit.estimates = beta;
  fit.n_observations = static_cast<std::size_t>(n);
  fit.residual_df = static_cast<std::size_t>(n - p);
  fit.residual_variance = rss / static_cast<double>(n - p);
  Eigen::MatrixXd cov = fit.residual_variance * (r_inv * r_inv.transpose());
  fit.covariance = 0.5 * (cov + cov.transpose());
  return fit;
}

FitResult fit_model(std::span<const TokenRecord> records, const LevelOrder& order) {
  Design d = build_design(records, order);
  FitResult fit = ols_fit(d.x, d.y, d.column_names);
  fit.layout = std::move(d.layout);
  return fit;
}

std::size_t EmmTable::index(std::string_view system, std::string_view environment) const {
  const auto s = std::find(systems.begin(), systems.end(), system);
  const auto e = std::find(environments.begin(), environments.end(), environment);
  if (s == systems.end()) throw InvalidArgument(fmt::format("unknown system '{}'", system));
  if (e == environments.end()) {
    throw InvalidArgument(fmt::format("unknown environment '{}'", environment));
  }
  return static_cast<std::size_t>(s - systems.begin()) * environments.size() +
         static_cast<std::size_t>(e - environments.begin());
}

EmmTable emmeans(const FitResult& fit) {
  if (!fit.layout) throw InvalidArgument("fit has no factor layout; use fit_model");
  const DesignLayout& lay = *fit.layout;
  std::vector<double> weights;
  if (lay.vowel) {
    weights.assign(lay.vowel->levels.size(), 1.0 / static_cast<double>(lay.vowel->levels.size()));
  }

  EmmTable t;
  t.systems = lay.system.levels;
  t.environments = lay.environment.levels;
  t.estimates = fit.estimates;
  t.covariance = fit.covariance;
  t.df = fit.residual_df;
  const auto cells = static_cast<Eigen::Index>(t.systems.size() * t.environments.size());
  t.linfct.resize(cells, fit.estimates.size());
  Eigen::Index k = 0;
  for (std::size_t s = 0; s < t.systems.size(); ++s) {
    for (std::size_t e = 0; e < t.environments.size(); ++e, ++k) {
      const Eigen::RowVectorXd row = lay.cell_row(s, e, weights);
      t.linfct.row(k) = row;
      const double var = (row * fit.covariance * row.transpose())(0, 0);
      t.rows.push_back({t.systems[s], t.environments[e], row.dot(fit.estimates),
                        std::sqrt(std::max(0.0, var))});
    }
  }
  return t;
}

double student_t_p(double t, double df) {
  if (!(df >= 1.0)) throw InvalidArgument(fmt::format("student_t_p needs df >= 1, got {}", df));
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
  const double x = df / (df + t * t);
  return boost::math::ibeta(df / 2.0, 0.5, x);
}

ContrastRow linear_contrast(std::string description, const Eigen::RowVectorXd& l,
                            const Eigen::VectorXd& estimates, const Eigen::MatrixXd& covariance,
                            std::size_t df) {
  ContrastRow row;
  row.description = std::move(description);
  row.estimate = l.dot(estimates);
  const double var = (l * covariance * l.transpose())(0, 0);
  row.se = std::sqrt(std::max(0.0, var));
  row.df = static_cast<double>(df);
  if (row.se > 0.0) {
    row.t = row.estimate / row.se;
    row.p = student_t_p(row.t, row.df);
  } else {
    // With no sampling variance, an estimate at the rounding level of l*beta
    // is zero.
    const double scale = l.cwiseAbs().dot(estimates.cwiseAbs());
    if (std::fabs(row.estimate) <= 64.0 * std::numeric_limits<double>::epsilon() * scale) {
      row.t = 0.0;
      row.p = 1.0;
    } else {
      row.degenerate = true;
      row.t = std::copysign(std::numeric_limits<double>::infinity(), row.estimate);
      row.p = 0.0;
    }
  }
  row.p_adjusted = row.p;
  return row;
}

std::vector<double> bonferroni(std::span<const double> p, std::size_t m) {
  if (m < 1) throw InvalidArgument("Bonferroni family size must be >= 1");
  std::vector<double> out;
  out.reserve(p.size());
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument(fmt::format("p-value {} outside [0, 1]", v));
    }
    out.push_back(std::min(1.0, v * static_cast<double>(m)));
  }
  return out;
}

void apply_bonferroni(ContrastTable& table, std::size_t m) {
  std::vector<double> p;
  for (const auto& r : table.rows) p.push_back(r.p);
  const auto adj = bonferroni(p, m);
  for (std::size_t i = 0; i < adj.size(); ++i) table.rows[i].p_adjusted = adj[i];
  table.family_size = m;
}

ContrastTable pairwise_env_contrasts(const EmmTable& emms, std::string_view within_system,
                                     std::optional<std::size_t> family_size) {
  const std::size_t k = emms.environments.size();
  if (k < 2) throw InvalidArgument("pairwise contrasts need >= 2 environments");
  ContrastTable table;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto a = static_cast<Eigen::Index>(emms.index(within_system, emms.environments[i]));
      const auto b = static_cast<Eigen::Index>(emms.index(within_system, emms.environments[j]));
      const Eigen::RowVectorXd l = emms.linfct.row(a) - emms.linfct.row(b);
      table.rows.push_back(linear_contrast(
          fmt::format("{}: {} - {}", within_system, emms.environments[i], emms.environments[j]),
          l, emms.estimates, emms.covariance, emms.df));
    }
  }
  apply_bonferroni(table, family_size.value_or(table.rows.size()));
  return table;
}

ContrastRow system_difference_of_differences(const FitResult& fit,
                                             std::pair<std::size_t, std::size_t> env_pair) {
  const EmmTable emms = emmeans(fit);
  if (emms.systems.size() != 2) {
    throw InvalidArgument(fmt::format("difference of differences needs exactly 2 systems, got {}",
                                      emms.systems.size()));
  }
  const auto& envs = emms.environments;
  if (env_pair.first >= envs.size() || env_pair.second >= envs.size()) {
    throw InvalidArgument("environment index out of range");
  }
  const std::string& ei = envs[env_pair.first];
  const std::string& ej = envs[env_pair.second];
  const std::string& a = emms.systems[0];
  const std::string& b = emms.systems[1];
  auto row = [&](const std::string& s, const std::string& e) {
    return emms.linfct.row(static_cast<Eigen::Index>(emms.index(s, e)));
  };
  const Eigen::RowVectorXd l = (row(a, ei) - row(a, ej)) - (row(b, ei) - row(b, ej));
  return linear_contrast(fmt::format("({} - {}) {} - {}", ei, ej, a, b), l, emms.estimates,
                         emms.covariance, emms.df);
}

ContrastTable difference_of_differences_table(const FitResult& fit,
                                              std::optional<std::size_t> family_size) {
  if (!fit.layout) throw InvalidArgument("fit has no factor layout; use fit_model");
  const std::size_t k = fit.layout->environment.levels.size();
  ContrastTable table;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      table.rows.push_back(system_difference_of_differences(fit, {i, j}));
    }
  }
  apply_bonferroni(table, family_size.value_or(std::max<std::size_t>(1, table.rows.size())));
  return table;
}

ContrastTable coefficient_table(const FitResult& fit) {
  ContrastTable table;
  const auto p = fit.estimates.size();
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::RowVectorXd l = Eigen::RowVectorXd::Zero(p);
    l(j) = 1.0;
    table.rows.push_back(linear_contrast(fit.names[static_cast<std::size_t>(j)], l, fit.estimates,
                                         fit.covariance, fit.residual_df));
  }
  return table;
}

}  // namespace nasometry
