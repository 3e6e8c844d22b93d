#include "sta/ansatz.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sta/error.hpp"

namespace sta {
namespace {

double falling_factorial(int k, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= (k - i);
  return r;
}

void check_order(int order) {
  if (order < 0 || order > kMaxDerivativeOrder)
    throw ConfigError("derivative order " + std::to_string(order) +
                      " unsupported (0..4)");
}

// Rows are scaled by t_f^order so that everything lives in s = t / t_f.
double poly_row_entry(int k, int order, double s) {
  if (k < order) return 0.0;
  return falling_factorial(k, order) * std::pow(s, k - order);
}

double cos_row_entry(int k, int order, Boundary at) {
  // d^n/ds^n cos(k pi s) at s in {0, 1}; even n only.
  double sign = (order / 2) % 2 == 0 ? 1.0 : -1.0;
  if (at == Boundary::end && k % 2 == 1) sign = -sign;
  return sign * std::pow(k * std::numbers::pi, order);
}

std::vector<std::size_t> dependent_rows(const Eigen::MatrixXd& a) {
  std::vector<std::size_t> bad;
  Eigen::MatrixXd accepted(0, a.cols());
  Eigen::Index rank = 0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Eigen::MatrixXd trial(accepted.rows() + 1, a.cols());
    trial << accepted, a.row(r);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
    lu.setThreshold(1e-12);
    if (lu.rank() > rank) {
      accepted = trial;
      rank = lu.rank();
    } else {
      bad.push_back(static_cast<std::size_t>(r));
    }
  }
  return bad;
}

// Solves a square system, raising on singularity and warning when poorly
// conditioned; returns the condition number through `cond`.
Eigen::VectorXd dense_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            const char* what, double& cond) {
  if (a.rows() == 0) {
    cond = 1.0;
    return Eigen::VectorXd(0);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  double smax = sv(0), smin = sv(sv.size() - 1);
  if (!(smin > 1e-13 * smax)) {
    auto rows = dependent_rows(a);
    std::ostringstream msg;
    msg << "unsolvable constraints in " << what << ": singular system, rows {";
    for (std::size_t i = 0; i < rows.size(); ++i) msg << (i ? ", " : "") << rows[i];
    msg << "} are dependent on earlier rows";
    throw UnsolvableConstraints(msg.str(), rows);
  }
  cond = smax / smin;
  if (cond > kIllConditioned)
    spdlog::warn("{}: constraint matrix condition number {:.3e} exceeds {:.0e}",
                 what, cond, kIllConditioned);
  else
    spdlog::debug("{}: constraint matrix condition number {:.3e}", what, cond);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd x = lu.solve(b);
  x += lu.solve(b - a * x);  // one step of iterative refinement
  return x;
}

}  // namespace

PolynomialAnsatz::PolynomialAnsatz(std::vector<double> coefficients, double duration)
    : coeffs_(std::move(coefficients)), tf_(duration) {
  if (!(duration > 0)) throw ConfigError("ansatz duration must be positive");
  if (coeffs_.empty()) coeffs_.push_back(0.0);
}

CosineAnsatz::CosineAnsatz(std::vector<double> coefficients, double duration)
    : coeffs_(std::move(coefficients)), tf_(duration) {
  if (!(duration > 0)) throw ConfigError("ansatz duration must be positive");
  if (coeffs_.empty()) coeffs_.push_back(0.0);
}

CosineFamily::CosineFamily(Eigen::VectorXd particular, Eigen::MatrixXd directions,
                           std::vector<int> free_indices, double duration, double cond)
    : particular_(std::move(particular)),
      directions_(std::move(directions)),
      free_(std::move(free_indices)),
      tf_(duration),
      cond_(cond) {}

CosineAnsatz CosineFamily::at(std::span<const double> free_values) const {
  if (free_values.size() != free_.size())
    throw ConfigError("cosine family expects " + std::to_string(free_.size()) +
                      " free values, got " + std::to_string(free_values.size()));
  Eigen::VectorXd c = particular_;
  for (std::size_t j = 0; j < free_.size(); ++j)
    c += directions_.col(static_cast<Eigen::Index>(j)) * free_values[j];
  return CosineAnsatz(std::vector<double>(c.data(), c.data() + c.size()), tf_);
}

PolynomialAnsatz solve_polynomial(const std::vector<BoundaryConstraint>& constraints,
                                  int degree, double duration) {
  if (!(duration > 0)) throw ConfigError("ansatz duration must be positive");
  if (degree < 0) throw ConfigError("polynomial degree must be nonnegative");
  const int n = degree + 1;
  if (static_cast<int>(constraints.size()) != n)
    throw UnsolvableConstraints("polynomial of degree " + std::to_string(degree) +
                                    " needs " + std::to_string(n) + " constraints, got " +
                                    std::to_string(constraints.size()),
                                {});
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd b(n);
  for (int r = 0; r < n; ++r) {
    const auto& c = constraints[r];
    check_order(c.order);
    double s = c.at == Boundary::start ? 0.0 : 1.0;
    for (int k = 0; k < n; ++k) a(r, k) = poly_row_entry(k, c.order, s);
    b(r) = c.value * std::pow(duration, c.order);
  }
  double cond = 1.0;
  Eigen::VectorXd x = dense_solve(a, b, "solve_polynomial", cond);
  PolynomialAnsatz out(std::vector<double>(x.data(), x.data() + n), duration);
  out.set_condition_number(cond);
  return out;
}

CosineFamily solve_cosine(const std::vector<BoundaryConstraint>& constraints,
                          int num_terms, const std::vector<int>& free_indices,
                          double duration, const std::map<int, double>& pinned) {
  if (!(duration > 0)) throw ConfigError("ansatz duration must be positive");
  for (const auto& c : constraints) {
    check_order(c.order);
    if (c.order % 2 != 0)
      throw ConfigError("cosine ansatz constraints must have even derivative order");
  }
  std::vector<int> role(num_terms, 0);  // 0 solved, 1 free, 2 pinned
  for (int f : free_indices) {
    if (f < 0 || f >= num_terms || role[f] != 0)
      throw UnsolvableConstraints("invalid free index " + std::to_string(f), {});
    role[f] = 1;
  }
  for (const auto& [p, v] : pinned) {
    (void)v;
    if (p < 0 || p >= num_terms || role[p] != 0)
      throw UnsolvableConstraints("invalid pinned index " + std::to_string(p), {});
    role[p] = 2;
  }
  std::vector<int> solved;
  for (int k = 0; k < num_terms; ++k)
    if (role[k] == 0) solved.push_back(k);
  if (solved.size() != constraints.size())
    throw UnsolvableConstraints(
        "cosine ansatz: " + std::to_string(num_terms) + " terms minus " +
            std::to_string(free_indices.size()) + " free and " +
            std::to_string(pinned.size()) + " pinned leaves " +
            std::to_string(solved.size()) + " unknowns for " +
            std::to_string(constraints.size()) + " constraints",
        {});

  const auto m = static_cast<Eigen::Index>(constraints.size());
  Eigen::MatrixXd full(m, num_terms);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& c = constraints[r];
    for (int k = 0; k < num_terms; ++k) full(r, k) = cos_row_entry(k, c.order, c.at);
    rhs(r) = c.value * std::pow(duration, c.order);
  }
  Eigen::MatrixXd a(m, static_cast<Eigen::Index>(solved.size()));
  for (std::size_t j = 0; j < solved.size(); ++j) a.col(j) = full.col(solved[j]);
  for (const auto& [p, v] : pinned) rhs -= full.col(p) * v;

  Eigen::VectorXd particular = Eigen::VectorXd::Zero(num_terms);
  Eigen::MatrixXd dirs = Eigen::MatrixXd::Zero(num_terms, free_indices.size());
  double cond = 1.0;
  if (m > 0) {
    Eigen::VectorXd x = dense_solve(a, rhs, "solve_cosine", cond);
    for (std::size_t j = 0; j < solved.size(); ++j) particular(solved[j]) = x(j);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    for (std::size_t f = 0; f < free_indices.size(); ++f) {
      Eigen::VectorXd col = full.col(free_indices[f]);
      Eigen::VectorXd y = lu.solve(-col);
      y += lu.solve(-col - a * y);
      for (std::size_t j = 0; j < solved.size(); ++j) dirs(solved[j], f) = y(j);
    }
  }
  for (const auto& [p, v] : pinned) particular(p) = v;
  for (std::size_t f = 0; f < free_indices.size(); ++f) dirs(free_indices[f], f) = 1.0;
  return CosineFamily(std::move(particular), std::move(dirs), free_indices, duration, cond);
}

double evaluate(const PolynomialAnsatz& u, double t, int order) {
  check_order(order);
  const auto& c = u.coefficients();
  const double tf = u.duration();
  const double s = t / tf;
  double acc = 0.0;
  for (int k = static_cast<int>(c.size()) - 1; k >= order; --k)
    acc = acc * s + c[k] * falling_factorial(k, order);
  return acc / std::pow(tf, order);
}

double evaluate(const CosineAnsatz& f, double t, int order) {
  check_order(order);
  const double tf = f.duration();
  if (order % 2 == 1 && (t == 0.0 || t == tf)) return 0.0;
  const auto& c = f.coefficients();
  const double s = t / tf;
  const double w = std::numbers::pi / tf;
  double acc = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    double arg = static_cast<double>(k) * std::numbers::pi * s;
    double basis = 0.0;
    switch (order % 4) {
      case 0: basis = std::cos(arg); break;
      case 1: basis = -std::sin(arg); break;
      case 2: basis = -std::cos(arg); break;
      case 3: basis = std::sin(arg); break;
    }
    acc += c[k] * std::pow(static_cast<double>(k) * w, order) * basis;
  }
  return acc;
}

}  // namespace sta
