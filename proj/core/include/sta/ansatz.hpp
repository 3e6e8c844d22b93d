#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sta {

enum class Boundary { start, end };

struct BoundaryConstraint {
  Boundary at;
  int order;  // derivative order
  double value;
};

// u(t) = sum_k alpha_k s^k with s = t / t_f.
class PolynomialAnsatz {
 public:
  PolynomialAnsatz() = default;
  PolynomialAnsatz(std::vector<double> coefficients, double duration);

  const std::vector<double>& coefficients() const { return coeffs_; }
  double duration() const { return tf_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  double condition_number() const { return cond_; }
  void set_condition_number(double c) { cond_ = c; }

 private:
  std::vector<double> coeffs_;
  double tf_ = 1.0;
  double cond_ = 1.0;
};

// f(t) = sum_k a_k cos(k pi t / t_f).
class CosineAnsatz {
 public:
  CosineAnsatz() = default;
  CosineAnsatz(std::vector<double> coefficients, double duration);

  const std::vector<double>& coefficients() const { return coeffs_; }
  double duration() const { return tf_; }
  int num_terms() const { return static_cast<int>(coeffs_.size()); }

 private:
  std::vector<double> coeffs_;
  double tf_ = 1.0;
};

// Affine map from free-coefficient values to full cosine coefficient vectors.
class CosineFamily {
 public:
  CosineFamily() = default;
  CosineFamily(Eigen::VectorXd particular, Eigen::MatrixXd directions,
               std::vector<int> free_indices, double duration, double cond);

  CosineAnsatz at(std::span<const double> free_values) const;
  CosineAnsatz at(std::initializer_list<double> free_values) const {
    return at(std::span<const double>(free_values.begin(), free_values.size()));
  }

  const std::vector<int>& free_indices() const { return free_; }
  std::size_t num_free() const { return free_.size(); }
  int num_terms() const { return static_cast<int>(particular_.size()); }
  double duration() const { return tf_; }
  double condition_number() const { return cond_; }

 private:
  Eigen::VectorXd particular_;
  Eigen::MatrixXd directions_;  // num_terms x num_free
  std::vector<int> free_;
  double tf_ = 1.0;
  double cond_ = 1.0;
};

PolynomialAnsatz solve_polynomial(const std::vector<BoundaryConstraint>& constraints,
                                  int degree, double duration);

// Coefficients listed in `pinned` are held at fixed values; the remaining
// non-free coefficients are solved from the constraints.
CosineFamily solve_cosine(const std::vector<BoundaryConstraint>& constraints,
                          int num_terms, const std::vector<int>& free_indices,
                          double duration,
                          const std::map<int, double>& pinned = {});

// Analytic derivative of order 0..4.
double evaluate(const PolynomialAnsatz& u, double t, int order = 0);
double evaluate(const CosineAnsatz& f, double t, int order = 0);

inline constexpr int kMaxDerivativeOrder = 4;
inline constexpr double kIllConditioned = 1e10;

}  // namespace sta
