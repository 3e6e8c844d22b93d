#pragma once

#include <vector>

namespace sta {

// Dense power series p(x) = sum c_k x^k.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<double> c) : c_(std::move(c)) {}

  const std::vector<double>& coefficients() const { return c_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  double operator()(double x) const;
  Poly derivative() const;

  // Quotient of synthetic division by (x - root); remainder via `remainder`.
  Poly deflate(double root, double* remainder = nullptr) const;

  friend Poly operator+(const Poly& a, const Poly& b);
  friend Poly operator-(const Poly& a, const Poly& b);
  friend Poly operator*(const Poly& a, const Poly& b);
  friend Poly operator*(double k, const Poly& a);

 private:
  std::vector<double> c_;
};

// Chebyshev series f(x) = sum c_k T_k(x).
class Cheb {
 public:
  Cheb() = default;
  explicit Cheb(std::vector<double> c) : c_(std::move(c)) {}

  const std::vector<double>& coefficients() const { return c_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  double operator()(double x) const;  // Clenshaw

  Cheb deflate(double root, double* remainder = nullptr) const;

  friend Cheb operator+(const Cheb& a, const Cheb& b);
  friend Cheb operator-(const Cheb& a, const Cheb& b);
  friend Cheb operator*(const Cheb& a, const Cheb& b);
  friend Cheb operator*(double k, const Cheb& a);

 private:
  std::vector<double> c_;
};

}  // namespace sta
