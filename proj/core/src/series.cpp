#include "sta/series.hpp"

#include <algorithm>
#include <cstdlib>

namespace sta {
namespace {

std::vector<double> add(const std::vector<double>& a, const std::vector<double>& b,
                        double sign) {
  std::vector<double> r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += sign * b[i];
  return r;
}

}  // namespace

double Poly::operator()(double x) const {
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Poly Poly::derivative() const {
  if (c_.size() <= 1) return Poly({0.0});
  std::vector<double> d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
  return Poly(std::move(d));
}

Poly Poly::deflate(double root, double* remainder) const {
  if (c_.size() <= 1) {
    if (remainder) *remainder = c_.empty() ? 0.0 : c_[0];
    return Poly({0.0});
  }
  std::vector<double> q(c_.size() - 1);
  double carry = c_.back();
  for (std::size_t k = c_.size() - 1; k-- > 0;) {
    q[k] = carry;
    carry = c_[k] + root * carry;
  }
  if (remainder) *remainder = carry;
  return Poly(std::move(q));
}

Poly operator+(const Poly& a, const Poly& b) { return Poly(add(a.c_, b.c_, 1.0)); }
Poly operator-(const Poly& a, const Poly& b) { return Poly(add(a.c_, b.c_, -1.0)); }

Poly operator*(const Poly& a, const Poly& b) {
  if (a.c_.empty() || b.c_.empty()) return Poly({0.0});
  std::vector<double> r(a.c_.size() + b.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
  return Poly(std::move(r));
}

Poly operator*(double k, const Poly& a) {
  std::vector<double> r = a.c_;
  for (auto& v : r) v *= k;
  return Poly(std::move(r));
}

double Cheb::operator()(double x) const {
  if (c_.empty()) return 0.0;
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = c_.size() - 1; k >= 1; --k) {
    double b0 = 2.0 * x * b1 - b2 + c_[k];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + c_[0];
}

Cheb Cheb::deflate(double root, double* remainder) const {
  const int n = degree();
  if (n <= 0) {
    if (remainder) *remainder = c_.empty() ? 0.0 : c_[0];
    return Cheb({0.0});
  }
  // (x - r) q(x) = c(x) - rem, using x T_k = (T_{k+1} + T_{k-1}) / 2.
  std::vector<double> d(n + 2, 0.0);
  for (int m = n; m >= 2; --m) d[m - 1] = 2.0 * (c_[m] + root * d[m]) - d[m + 1];
  d[0] = c_[1] + root * d[1] - 0.5 * d[2];
  if (remainder) *remainder = c_[0] - 0.5 * d[1] + root * d[0];
  d.resize(n);
  return Cheb(std::move(d));
}

Cheb operator+(const Cheb& a, const Cheb& b) { return Cheb(add(a.c_, b.c_, 1.0)); }
Cheb operator-(const Cheb& a, const Cheb& b) { return Cheb(add(a.c_, b.c_, -1.0)); }

Cheb operator*(const Cheb& a, const Cheb& b) {
  if (a.c_.empty() || b.c_.empty()) return Cheb({0.0});
  std::vector<double> r(a.c_.size() + b.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    for (std::size_t j = 0; j < b.c_.size(); ++j) {
      double h = 0.5 * a.c_[i] * b.c_[j];
      r[i + j] += h;
      r[i > j ? i - j : j - i] += h;
    }
  return Cheb(std::move(r));
}

Cheb operator*(double k, const Cheb& a) {
  std::vector<double> r = a.c_;
  for (auto& v : r) v *= k;
  return Cheb(std::move(r));
}

}  // namespace sta
