#pragma once

#include <Eigen/Dense>

namespace sta {

// First and second central moments over (q1, q2, p1, p2), hbar = 1.
struct GaussianState {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cov = Eigen::Matrix4d::Identity() * 0.5;

  // Symmetrized raw second moments <{x_k, x_l}/2>.
  Eigen::Matrix4d second_moments() const { return cov + mean * mean.transpose(); }
};

// Williamson symplectic eigenvalues of the covariance (ascending).
Eigen::Vector2d symplectic_eigenvalues(const Eigen::Matrix4d& cov);

}  // namespace sta
