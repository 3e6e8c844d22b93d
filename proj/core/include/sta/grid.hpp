#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "sta/model.hpp"
#include "sta/state.hpp"

namespace sta {

// Uniform box [-L1, L1) x [-L2, L2) with n1 x n2 points; index (i, j) is
// stored at i * n2 + j.
struct GridGeometry {
  int n1 = 256;
  int n2 = 256;
  double L1 = 10.0;
  double L2 = 10.0;

  double dx1() const { return 2.0 * L1 / n1; }
  double dx2() const { return 2.0 * L2 / n2; }
  double q1(int i) const { return -L1 + i * dx1(); }
  double q2(int j) const { return -L2 + j * dx2(); }
  std::size_t size() const { return static_cast<std::size_t>(n1) * n2; }
};

class GridWavefunction {
 public:
  GridWavefunction() = default;
  explicit GridWavefunction(GridGeometry g)
      : geom_(g), psi_(g.size(), std::complex<double>(0.0, 0.0)) {}

  // Pure Gaussian with the given moments, normalized on the grid.
  static GridWavefunction from_gaussian(const GaussianState& state, GridGeometry g);

  const GridGeometry& geometry() const { return geom_; }
  std::vector<std::complex<double>>& data() { return psi_; }
  const std::vector<std::complex<double>>& data() const { return psi_; }

  double norm() const;  // integral of |psi|^2
  std::complex<double> overlap(const GridWavefunction& other) const;  // <this|other>
  double boundary_probability(int rows = 2) const;

 private:
  GridGeometry geom_;
  std::vector<std::complex<double>> psi_;
};

// Means and symmetrized covariance extracted from the wavefunction.
GaussianState grid_moments(const GridWavefunction& psi);

struct GridRun {
  std::vector<GaussianState> moments;  // at each requested time
  std::vector<double> norms;
  double max_boundary_probability = 0.0;
  bool boundary_leak = false;
  std::optional<double> leak_time;  // first recorded time above the threshold
  std::size_t steps = 0;
  double dt = 0.0;
  GridWavefunction final_state;
};

inline constexpr double kBoundaryLeakThreshold = 1e-6;
inline constexpr double kGridNormTolerance = 1e-8;

// Strang split-step with the potential sampled at each step midpoint.
// Between consecutive requested times the step is the largest one not
// exceeding dt_max that divides the interval evenly.
GridRun propagate_grid(const ControlSchedule& schedule, const GridWavefunction& initial,
                       const std::vector<double>& times, double dt_max);

// Box covering `sigmas` standard deviations plus the mean excursion of the
// moment trajectory with the given margin, and a spacing resolving the
// momentum spread the same way. Sizes are powers of two, at least min_n.
GridGeometry auto_geometry(const std::vector<GaussianState>& trajectory, int min_n = 256,
                           double margin = 1.25, double sigmas = 6.0, int max_n = 2048);

// Largest dt with max |w^2| dt^2 below `threshold` over the schedule.
double auto_time_step(const ControlSchedule& schedule, double threshold = 1e-3,
                      std::size_t samples = 2001);

}  // namespace sta
