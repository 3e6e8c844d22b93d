#include "sta/grid.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "sta/error.hpp"

namespace sta {
namespace {

using cplx = std::complex<double>;

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using Buffer = std::unique_ptr<fftw_complex, FftwFree>;

Buffer make_buffer(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!p) throw SimulationError("grid buffer allocation failed", 0.0);
  return Buffer(p);
}

class Fft2 {
 public:
  explicit Fft2(const GridGeometry& g) : n_(g.size()), work_(make_buffer(g.size())) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_2d(g.n1, g.n2, work_.get(), work_.get(), FFTW_FORWARD,
                            FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(g.n1, g.n2, work_.get(), work_.get(), FFTW_BACKWARD,
                            FFTW_ESTIMATE);
  }
  ~Fft2() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  // Plans were made on `work_`; other fftw_malloc buffers share its alignment.
  void forward(fftw_complex* a) const { fftw_execute_dft(fwd_, a, a); }
  void backward(fftw_complex* a) const { fftw_execute_dft(bwd_, a, a); }
  fftw_complex* work() const { return work_.get(); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  Buffer work_;
  fftw_plan fwd_{};
  fftw_plan bwd_{};
};

cplx* as_cplx(fftw_complex* p) { return reinterpret_cast<cplx*>(p); }

std::vector<double> wavenumbers(int n, double L) {
  std::vector<double> k(n);
  const double dk = std::numbers::pi / L;
  for (int m = 0; m < n; ++m) k[m] = (m < n / 2 ? m : m - n) * dk;
  return k;
}

GaussianState moments_with(const GridWavefunction& psi, const Fft2& fft) {
  const GridGeometry& g = psi.geometry();
  const std::size_t n = g.size();
  const auto& d = psi.data();
  double w = 0, m1 = 0, m2 = 0, s11 = 0, s22 = 0, s12 = 0;
  for (int i = 0; i < g.n1; ++i) {
    const double x = g.q1(i);
    for (int j = 0; j < g.n2; ++j) {
      const double y = g.q2(j);
      const double p = std::norm(d[static_cast<std::size_t>(i) * g.n2 + j]);
      w += p;
      m1 += p * x;
      m2 += p * y;
      s11 += p * x * x;
      s22 += p * y * y;
      s12 += p * x * y;
    }
  }
  auto k1 = wavenumbers(g.n1, g.L1), k2 = wavenumbers(g.n2, g.L2);
  Buffer phi = make_buffer(n), p1 = make_buffer(n), p2 = make_buffer(n);
  std::copy(d.begin(), d.end(), as_cplx(phi.get()));
  fft.forward(phi.get());
  double pw = 0, pm1 = 0, pm2 = 0, ps11 = 0, ps22 = 0, ps12 = 0;
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * g.n2 + j;
      const cplx a = as_cplx(phi.get())[idx];
      const double p = std::norm(a);
      pw += p;
      pm1 += p * k1[i];
      pm2 += p * k2[j];
      ps11 += p * k1[i] * k1[i];
      ps22 += p * k2[j] * k2[j];
      ps12 += p * k1[i] * k2[j];
      as_cplx(p1.get())[idx] = a * k1[i] / static_cast<double>(n);
      as_cplx(p2.get())[idx] = a * k2[j] / static_cast<double>(n);
    }
  fft.backward(p1.get());
  fft.backward(p2.get());
  // Re <psi| q_i p_j |psi> is the symmetrized mixed moment.
  double x1p1 = 0, x1p2 = 0, x2p1 = 0, x2p2 = 0;
  for (int i = 0; i < g.n1; ++i) {
    const double x = g.q1(i);
    for (int j = 0; j < g.n2; ++j) {
      const double y = g.q2(j);
      const std::size_t idx = static_cast<std::size_t>(i) * g.n2 + j;
      const cplx c = std::conj(d[idx]);
      const cplx a = as_cplx(p1.get())[idx], b = as_cplx(p2.get())[idx];
      x1p1 += (c * a).real() * x;
      x1p2 += (c * b).real() * x;
      x2p1 += (c * a).real() * y;
      x2p2 += (c * b).real() * y;
    }
  }
  GaussianState s;
  s.mean << m1 / w, m2 / w, pm1 / pw, pm2 / pw;
  Eigen::Matrix4d raw;
  raw(0, 0) = s11 / w;
  raw(1, 1) = s22 / w;
  raw(0, 1) = raw(1, 0) = s12 / w;
  raw(2, 2) = ps11 / pw;
  raw(3, 3) = ps22 / pw;
  raw(2, 3) = raw(3, 2) = ps12 / pw;
  raw(0, 2) = raw(2, 0) = x1p1 / w;
  raw(0, 3) = raw(3, 0) = x1p2 / w;
  raw(1, 2) = raw(2, 1) = x2p1 / w;
  raw(1, 3) = raw(3, 1) = x2p2 / w;
  s.cov = raw - s.mean * s.mean.transpose();
  return s;
}

int next_pow2(double x, int min_n) {
  int n = min_n;
  while (n < x) n *= 2;
  return n;
}

}  // namespace

GridWavefunction GridWavefunction::from_gaussian(const GaussianState& state, GridGeometry g) {
  GridWavefunction out(g);
  const Eigen::Matrix2d sqq = state.cov.topLeftCorner<2, 2>();
  const Eigen::Matrix2d sqp = state.cov.topRightCorner<2, 2>();
  const Eigen::Matrix2d inv = sqq.inverse();
  // psi ~ exp(-d^T Z d / 2 + i <p>.d), Z = Sqq^{-1}/2 - i Sqq^{-1} Sqp.
  const Eigen::Matrix2cd z = (0.5 * inv).cast<cplx>() - cplx(0, 1) * (inv * sqp).cast<cplx>();
  const double mq1 = state.mean(0), mq2 = state.mean(1);
  const double mp1 = state.mean(2), mp2 = state.mean(3);
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      const double a = g.q1(i) - mq1, b = g.q2(j) - mq2;
      const cplx quad = z(0, 0) * a * a + (z(0, 1) + z(1, 0)) * a * b + z(1, 1) * b * b;
      out.psi_[static_cast<std::size_t>(i) * g.n2 + j] =
          std::exp(-0.5 * quad + cplx(0, 1) * (mp1 * a + mp2 * b));
    }
  const double nrm = std::sqrt(out.norm());
  for (auto& v : out.psi_) v /= nrm;
  return out;
}

double GridWavefunction::norm() const {
  double s = 0.0;
  for (const auto& v : psi_) s += std::norm(v);
  return s * geom_.dx1() * geom_.dx2();
}

std::complex<double> GridWavefunction::overlap(const GridWavefunction& other) const {
  if (other.geom_.n1 != geom_.n1 || other.geom_.n2 != geom_.n2 ||
      other.geom_.L1 != geom_.L1 || other.geom_.L2 != geom_.L2)
    throw ConfigError("overlap needs identical grid geometries");
  cplx s = 0.0;
  for (std::size_t k = 0; k < psi_.size(); ++k) s += std::conj(psi_[k]) * other.psi_[k];
  return s * geom_.dx1() * geom_.dx2();
}

double GridWavefunction::boundary_probability(int rows) const {
  double s = 0.0;
  for (int i = 0; i < geom_.n1; ++i)
    for (int j = 0; j < geom_.n2; ++j) {
      bool edge = i < rows || i >= geom_.n1 - rows || j < rows || j >= geom_.n2 - rows;
      if (edge) s += std::norm(psi_[static_cast<std::size_t>(i) * geom_.n2 + j]);
    }
  return s * geom_.dx1() * geom_.dx2();
}

GaussianState grid_moments(const GridWavefunction& psi) {
  Fft2 fft(psi.geometry());
  return moments_with(psi, fft);
}

GridRun propagate_grid(const ControlSchedule& schedule, const GridWavefunction& initial,
                       const std::vector<double>& times, double dt_max) {
  if (!(dt_max > 0.0)) throw ConfigError("grid time step must be positive");
  if (times.empty()) return {};
  const GridGeometry& g = initial.geometry();
  const std::size_t n = g.size();
  Fft2 fft(g);
  Buffer psi = make_buffer(n);
  std::copy(initial.data().begin(), initial.data().end(), as_cplx(psi.get()));
  auto k1 = wavenumbers(g.n1, g.L1), k2 = wavenumbers(g.n2, g.L2);
  std::vector<double> ksq(n), q1(g.n1), q2(g.n2);
  for (int i = 0; i < g.n1; ++i) q1[i] = g.q1(i);
  for (int j = 0; j < g.n2; ++j) q2[j] = g.q2(j);
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j)
      ksq[static_cast<std::size_t>(i) * g.n2 + j] = k1[i] * k1[i] + k2[j] * k2[j];
  std::vector<cplx> kinetic(n);
  double kinetic_dt = -1.0;
  const double inv_n = 1.0 / static_cast<double>(n);

  GridRun run;
  const double norm0 = initial.norm();
  GridWavefunction current(g);
  auto record = [&](double t) {
    std::copy(as_cplx(psi.get()), as_cplx(psi.get()) + n, current.data().begin());
    double nrm = current.norm();
    if (std::abs(nrm - norm0) > kGridNormTolerance)
      throw SimulationError("grid norm drift " + std::to_string(nrm - norm0) + " at t=" +
                                std::to_string(t),
                            t);
    double edge = current.boundary_probability();
    run.max_boundary_probability = std::max(run.max_boundary_probability, edge);
    if (edge > kBoundaryLeakThreshold && !run.boundary_leak) {
      run.boundary_leak = true;
      run.leak_time = t;
    }
    run.norms.push_back(nrm);
    run.moments.push_back(moments_with(current, fft));
  };

  auto half_potential = [&](cplx* a, const ControlValues& v, double dt) {
    const double h = -0.5 * dt;
    for (int i = 0; i < g.n1; ++i) {
      const double x = q1[i];
      const double vx = 0.5 * v.omega1_sq * x * x;
      cplx* row = a + static_cast<std::size_t>(i) * g.n2;
      for (int j = 0; j < g.n2; ++j) {
        const double y = q2[j];
        const double pot = vx + 0.5 * v.omega2_sq * y * y - v.gamma * x * y;
        row[j] *= std::polar(1.0, h * pot);
      }
    }
  };

  record(times.front());
  cplx* a = as_cplx(psi.get());
  double max_dt = 0.0;
  for (std::size_t r = 1; r < times.size(); ++r) {
    const double t0 = times[r - 1], len = times[r] - t0;
    auto steps = static_cast<std::size_t>(std::ceil(len / dt_max - 1e-9));
    if (steps == 0) steps = 1;
    const double dt = len / static_cast<double>(steps);
    max_dt = std::max(max_dt, dt);
    if (std::abs(dt - kinetic_dt) > 1e-15 * dt) {
      for (std::size_t k = 0; k < n; ++k) kinetic[k] = std::polar(inv_n, -0.5 * ksq[k] * dt);
      kinetic_dt = dt;
    }
    for (std::size_t s = 0; s < steps; ++s) {
      const double tm = t0 + (static_cast<double>(s) + 0.5) * dt;
      const ControlValues v = schedule(tm);
      half_potential(a, v, dt);
      fft.forward(psi.get());
      for (std::size_t k = 0; k < n; ++k) a[k] *= kinetic[k];
      fft.backward(psi.get());
      half_potential(a, v, dt);
      ++run.steps;
    }
    record(times[r]);
  }
  run.dt = max_dt;
  run.final_state = current;
  return run;
}

GridGeometry auto_geometry(const std::vector<GaussianState>& trajectory, int min_n,
                           double margin, double sigmas, int max_n) {
  if (trajectory.empty()) throw ConfigError("auto_geometry needs a moment trajectory");
  double qext[2] = {0, 0}, pext[2] = {0, 0};
  for (const auto& s : trajectory)
    for (int a = 0; a < 2; ++a) {
      qext[a] = std::max(qext[a], std::abs(s.mean(a)) + sigmas * std::sqrt(s.cov(a, a)));
      pext[a] = std::max(pext[a],
                         std::abs(s.mean(2 + a)) + sigmas * std::sqrt(s.cov(2 + a, 2 + a)));
    }
  GridGeometry g;
  g.L1 = margin * qext[0];
  g.L2 = margin * qext[1];
  // Nyquist wavenumber pi n / (2 L) must cover the padded momentum extent.
  g.n1 = std::min(max_n, next_pow2(2.0 * g.L1 * margin * pext[0] / std::numbers::pi, min_n));
  g.n2 = std::min(max_n, next_pow2(2.0 * g.L2 * margin * pext[1] / std::numbers::pi, min_n));
  return g;
}

double auto_time_step(const ControlSchedule& schedule, double threshold,
                      std::size_t samples) {
  double w = 0.0;
  for (double t : uniform_grid(schedule.duration(), samples)) {
    ControlValues v = schedule(t);
    NormalModeFrame f = normal_modes(v.omega1_sq, v.omega2_sq, v.gamma);
    w = std::max({w, std::abs(v.omega1_sq), std::abs(v.omega2_sq), std::abs(f.Omega_l_sq),
                  std::abs(f.Omega_t_sq)});
  }
  if (w == 0.0) return schedule.duration() / 100.0;
  return std::sqrt(threshold / w);
}

}  // namespace sta
