#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sta/ansatz.hpp"
#include "sta/error.hpp"
#include "sta/invariant.hpp"
#include "sta/model.hpp"
#include "sta/ode.hpp"

namespace sta {

struct TransferSpec {
  double omega1_0 = 1.0;
  double omega2_0 = 1.0;
  double omega1_f = 1.0;
  double omega2_f = 1.0;
  double gamma_0 = 1.0;
  double gamma_f = 1.0;
  double tf = 1.0;
  std::optional<double> c0;  // defaults to sqrt(2 omega1(0))
  // Pinned index-0 coefficients of the imaginary-part series (u1, u2).
  std::array<double, 2> index0 = {2.5, 2.5};

  double c0_value() const;
  void validate() const;
};

// Five-term cosine series for gamma with gamma(t_b) fixed, gamma'' (t_b) = 0
// and index 4 free.
CosineFamily gamma_family(const TransferSpec& spec);

struct ImaginaryParts {
  CosineFamily u1;  // free index {6}
  CosineFamily u2;  // free index {6}
};

ImaginaryParts build_imaginary_parts(const TransferSpec& spec);

// Pointwise w_i^2 = (gamma u_j - u_i'') / u_i, with the L'Hopital limit where
// u_i has its boundary zero.
std::pair<double, double> reconstruct_frequencies(const CosineAnsatz& u1I,
                                                  const CosineAnsatz& u2I,
                                                  const CosineAnsatz& gamma, double t);

// Schedule backed by the reconstructed controls, with the boundary zeros
// removed exactly so that evaluation is well conditioned up to t_b.
ControlSchedule transfer_schedule(const CosineAnsatz& gamma, const CosineAnsatz& u1I,
                                  const CosineAnsatz& u2I);

struct ShootOptions {
  std::array<double, 3> initial_guess = {0.0, 0.0, 0.0};  // (a4, b6, c6)
  int restarts = 3;
  double perturbation = 0.5;
  std::uint64_t seed = 12345;
  double tolerance = 1e-8;
  int simplex_iterations = 3000;
  int polish_iterations = 200;
  OdeOptions ode{};
  std::size_t reference_nodes = 2001;
};

struct TransferProtocol {
  TransferSpec spec;
  CosineAnsatz gamma;
  CosineAnsatz u1I;
  CosineAnsatz u2I;
  ControlSchedule schedule;
  ReferenceSolution reference;  // complex, real parts integrated
  std::array<double, 3> coefficients{};
  std::array<double, 4> final_residuals{};
  double residual = 0.0;
  int evaluations = 0;
  int attempts = 0;
};

// Final-condition misfit (u1R, u1R', u2R, u2R' + c0 sqrt(w2f / 2)) at t_f.
std::array<double, 4> transfer_residuals(const TransferSpec& spec,
                                         const std::array<double, 3>& coefficients,
                                         const OdeOptions& ode = {});

TransferProtocol assemble_transfer(const TransferSpec& spec,
                                   const std::array<double, 3>& coefficients,
                                   const OdeOptions& ode = {},
                                   std::size_t reference_nodes = 2001);

// Rejection carrying the best point reached by the shooter.
class ShootingStagnated : public DesignRejected {
 public:
  ShootingStagnated(const std::string& what, std::array<double, 3> best, double residual)
      : DesignRejected(what), best_(best), residual_(residual) {}
  const std::array<double, 3>& best() const { return best_; }
  double residual() const { return residual_; }

 private:
  std::array<double, 3> best_;
  double residual_;
};

TransferProtocol shoot_transfer(const TransferSpec& spec, const ShootOptions& opt = {});

// Comparison values for the strongly coupled case; informational only.
inline constexpr std::array<double, 3> kComparisonTransferCoefficients = {-0.659, -0.383,
                                                                          -0.383};

}  // namespace sta
