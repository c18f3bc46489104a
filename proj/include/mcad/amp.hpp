#pragma once

// Multiple-measurement-vector AMP with the Bernoulli-Gaussian posterior-mean
// denoiser:
//
//   X^{t+1} = eta_t(S^H Z^t + X^t)
//   Z^{t+1} = Y - S X^{t+1} + (K/L) Z^t <eta'_t>
//
// where K is the number of columns of S (N in massive-MIMO mode, N B in
// cooperative mode) and <eta'> is the row-averaged M x M Jacobian.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "mcad/errors.hpp"
#include "mcad/signal.hpp"
#include "mcad/special_functions.hpp"

namespace mcad {

enum class TauMode {
  empirical,        ///< tau_t^2 = ||Z^t||_F^2 / (L M)
  state_evolution,  ///< tau_t^2 taken from a precomputed trace
};

struct AmpConfig {
  int max_iters = 50;
  double damping = 0.0;
  double convergence_tol = 1e-6;
  TauMode tau_mode = TauMode::empirical;
  std::vector<double> se_tau_sq;  ///< used when tau_mode == state_evolution
  bool onsager = true;            ///< debug switch; false turns AMP into plain iterative shrinkage

  void validate() const {
    if (max_iters < 1) throw ConfigError("AmpConfig: max_iters must be >= 1");
    if (!(convergence_tol > 0.0)) throw ConfigError("AmpConfig: convergence_tol must be positive");
    if (!(damping >= 0.0 && damping < 1.0)) throw ConfigError("AmpConfig: damping must lie in [0, 1)");
    if (tau_mode == TauMode::state_evolution && se_tau_sq.empty()) {
      throw ConfigError("AmpConfig: state_evolution mode needs a tau trace");
    }
  }
};

struct AmpIterate {
  int iteration = 0;
  double tau_sq = 0.0;
  double residual_norm = 0.0;
};

/// Matched-filter rows x~ = (S^H Z + X) at the final iteration.
struct MatchedFilterOutput {
  ComplexMatrix x_tilde;              ///< K x M
  std::vector<double> squared_norms;  ///< ||x~_k||^2
  double tau_sq_final = 0.0;
  std::vector<double> gains;          ///< g_k used by the denoiser
  std::vector<AmpIterate> trace;
  int iterations = 0;
  bool converged = false;
};

/// Scalar factor c(||x~||^2) of the denoiser eta(x~) = c x~ and its derivative
/// with respect to ||x~||^2.
struct Shrinkage {
  double factor = 0.0;
  double derivative = 0.0;
};

inline Shrinkage shrinkage(double norm_sq, double g, double tau_sq, double lambda, int antennas) {
  if (!(tau_sq > 0.0)) throw DomainError("denoiser: tau^2 must be positive");
  if (!(g >= 0.0)) throw DomainError("denoiser: g must be non-negative");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("denoiser: lambda must lie in (0, 1]");
  if (g == 0.0) return {};
  const double g2 = g * g;
  const double theta = g2 / tau_sq;
  const double linear = theta / (1.0 + theta);
  const double delta = g2 / (tau_sq * (g2 + tau_sq));
  // Posterior activity probability 1 / (1 + q), q = (1-lambda)/lambda (1+theta)^M e^{-delta ||x~||^2}.
  const double log_q = std::log1p(-lambda) - std::log(lambda) + antennas * std::log1p(theta) - delta * norm_sq;
  const double pi = special::logistic(-log_q);
  return {linear * pi, linear * delta * pi * (1.0 - pi)};
}

/// eta(x~, g): posterior mean of a Bernoulli-Gaussian row observed in CN(0, tau^2 I) noise.
inline ComplexRow denoise(const ComplexRow& x_tilde, double g, double tau_sq, double lambda) {
  const auto s = shrinkage(x_tilde.squaredNorm(), g, tau_sq, lambda, static_cast<int>(x_tilde.size()));
  return s.factor * x_tilde;
}

/// Wirtinger Jacobian of eta in row-vector form: J(j, i) = d eta_i / d x~_j,
/// so a perturbation dx maps to dx * J. J = c I + c' x~^H x~.
inline ComplexMatrix denoise_jacobian(const ComplexRow& x_tilde, double g, double tau_sq, double lambda) {
  const auto m = x_tilde.size();
  const auto s = shrinkage(x_tilde.squaredNorm(), g, tau_sq, lambda, static_cast<int>(m));
  ComplexMatrix j = s.derivative * (x_tilde.adjoint() * x_tilde);
  j.diagonal().array() += s.factor;
  return j;
}

/// <eta'>: the Jacobian averaged over all rows of x~.
inline ComplexMatrix denoise_jacobian_mean(const ComplexMatrix& x_tilde, std::span<const double> gains,
                                           double tau_sq, double lambda) {
  const auto k = x_tilde.rows();
  const auto m = x_tilde.cols();
  if (static_cast<std::size_t>(k) != gains.size()) throw DimensionError("denoise_jacobian_mean: gains size");
  if (k == 0) throw DimensionError("denoise_jacobian_mean: no rows");
  Eigen::VectorXd dc(k);
  double mean_factor = 0.0;
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto s = shrinkage(x_tilde.row(r).squaredNorm(), gains[r], tau_sq, lambda, static_cast<int>(m));
    mean_factor += s.factor;
    dc[r] = s.derivative;
  }
  ComplexMatrix j = x_tilde.adjoint() * (dc.asDiagonal() * x_tilde);
  j /= static_cast<double>(k);
  j.diagonal().array() += mean_factor / static_cast<double>(k);
  return j;
}

/// Runs AMP on Y (L x M) with sensing matrix S (L x K) and per-column gains g.
/// noise_variance only sets a floor for the empirical tau^2 estimate.
inline MatchedFilterOutput run_amp(const ComplexMatrix& y, const ComplexMatrix& s, std::span<const double> gains,
                                   double lambda, double noise_variance, const AmpConfig& cfg = {}) {
  cfg.validate();
  const Eigen::Index l = s.rows();
  const Eigen::Index k = s.cols();
  const Eigen::Index m = y.cols();
  if (y.rows() != l) throw DimensionError("run_amp: Y has " + std::to_string(y.rows()) + " rows, S has " + std::to_string(l));
  if (static_cast<std::size_t>(k) != gains.size()) throw DimensionError("run_amp: gains size differs from columns of S");
  if (k == 0 || l == 0 || m == 0) throw DimensionError("run_amp: empty problem");
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("run_amp: lambda must lie in (0, 1)");

  const double lm = static_cast<double>(l * m);
  const double ratio = static_cast<double>(k) / static_cast<double>(l);
  const double tau_floor = std::max({noise_variance * 1e-3, y.squaredNorm() / lm * 1e-20,
                                     std::numeric_limits<double>::min()});
  auto empirical_tau = [&](const ComplexMatrix& z) { return std::max(z.squaredNorm() / lm, tau_floor); };
  auto tau_at = [&](int t, const ComplexMatrix& z) {
    if (cfg.tau_mode == TauMode::empirical) return empirical_tau(z);
    return cfg.se_tau_sq[std::min<std::size_t>(static_cast<std::size_t>(t), cfg.se_tau_sq.size() - 1)];
  };

  MatchedFilterOutput out;
  out.gains.assign(gains.begin(), gains.end());
  ComplexMatrix x = ComplexMatrix::Zero(k, m);
  ComplexMatrix z = y;
  ComplexMatrix x_tilde(k, m);
  Eigen::VectorXd factor(k);
  Eigen::VectorXd dfactor(k);

  int t = 0;
  for (; t < cfg.max_iters; ++t) {
    const double tau_sq = tau_at(t, z);
    x_tilde.noalias() = s.adjoint() * z;
    x_tilde += x;
    if (!x_tilde.allFinite() || !std::isfinite(tau_sq)) throw DivergenceError(t, "non-finite matched-filter output");
    out.trace.push_back({t, tau_sq, std::sqrt(z.squaredNorm())});

    double mean_factor = 0.0;
    for (Eigen::Index r = 0; r < k; ++r) {
      const auto sh = shrinkage(x_tilde.row(r).squaredNorm(), gains[r], tau_sq, lambda, static_cast<int>(m));
      factor[r] = sh.factor;
      dfactor[r] = sh.derivative;
      mean_factor += sh.factor;
    }
    ComplexMatrix x_next = factor.asDiagonal() * x_tilde;
    if (cfg.damping > 0.0) x_next = (1.0 - cfg.damping) * x_next + cfg.damping * x;

    ComplexMatrix z_next = y - s * x_next;
    if (cfg.onsager) {
      ComplexMatrix jac = x_tilde.adjoint() * (dfactor.asDiagonal() * x_tilde);
      jac /= static_cast<double>(k);
      jac.diagonal().array() += mean_factor / static_cast<double>(k);
      z_next.noalias() += ratio * (z * jac);
    }
    if (!z_next.allFinite()) throw DivergenceError(t, "non-finite residual");

    x = std::move(x_next);
    z = std::move(z_next);

    bool done = false;
    if (cfg.tau_mode == TauMode::empirical) {
      const double next = empirical_tau(z);
      done = std::abs(next - tau_sq) / tau_sq < cfg.convergence_tol || next <= tau_floor;
    } else {
      done = static_cast<std::size_t>(t + 1) >= cfg.se_tau_sq.size() - 1;
    }
    if (done) {
      out.converged = true;
      ++t;
      break;
    }
  }
  out.iterations = t;
  out.tau_sq_final = tau_at(t, z);
  x_tilde.noalias() = s.adjoint() * z;
  x_tilde += x;
  if (!x_tilde.allFinite()) throw DivergenceError(t, "non-finite final matched-filter output");
  out.x_tilde = std::move(x_tilde);
  out.squared_norms.resize(static_cast<std::size_t>(k));
  for (Eigen::Index r = 0; r < k; ++r) out.squared_norms[r] = out.x_tilde.row(r).squaredNorm();
  return out;
}

/// Per-iteration debug trace as CSV.
inline void write_amp_trace_csv(std::ostream& out, const MatchedFilterOutput& result) {
  out << "iteration,tau_sq,residual_norm\n";
  const auto old = out.precision(17);
  for (const auto& it : result.trace) out << it.iteration << ',' << it.tau_sq << ',' << it.residual_norm << '\n';
  out.precision(old);
}

}  // namespace mcad
