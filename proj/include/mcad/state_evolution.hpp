#pragma once

// Scalar state evolution of AMP for users spread uniformly over discs.
//
// With the in-cell fading density p(g) = a g^-gamma / R_cell^2, users inside
// the detection radius r recovered and the rest treated as noise,
//
//   tau^2 <- sigma^2 + (lambda N a / (L R_cell^2)) [ int_{eps(r)}^inf psi(g) dg
//                                                   + int_{eps(R_net)}^{eps(r)} g^{2-gamma} dg ].
//
// r = R_cell is the massive-MIMO (TIN) recursion, r = R_net the cooperative one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mcad/config.hpp"
#include "mcad/errors.hpp"
#include "mcad/geometry.hpp"
#include "mcad/quadrature.hpp"
#include "mcad/special_functions.hpp"

namespace mcad {

enum class Architecture {
  tin_massive,      ///< interference treated as noise
  rec_cooperative,  ///< interference recovered over the whole network
  partial,          ///< users within a detection radius recovered
};

inline const char* architecture_name(Architecture a) {
  switch (a) {
    case Architecture::tin_massive: return "tin";
    case Architecture::rec_cooperative: return "coop";
    case Architecture::partial: return "partial";
  }
  return "?";
}

struct StateEvolutionTrace {
  Architecture architecture = Architecture::tin_massive;
  double detection_radius = 0.0;
  std::vector<double> tau_sq_seq;
  double tau_sq_inf = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SeOptions {
  double tol = 1e-9;
  int max_iters = 500;
};

namespace detail {

// (1/M!) int_0^inf t^M e^-t w(t) dt with w the posterior activity (active = true)
// or inactivity weight 1/(1+q) or q/(1+q), q = (1-lambda)/lambda (1+s)^M e^{-s t}.
inline double phi_part(double s, int m, double lambda, bool active) {
  if (!(s >= 0.0)) throw DomainError("phi_M: s must be non-negative");
  if (m < 1) throw DomainError("phi_M: M must be >= 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("phi_M: lambda must lie in (0, 1]");
  const double log_prior = std::log1p(-lambda) - std::log(lambda);
  const double log_base = log_prior + m * std::log1p(s);
  const double log_norm = special::log_factorial(m);
  auto f = [&](double t) {
    if (t <= 0.0) return 0.0;
    const double log_q = log_base - s * t;
    const double w = active ? special::logistic(-log_q) : special::logistic(log_q);
    return std::exp(m * std::log(t) - t - log_norm) * w;
  };
  double t_lo = 0.0;
  double t_hi = m + 40.0 * std::sqrt(static_cast<double>(m));
  std::vector<double> pts{static_cast<double>(m)};
  if (s > 0.0) {
    // The weight switches over a width 1/s around t0 and decays like
    // e^{-s|t - t0|} on one side; t^M e^{-t} is monotone there, so the
    // region beyond 50/s contributes below e^-50 relatively.
    const double t0 = log_base / s;
    if (active) t_lo = std::max(t_lo, t0 - 50.0 / s);
    else t_hi = std::min(t_hi, t0 + 50.0 / s);
    for (double k : {-40.0, -20.0, -10.0, -3.0, 0.0, 3.0, 10.0, 20.0, 40.0}) pts.push_back(t0 + k / s);
  }
  if (!(t_hi > t_lo)) return 0.0;
  pts.push_back(t_lo);
  pts.push_back(t_hi);
  std::erase_if(pts, [&](double p) { return p < t_lo || p > t_hi; });
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) sum += quad::integrate(f, pts[i], pts[i + 1], 1e-12);
  return sum;
}

}  // namespace detail

/// phi_M(s) / M!.
inline double phi_m_normalized(double s, int m, double lambda) { return detail::phi_part(s, m, lambda, true); }

/// 1 - phi_M(s) / M!, evaluated directly rather than by subtraction.
inline double phi_m_complement(double s, int m, double lambda) { return detail::phi_part(s, m, lambda, false); }

/// phi_M(s) = int_0^inf t^M e^-t / (1 + (1-lambda)/lambda (1+s)^M e^{-s t}) dt.
inline double phi_m(double s, int m, double lambda) {
  return std::exp(special::log_factorial(m)) * phi_m_normalized(s, m, lambda);
}

/// Per-antenna MSE of the posterior-mean denoiser for a user with gain g.
inline double denoiser_mse(double g, double tau_sq, int m, double lambda) {
  if (!(tau_sq > 0.0)) throw DomainError("denoiser_mse: tau^2 must be positive");
  const double g2 = g * g;
  if (g2 == 0.0) return 0.0;
  const double comp = phi_m_complement(g2 / tau_sq, m, lambda);
  return lambda * (g2 * tau_sq / (g2 + tau_sq) + g2 * g2 / (g2 + tau_sq) * comp);
}

/// psi(g) = g^{2-gamma} tau^2/(g^2+tau^2) + g^{4-gamma}/(g^2+tau^2) (1 - phi_M(g^2/tau^2)/M!).
inline double psi(double g, double tau_sq, int m, double lambda, double gamma) {
  if (!(g > 0.0)) throw DomainError("psi: g must be positive");
  if (!(tau_sq > 0.0)) throw DomainError("psi: tau^2 must be positive");
  const double g2 = g * g;
  const double comp = phi_m_complement(g2 / tau_sq, m, lambda);
  const double scale = std::pow(g, 2.0 - gamma) / (g2 + tau_sq);
  return scale * (tau_sq + g2 * comp);
}

/// int_{lo}^inf psi(g) dg.
inline double psi_integral(double lo, double tau_sq, int m, double lambda, double gamma) {
  if (!(lo > 0.0)) throw DomainError("psi_integral: lower limit must be positive");
  auto f = [&](double g) { return psi(g, tau_sq, m, lambda, gamma); };
  const double tau = std::sqrt(tau_sq);
  std::vector<double> pts{lo};
  for (double p : {0.25 * tau, 4.0 * tau}) {
    if (p > pts.back()) pts.push_back(p);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) sum += quad::integrate(f, pts[i], pts[i + 1]);
  return sum + quad::integrate_to_infinity(f, pts.back());
}

/// The recursion tau^2 -> RHS(tau^2) for a fixed detection radius.
class StateEvolution {
 public:
  StateEvolution(const NetworkConfig& cfg, double detection_radius) : cfg_(cfg), radius_(detection_radius) {
    cfg.validate();
    if (!(cfg.pathloss_beta_db > 20.0)) {
      throw UnsupportedParameter("state evolution requires pathloss_beta_db > 20");
    }
    if (!(cfg.activity_prob > 0.0 && cfg.activity_prob < 1.0)) {
      throw DomainError("state evolution requires 0 < activity_prob < 1");
    }
    const double r_cell = cfg.cell_radius();
    const double r_net = cfg.network_radius();
    const double slack = 1e-12 * r_net;
    if (radius_ < r_cell - slack || radius_ > r_net + slack) {
      throw DomainError("detection radius " + std::to_string(radius_) + " outside [R_cell, R_net]");
    }
    radius_ = std::clamp(radius_, r_cell, r_net);
    const auto dist = fading_dist(cfg, 0.0, r_cell);
    gamma_ = dist.gamma;
    coeff_ = cfg.activity_prob * cfg.users_per_cell * dist.a / (cfg.seq_len * r_cell * r_cell);
    eps_radius_ = fading_edge(cfg, radius_);
    const double e = 3.0 - gamma_;
    const double eps_net = fading_edge(cfg, r_net);
    noise_part_ = cfg.noise_variance() +
                  coeff_ * (std::pow(eps_radius_, e) - std::pow(eps_net, e)) / e;
    // X^0 = 0: every user contributes its full prior power, g floored at min_distance.
    // Users inside min_distance all see g(min_distance); with g^2 ~ r^-gamma that disc
    // carries a sizeable share of the total, so it is added explicitly.
    const double d0 = std::min(cfg.min_distance_m, r_cell);
    const double eps_near = fading_edge(cfg, d0);
    const double g0 = pathloss_gain(cfg, d0);
    tau0_sq_ = cfg.noise_variance() + coeff_ * (std::pow(eps_near, e) - std::pow(eps_net, e)) / e +
               cfg.activity_prob * cfg.users_per_cell * (d0 * d0) / (r_cell * r_cell) * g0 * g0 / cfg.seq_len;
  }

  double rhs(double tau_sq) const {
    return noise_part_ + coeff_ * psi_integral(eps_radius_, tau_sq, cfg_.antennas, cfg_.activity_prob, gamma_);
  }

  /// sigma^2 plus the power of the users outside the detection radius.
  double noise_floor() const { return noise_part_; }
  double initial_tau_sq() const { return tau0_sq_; }
  double detection_radius() const { return radius_; }

  StateEvolutionTrace run(Architecture arch, const SeOptions& opt = {}) const {
    StateEvolutionTrace tr;
    tr.architecture = arch;
    tr.detection_radius = radius_;
    double tau = tau0_sq_;
    tr.tau_sq_seq.push_back(tau);
    for (int t = 0; t < opt.max_iters; ++t) {
      const double next = rhs(tau);
      if (!std::isfinite(next) || !(next > 0.0)) throw DivergenceError(t, "state evolution produced " + std::to_string(next));
      tr.tau_sq_seq.push_back(next);
      tr.iterations = t + 1;
      const bool done = std::abs(next - tau) / tau < opt.tol;
      tau = next;
      if (done) {
        tr.converged = true;
        break;
      }
    }
    tr.tau_sq_inf = tau;
    return tr;
  }

 private:
  NetworkConfig cfg_;
  double radius_ = 0.0;
  double gamma_ = 0.0;
  double coeff_ = 0.0;
  double eps_radius_ = 0.0;
  double noise_part_ = 0.0;
  double tau0_sq_ = 0.0;
};

inline StateEvolutionTrace se_fixed_point_tin(const NetworkConfig& cfg, const SeOptions& opt = {}) {
  return StateEvolution(cfg, cfg.cell_radius()).run(Architecture::tin_massive, opt);
}

inline StateEvolutionTrace se_fixed_point_coop(const NetworkConfig& cfg, const SeOptions& opt = {}) {
  return StateEvolution(cfg, cfg.network_radius()).run(Architecture::rec_cooperative, opt);
}

inline StateEvolutionTrace se_partial_recovery(const NetworkConfig& cfg, double detection_radius,
                                               const SeOptions& opt = {}) {
  return StateEvolution(cfg, detection_radius).run(Architecture::partial, opt);
}

inline StateEvolutionTrace se_fixed_point(const NetworkConfig& cfg, Architecture arch, const SeOptions& opt = {}) {
  return arch == Architecture::rec_cooperative ? se_fixed_point_coop(cfg, opt) : se_fixed_point_tin(cfg, opt);
}

/// Large-B limit of the interference term (lambda N / L) (B-1) E[G_/b^2]
/// under R_net^2 = B R_cell^2.
inline double interference_limit(const NetworkConfig& cfg) {
  const double beta = cfg.pathloss_beta_db;
  if (!(beta > 20.0)) throw UnsupportedParameter("interference_limit requires pathloss_beta_db > 20");
  return cfg.activity_prob * cfg.users_per_cell / cfg.seq_len * std::pow(10.0, -cfg.pathloss_alpha_db / 10.0) *
         std::pow(cfg.cell_radius(), -beta / 10.0) / (beta / 20.0 - 1.0);
}

/// State evolution over a finite set of known gains (one AMP problem):
/// tau^2 <- sigma^2 + (1/L) sum_k mse(g_k, tau^2). Starts from the X^0 = 0 value.
inline StateEvolutionTrace se_fixed_point_gains(std::span<const double> gains, double lambda, int seq_len,
                                                int antennas, double noise_variance, const SeOptions& opt = {}) {
  if (gains.empty()) throw DimensionError("se_fixed_point_gains: no users");
  StateEvolutionTrace tr;
  double tau = noise_variance;
  for (double g : gains) tau += lambda * g * g / seq_len;
  if (!(tau > 0.0)) throw DomainError("se_fixed_point_gains: zero initial variance");
  tr.tau_sq_seq.push_back(tau);
  for (int t = 0; t < opt.max_iters; ++t) {
    double next = noise_variance;
    for (double g : gains) next += denoiser_mse(g, tau, antennas, lambda) / seq_len;
    tr.tau_sq_seq.push_back(next);
    tr.iterations = t + 1;
    const bool done = std::abs(next - tau) / tau < opt.tol;
    tau = next;
    if (done) {
      tr.converged = true;
      break;
    }
  }
  tr.tau_sq_inf = tau;
  return tr;
}

inline void write_trace_csv(std::ostream& out, const StateEvolutionTrace& tr) {
  out << "t,tau_sq\n";
  const auto old = out.precision(17);
  for (std::size_t t = 0; t < tr.tau_sq_seq.size(); ++t) out << t << ',' << tr.tau_sq_seq[t] << '\n';
  out.precision(old);
}

}  // namespace mcad
