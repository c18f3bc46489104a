#pragma once

// LLR-based activity decisions, multi-BS aggregation, and the analytic and
// empirical error probabilities that go with them.
//
// Given tau^2, x~ for an active user with gain g is CN(0, (g^2+tau^2) I_M)
// and for an inactive one CN(0, tau^2 I_M), so ||x~||^2 is a scaled
// Gamma(M, 1) variable under either hypothesis. The aggregated statistic
// T = sum_j Delta_j ||x~_j||^2 is therefore a weighted sum of independent
// Gamma(M, 1) variables with weights theta_j (active) or theta_j / (1+theta_j)
// (inactive).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcad/errors.hpp"
#include "mcad/quadrature.hpp"
#include "mcad/random.hpp"
#include "mcad/special_functions.hpp"
#include "mcad/stats.hpp"

namespace mcad {

// ---------------------------------------------------------------------------
// LLRs

/// Delta = 1/tau^2 - 1/(g^2+tau^2), written to stay exact for g << tau.
inline double llr_delta(double g, double tau_sq) {
  const double g2 = g * g;
  return g2 / (tau_sq * (g2 + tau_sq));
}

/// log of CN(0,(g^2+tau^2)I) over CN(0, tau^2 I) likelihoods at ||x~||^2.
inline double llr(double norm_sq, double g, double tau_sq, int antennas) {
  if (!(tau_sq > 0.0)) throw DomainError("llr: tau^2 must be positive");
  return llr_delta(g, tau_sq) * norm_sq - antennas * std::log1p(g * g / tau_sq);
}

struct LlrRecord {
  int bs = 0;
  int cell = 0;
  int user = 0;
  double squared_norm = 0.0;
  double g = 0.0;
  double delta = 0.0;
  double theta = 0.0;
  double llr = 0.0;
};

inline LlrRecord make_llr_record(int bs, int cell, int user, double norm_sq, double g, double tau_sq, int antennas) {
  LlrRecord r;
  r.bs = bs;
  r.cell = cell;
  r.user = user;
  r.squared_norm = norm_sq;
  r.g = g;
  r.delta = llr_delta(g, tau_sq);
  r.theta = g * g / tau_sq;
  r.llr = r.delta * norm_sq - antennas * std::log1p(r.theta);
  return r;
}

struct AggregatedLlr {
  double statistic = 0.0;  ///< sum_j Delta_j ||x~_j||^2
  double llr = 0.0;        ///< statistic - M sum_j log(1 + theta_j)
};

inline AggregatedLlr aggregate(std::span<const LlrRecord> records, int antennas) {
  if (records.empty()) throw DomainError("aggregate: no LLR records");
  AggregatedLlr out;
  double penalty = 0.0;
  for (const auto& r : records) {
    out.statistic += r.delta * r.squared_norm;
    penalty += antennas * std::log1p(r.theta);
  }
  out.llr = out.statistic - penalty;
  return out;
}

// ---------------------------------------------------------------------------
// Weighted sums of Gamma(M, 1) variables

enum class EvalMethod {
  closed_form,  ///< partial-fraction expansion into incomplete gammas
  series,       ///< positive gamma series (used when the expansion cancels)
  conditioned,  ///< quadrature over one component, the rest recursively
  monte_carlo,
};

inline const char* eval_method_name(EvalMethod m) {
  switch (m) {
    case EvalMethod::closed_form: return "closed_form";
    case EvalMethod::series: return "series";
    case EvalMethod::conditioned: return "conditioned";
    case EvalMethod::monte_carlo: return "monte_carlo";
  }
  return "?";
}

struct Evaluation {
  double value = 0.0;
  EvalMethod method = EvalMethod::closed_form;
};

/// Distribution of sum_j w_j R_j with R_j ~ Gamma(shape, 1) independent.
///
/// Each added term convolves the current gamma mixture with Gamma(shape, w_j)
/// using the two-pole partial fraction of the Laplace transform
///
///   1/((1+as)^p (1+bs)^q) = sum_k A_k (1+as)^-k + sum_k B_k (1+bs)^-k,
///   A_k = (a/(a-b))^q C(p+q-k-1, p-k) (-b/(a-b))^{p-k},
///
/// with B_k obtained by swapping roles. This is the nested radial integration
/// carried out one BS at a time; each step leaves a finite sum of
/// polynomial-times-exponential densities. Equal weights merge exactly into a
/// single Gamma(p+q, a). When the alternating coefficients lose more than
/// 1e-6 relative accuracy (and more than 1e-14 absolute), the CDF falls back
/// to Moschopoulos' series, whose terms are all positive, when the weights
/// span less than kSeriesSpread; otherwise it integrates over the most
/// isolated component with the remaining sum evaluated recursively.
class WeightedGammaSum {
 public:
  static constexpr std::size_t kMaxClosedFormTerms = 4;
  static constexpr double kCancellationLimit = 1e-6;
  static constexpr double kAbsoluteFloor = 1e-14;
  static constexpr double kSeriesSpread = 20.0;
  static constexpr double kSeriesTol = 1e-13;

  WeightedGammaSum(std::vector<double> weights, int shape, std::uint64_t mc_seed = 0x5eed,
                   std::size_t mc_samples = 1'000'000)
      : shape_(shape) {
    if (shape < 1) throw DomainError("WeightedGammaSum: shape must be >= 1");
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("WeightedGammaSum: weights must be finite and >= 0");
      if (w > 0.0) weights_.push_back(w);
    }
    if (weights_.empty()) return;
    if (weights_.size() > kMaxClosedFormTerms) {
      build_monte_carlo(mc_seed, mc_samples);
      return;
    }
    build_partial_fractions();
  }

  const std::vector<double>& weights() const { return weights_; }
  int shape() const { return shape_; }
  bool degenerate() const { return weights_.empty(); }
  bool monte_carlo() const { return !samples_.empty(); }

  double mean() const {
    double m = 0.0;
    for (double w : weights_) m += w * shape_;
    return m;
  }

  /// Pr(T < l).
  Evaluation cdf(double l) const { return evaluate(l, false); }

  /// Pr(T >= l).
  Evaluation survival(double l) const { return evaluate(l, true); }

  struct Term {
    double scale;
    int shape;
    double coef;
  };
  const std::vector<Term>& terms() const { return terms_; }

 private:
  static double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
  }

  void build_partial_fractions() {
    std::map<std::pair<double, int>, double> acc;
    acc[{weights_[0], shape_}] = 1.0;
    for (std::size_t j = 1; j < weights_.size(); ++j) {
      const double b = weights_[j];
      const int q = shape_;
      std::map<std::pair<double, int>, double> next;
      for (const auto& [key, c] : acc) {
        const double a = key.first;
        const int p = key.second;
        if (a == b) {
          next[{a, p + q}] += c;
          continue;
        }
        const double ra = a / (a - b);
        const double sa = -b / (a - b);
        for (int k = 1; k <= p; ++k) {
          next[{a, k}] += c * std::pow(ra, q) * binomial(q + p - k - 1, p - k) * std::pow(sa, p - k);
        }
        const double rb = b / (b - a);
        const double sb = -a / (b - a);
        for (int k = 1; k <= q; ++k) {
          next[{b, k}] += c * std::pow(rb, p) * binomial(p + q - k - 1, q - k) * std::pow(sb, q - k);
        }
      }
      acc = std::move(next);
    }
    for (const auto& [key, c] : acc) {
      if (c != 0.0) terms_.push_back({key.first, key.second, c});
    }
  }

  void build_series() const {
    if (series_ready_) return;
    series_ready_ = true;
    const double b1 = *std::min_element(weights_.begin(), weights_.end());
    series_scale_ = b1;
    series_rho_ = shape_ * static_cast<double>(weights_.size());
    double log_c = 0.0;
    for (double w : weights_) log_c += shape_ * std::log(b1 / w);
    const double c = std::exp(log_c);
    // gamma_k = sum_i alpha_i (1 - b1/b_i)^k / k;  delta_{k+1} = 1/(k+1) sum_{i=1}^{k+1} i gamma_i delta_{k+1-i}
    std::vector<double> gam{0.0};
    std::vector<double> delta{1.0};
    double mass = c;
    constexpr std::size_t kCap = 4000;
    while (mass < 1.0 - 1e-15 && delta.size() < kCap) {
      const std::size_t k = gam.size();
      double gk = 0.0;
      for (double w : weights_) gk += shape_ * std::pow(1.0 - b1 / w, static_cast<double>(k)) / k;
      gam.push_back(gk);
      double d = 0.0;
      for (std::size_t i = 1; i <= k; ++i) d += i * gam[i] * delta[k - i];
      d /= static_cast<double>(k);
      delta.push_back(d);
      mass += c * d;
    }
    series_coef_.resize(delta.size());
    for (std::size_t k = 0; k < delta.size(); ++k) series_coef_[k] = c * delta[k];
  }

  void build_monte_carlo(std::uint64_t seed, std::size_t n) {
    Rng rng(seed, Stream::monte_carlo);
    samples_.resize(n);
    for (auto& s : samples_) {
      double t = 0.0;
      for (double w : weights_) t += w * rng.gamma_integer(shape_);
      s = t;
    }
    std::sort(samples_.begin(), samples_.end());
  }

  Evaluation evaluate(double l, bool upper) const {
    if (std::isnan(l)) throw DomainError("WeightedGammaSum: threshold is NaN");
    if (weights_.empty()) return {upper ? (l <= 0.0 ? 1.0 : 0.0) : (l > 0.0 ? 1.0 : 0.0), EvalMethod::closed_form};
    if (l <= 0.0) return {upper ? 1.0 : 0.0, EvalMethod::closed_form};
    if (!samples_.empty()) {
      const auto below = std::lower_bound(samples_.begin(), samples_.end(), l) - samples_.begin();
      const double f = static_cast<double>(below) / static_cast<double>(samples_.size());
      return {upper ? 1.0 - f : f, EvalMethod::monte_carlo};
    }
    double sum = 0.0;
    double abs_sum = 0.0;
    for (const auto& t : terms_) {
      const auto pq = special::regularized_gamma(t.shape, l / t.scale);
      const double v = t.coef * (upper ? pq.q : pq.p);
      sum += v;
      abs_sum += std::abs(v);
    }
    const double rounding = 16.0 * std::numeric_limits<double>::epsilon() * abs_sum;
    if (terms_.size() == 1 || rounding <= kAbsoluteFloor ||
        (sum > 0.0 && rounding <= kCancellationLimit * std::abs(sum))) {
      return {std::clamp(sum, 0.0, 1.0), EvalMethod::closed_form};
    }
    const auto [w_lo, w_hi] = std::minmax_element(weights_.begin(), weights_.end());
    if (*w_hi / *w_lo > kSeriesSpread) return conditioned(l, upper);
    build_series();
    // Truncation error after k terms is at most (1 - mass_k) * P(rho + k, x)
    // for the CDF and (1 - mass_k) for the survival function.
    const double x = l / series_scale_;
    double s = 0.0;
    double mass = 0.0;
    for (std::size_t k = 0; k < series_coef_.size(); ++k) {
      const auto pq = special::regularized_gamma(series_rho_ + static_cast<double>(k), x);
      s += series_coef_[k] * (upper ? pq.q : pq.p);
      mass += series_coef_[k];
      const double tail = (1.0 - mass) * (upper ? 1.0 : pq.p);
      if (tail <= kAbsoluteFloor || tail <= kSeriesTol * s) {
        return {std::clamp(s, 0.0, 1.0), EvalMethod::series};
      }
    }
    return conditioned(l, upper);
  }

  // Pr(T < l) = int_0^{l/w} f(t) F_rest(l - w t) dt and
  // Pr(T >= l) = Q(shape, l/w) + int_0^{l/w} f(t) S_rest(l - w t) dt,
  // with f the Gamma(shape, 1) density and w the most isolated weight.
  Evaluation conditioned(double l, bool upper) const {
    if (!rest_) {
      std::size_t pick = 0;
      double best = -1.0;
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < weights_.size(); ++j) {
          if (j != i) gap = std::min(gap, std::abs(std::log(weights_[i] / weights_[j])));
        }
        if (gap > best) {
          best = gap;
          pick = i;
        }
      }
      std::vector<double> rest;
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (i != pick) rest.push_back(weights_[i]);
      }
      pivot_ = weights_[pick];
      rest_ = std::make_shared<WeightedGammaSum>(std::move(rest), shape_);
    }
    const double m = shape_;
    const double log_norm = std::lgamma(m);
    const double t_end = std::min(l / pivot_, m + 40.0 * std::sqrt(m) + 40.0);
    auto integrand = [&](double t) {
      if (t <= 0.0) return shape_ == 1 ? (upper ? rest_->survival(l).value : rest_->cdf(l).value) : 0.0;
      const double density = std::exp((m - 1.0) * std::log(t) - t - log_norm);
      const double r = l - pivot_ * t;
      return density * (upper ? rest_->survival(r).value : rest_->cdf(r).value);
    };
    double v = quad::integrate(integrand, 0.0, t_end, 1e-9);
    if (upper) v += special::gamma_q(shape_, l / pivot_);
    return {std::clamp(v, 0.0, 1.0), EvalMethod::conditioned};
  }

  int shape_ = 1;
  std::vector<double> weights_;
  std::vector<Term> terms_;
  std::vector<double> samples_;
  mutable bool series_ready_ = false;
  mutable double series_scale_ = 0.0;
  mutable double series_rho_ = 0.0;
  mutable std::vector<double> series_coef_;
  mutable double pivot_ = 0.0;
  mutable std::shared_ptr<WeightedGammaSum> rest_;
};

// ---------------------------------------------------------------------------
// Analytic error probabilities

struct ErrorPair {
  double p_miss = 0.0;
  double p_fa = 0.0;
};

/// Single BS, threshold l on ||x~||^2: declare active iff ||x~||^2 >= l.
inline ErrorPair pm_pf_massive_analytic(double g, double tau_sq, int antennas, double l) {
  if (!(tau_sq > 0.0)) throw DomainError("pm_pf_massive_analytic: tau^2 must be positive");
  if (!(l >= 0.0)) throw DomainError("pm_pf_massive_analytic: threshold must be >= 0");
  return {special::gamma_p(antennas, l / (g * g + tau_sq)), special::gamma_q(antennas, l / tau_sq)};
}

struct CoopErrorResult {
  double p_miss = 0.0;
  double p_fa = 0.0;
  EvalMethod miss_method = EvalMethod::closed_form;
  EvalMethod fa_method = EvalMethod::closed_form;
  bool monte_carlo_warning = false;
};

/// Both hypotheses of the aggregated statistic for one user.
class CoopStatistic {
 public:
  /// tau_sq holds either one value shared by all BSs or one per BS.
  CoopStatistic(std::span<const double> gains, std::span<const double> tau_sq, int antennas)
      : active_(weights(gains, tau_sq, true), antennas), inactive_(weights(gains, tau_sq, false), antennas) {}

  /// Threshold l on sum_j Delta_j ||x~_j||^2: declare active iff T >= l.
  CoopErrorResult errors(double l) const {
    if (!(l >= 0.0)) throw DomainError("pm_pf_coop_analytic: threshold must be >= 0");
    const auto pm = active_.cdf(l);
    const auto pf = inactive_.survival(l);
    return {pm.value, pf.value, pm.method, pf.method, active_.monte_carlo()};
  }

  const WeightedGammaSum& active() const { return active_; }
  const WeightedGammaSum& inactive() const { return inactive_; }

 private:
  static std::vector<double> weights(std::span<const double> gains, std::span<const double> tau_sq, bool active) {
    if (gains.empty()) throw DomainError("pm_pf_coop_analytic: need at least one BS");
    if (tau_sq.size() != 1 && tau_sq.size() != gains.size()) {
      throw DimensionError("pm_pf_coop_analytic: tau^2 must be a scalar or one per BS");
    }
    std::vector<double> w;
    for (std::size_t j = 0; j < gains.size(); ++j) {
      const double t = tau_sq.size() == 1 ? tau_sq[0] : tau_sq[j];
      if (!(t > 0.0)) throw DomainError("pm_pf_coop_analytic: tau^2 must be positive");
      const double theta = gains[j] * gains[j] / t;
      w.push_back(active ? theta : theta / (1.0 + theta));
    }
    return w;
  }

  WeightedGammaSum active_;
  WeightedGammaSum inactive_;
};

inline CoopErrorResult pm_pf_coop_analytic(std::span<const double> gains, double tau_sq, int antennas, double l) {
  const double t[1] = {tau_sq};
  return CoopStatistic(gains, t, antennas).errors(l);
}

/// Gaussian approximations of the single-BS error probabilities.
inline ErrorPair pm_pf_clt(double g, double tau_sq, int antennas, double l) {
  const double sm = std::sqrt(static_cast<double>(antennas));
  return {special::normal_cdf((l / (g * g + tau_sq) - antennas) / sm),
          special::normal_cdf(-(l / tau_sq - antennas) / sm)};
}

struct EqualErrorPoint {
  double threshold = 0.0;
  double p_equal = 0.0;
  double p_miss = 0.0;
  double p_fa = 0.0;
};

/// Bisection for P_M(l) = P_F(l); P_M must rise from 0 and P_F fall from 1.
template <class Miss, class FalseAlarm>
EqualErrorPoint equal_error_point(Miss&& pm, FalseAlarm&& pf, double scale) {
  if (!(scale > 0.0)) scale = 1.0;
  double lo = 0.0;
  double hi = scale;
  for (int i = 0; i < 2000 && pm(hi) < pf(hi); ++i) hi *= 2.0;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (pm(mid) < pf(mid)) lo = mid;
    else hi = mid;
  }
  const double l = 0.5 * (lo + hi);
  EqualErrorPoint out;
  out.threshold = l;
  out.p_miss = pm(l);
  out.p_fa = pf(l);
  out.p_equal = 0.5 * (out.p_miss + out.p_fa);
  return out;
}

/// Equal-error threshold on ||x~||^2 for a single BS.
inline EqualErrorPoint equal_error_threshold(double g, double tau_sq, int antennas) {
  return equal_error_point([&](double l) { return pm_pf_massive_analytic(g, tau_sq, antennas, l).p_miss; },
                           [&](double l) { return pm_pf_massive_analytic(g, tau_sq, antennas, l).p_fa; },
                           antennas * (g * g + tau_sq));
}

/// Equal-error threshold on the aggregated statistic.
inline EqualErrorPoint equal_error_threshold(const CoopStatistic& stat) {
  return equal_error_point([&](double l) { return stat.active().cdf(l).value; },
                           [&](double l) { return stat.inactive().survival(l).value; },
                           std::max(stat.active().mean(), 1e-300));
}

inline EqualErrorPoint equal_error_threshold(std::span<const double> gains, double tau_sq, int antennas) {
  const double t[1] = {tau_sq};
  return equal_error_threshold(CoopStatistic(gains, t, antennas));
}

// ---------------------------------------------------------------------------
// Error profiles

/// Per-user decision tallies.
struct ErrorCounts {
  long misses = 0;
  long hits = 0;
  long false_alarms = 0;
  long true_negatives = 0;

  void record(bool active, bool declared_active) {
    if (active) (declared_active ? hits : misses) += 1;
    else (declared_active ? false_alarms : true_negatives) += 1;
  }

  long active_trials() const { return misses + hits; }
  long inactive_trials() const { return false_alarms + true_negatives; }
  long trials() const { return active_trials() + inactive_trials(); }

  ErrorCounts& operator+=(const ErrorCounts& o) {
    misses += o.misses;
    hits += o.hits;
    false_alarms += o.false_alarms;
    true_negatives += o.true_negatives;
    return *this;
  }
};

enum class ProfileSource { analytic, empirical };

struct UserError {
  int cell = 0;
  int user = 0;
  double g = 0.0;  ///< gain to the serving BS
  double p_miss = 0.0;
  double p_fa = 0.0;
  double p_equal = 0.0;  ///< analytic: common equal-error value; empirical: pooled error rate
  double threshold = 0.0;
  ErrorCounts counts;                  ///< empirical only
  std::pair<double, double> miss_ci{0.0, 1.0};
  std::pair<double, double> fa_ci{0.0, 1.0};
  bool undefined = false;  ///< empirical entry without active or inactive trials
};

struct ErrorProfile {
  ProfileSource source = ProfileSource::analytic;
  std::vector<UserError> users;
  std::vector<double> cdf;  ///< sorted p_equal values
  double cell_edge_95 = 0.0;

  void finalize() {
    cdf.clear();
    for (const auto& u : users) cdf.push_back(u.p_equal);
    std::sort(cdf.begin(), cdf.end());
    cell_edge_95 = cdf.empty() ? 0.0 : stats::percentile(cdf, 0.95);
  }
};

/// Empirical profile from accumulated counts. The equal-error entry is the
/// pooled error rate (misses + false alarms) / trials, which at the
/// equal-error threshold has expectation p* regardless of the activity rate.
inline ErrorProfile empirical_error_profile(std::span<const ErrorCounts> counts, std::span<const double> gains,
                                            std::span<const double> thresholds, int cell = 0) {
  if (counts.size() != gains.size() || counts.size() != thresholds.size()) {
    throw DimensionError("empirical_error_profile: size mismatch");
  }
  ErrorProfile p;
  p.source = ProfileSource::empirical;
  for (std::size_t n = 0; n < counts.size(); ++n) {
    const auto& c = counts[n];
    UserError u;
    u.cell = cell;
    u.user = static_cast<int>(n);
    u.g = gains[n];
    u.threshold = thresholds[n];
    u.counts = c;
    u.undefined = c.active_trials() == 0 || c.inactive_trials() == 0;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    u.p_miss = c.active_trials() > 0 ? static_cast<double>(c.misses) / c.active_trials() : nan;
    u.p_fa = c.inactive_trials() > 0 ? static_cast<double>(c.false_alarms) / c.inactive_trials() : nan;
    u.p_equal = c.trials() > 0 ? static_cast<double>(c.misses + c.false_alarms) / c.trials() : nan;
    u.miss_ci = stats::wilson_interval(c.misses, c.active_trials());
    u.fa_ci = stats::wilson_interval(c.false_alarms, c.inactive_trials());
    p.users.push_back(u);
  }
  p.finalize();
  return p;
}

inline void write_profile_csv(std::ostream& out, const ErrorProfile& p) {
  out << "cell,user,g,P_M,P_F,p_equal\n";
  const auto old = out.precision(17);
  for (const auto& u : p.users) {
    out << u.cell << ',' << u.user << ',' << u.g << ',' << u.p_miss << ',' << u.p_fa << ',' << u.p_equal << '\n';
  }
  out.precision(old);
}

inline void write_cdf_csv(std::ostream& out, const ErrorProfile& p) {
  out << "percentile,p\n";
  const auto old = out.precision(17);
  const double n = static_cast<double>(p.cdf.size());
  for (std::size_t i = 0; i < p.cdf.size(); ++i) out << (i + 1) / n << ',' << p.cdf[i] << '\n';
  out.precision(old);
}

}  // namespace mcad
