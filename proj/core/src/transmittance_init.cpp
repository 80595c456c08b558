#include "alphainv/transmittance_init.hpp"

#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "alphainv/error.hpp"
#include "alphainv/random.hpp"

namespace alphainv {

namespace {

double log_log_inv(double T_prime) { return std::log(-std::log(T_prime)); }

double activate(ActivationKind kind, double z) {
  return kind == ActivationKind::Relu ? std::fmax(z, 0.0) : softplus(z);
}

// One jittered point per equal-width stratum of [-12, 12], weighted by the
// normal density (the tails stay resolved even when the target mean is tiny).
struct WeightedNormals {
  std::vector<double> z;
  std::vector<double> w;  // sums to 1
};

WeightedNormals stratified_normals(std::size_t n, std::uint64_t seed) {
  constexpr double kSpan = 12.0;
  const boost::math::normal_distribution<double> unit;
  const CounterRng rng(substream(seed, "init-offset"));
  const double h = 2.0 * kSpan / static_cast<double>(n);
  WeightedNormals out{std::vector<double>(n), std::vector<double>(n)};
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out.z[j] = -kSpan + (static_cast<double>(j) + rng.uniform(j)) * h;
    out.w[j] = boost::math::pdf(unit, out.z[j]);
    total += out.w[j];
  }
  for (double& v : out.w) v /= total;
  return out;
}

}  // namespace

void InitSpec::validate() const {
  if (!(T_prime > 0.0 && T_prime < 1.0)) {
    throw DomainError(fmt::format("InitSpec: T_prime must lie in (0,1), got {}", T_prime));
  }
  if (!std::isfinite(L) || !(L > 0.0)) {
    throw DomainError(fmt::format("InitSpec: L must be finite and > 0, got {}", L));
  }
  if (!std::isfinite(tau) || tau < 0.0) {
    throw DomainError(fmt::format("InitSpec: tau must be finite and >= 0, got {}", tau));
  }
  if (!std::isfinite(mu_raw)) {
    throw DomainError("InitSpec: mu_raw must be finite");
  }
}

double exp_init_offset(const InitSpec& spec) {
  spec.validate();
  return log_log_inv(spec.T_prime) - std::log(spec.L) - 0.5 * spec.tau * spec.tau;
}

double unit_mean_ray_length(double T_prime, double tau) {
  InitSpec{T_prime, 1.0, tau, 0.0}.validate();
  return -std::log(T_prime) / std::exp(0.5 * tau * tau);
}

double numeric_init_offset(ActivationKind kind, const InitSpec& spec, std::size_t n_samples,
                           std::uint64_t seed) {
  spec.validate();
  if (kind != ActivationKind::Relu && kind != ActivationKind::Softplus) {
    throw DomainError(fmt::format("numeric_init_offset: expected relu or softplus, got {}", to_string(kind)));
  }
  const double target = -std::log(spec.T_prime) / spec.L;  // required E[sigma]

  if (spec.tau == 0.0) {
    const double z = kind == ActivationKind::Relu ? target : softplus_inverse(target);
    return z - spec.mu_raw;
  }
  if (n_samples == 0) {
    throw DomainError("numeric_init_offset: n_samples must be positive");
  }

  WeightedNormals nodes = stratified_normals(n_samples, seed);
  for (double& v : nodes.z) v = spec.mu_raw + spec.tau * v;

  // Nondecreasing in c.
  auto objective = [&](double c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n_samples; ++j) acc += nodes.w[j] * activate(kind, nodes.z[j] + c);
    return acc - target;
  };

  double lo = -60.0;
  double hi = 60.0;
  const double f_lo = objective(lo);
  const double f_hi = objective(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    throw BracketError(fmt::format("numeric_init_offset: no sign change on [{}, {}] (f = {}, {})",
                                   lo, hi, f_lo, f_hi),
                       f_lo, f_hi);
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = objective(mid);
    if (f == 0.0) return mid;
    (f < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double merged_alpha_input(const InitSpec& spec, double d, double x) {
  spec.validate();
  if (!std::isfinite(d) || !(d > 0.0)) {
    throw DomainError(fmt::format("merged_alpha_input: d must be finite and > 0, got {}", d));
  }
  return x + std::log(d / spec.L) + log_log_inv(spec.T_prime) - 0.5 * spec.tau * spec.tau;
}

ActivationConfig high_transmittance_activation(ActivationKind kind, const InitSpec& spec,
                                               std::size_t n_samples, std::uint64_t seed) {
  ActivationConfig act;
  act.kind = kind;
  act.log_L = std::log(spec.L);
  if (kind == ActivationKind::Exp || kind == ActivationKind::ExpGumbel) {
    act.offset = exp_init_offset(spec) - spec.mu_raw;
  } else {
    act.offset = numeric_init_offset(kind, spec, n_samples, seed);
  }
  return act;
}

}  // namespace alphainv
