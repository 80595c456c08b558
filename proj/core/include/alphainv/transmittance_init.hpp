#pragma once

#include <cstddef>
#include <cstdint>

#include "alphainv/activations.hpp"

namespace alphainv {

/// Target for a transparent start: mean transmittance T_prime over rays of length L
/// when the raw field output is distributed as Normal(mu_raw, tau^2).
struct InitSpec {
  double T_prime = 0.99;
  double L = 1.0;
  double tau = 0.0;
  double mu_raw = 0.0;

  void validate() const;
};

/// Pre-activation mean mu for sigma = exp(x) such that E[sigma] * L = log(1/T'):
///   mu = log log(1/T') - log L - tau^2 / 2
double exp_init_offset(const InitSpec& spec);

/// Ray length at which a zero-mean raw output already meets the target under exp:
/// L = log(1/T') / exp(tau^2 / 2).
double unit_mean_ray_length(double T_prime, double tau);

inline constexpr std::size_t kDefaultInitSamples = 100000;

/// Offset c for ReLU/softplus such that E[act(X + c)] * L = log(1/T'),
/// X ~ Normal(mu_raw, tau^2). The expectation is a stratified Monte-Carlo
/// average over a fixed, seeded set of normal draws, and c is found by
/// bisection over [-60, 60]. tau == 0 is solved in closed form.
/// Throws BracketError if the objective does not change sign over the bracket.
double numeric_init_offset(ActivationKind kind, const InitSpec& spec,
                           std::size_t n_samples = kDefaultInitSamples, std::uint64_t seed = 0);

/// Argument of 1 - exp(-exp(.)) for raw output x under the high-transmittance shift:
///   x + log(d / L) + log log(1/T') - tau^2 / 2
/// Depends on d and L only through their ratio.
double merged_alpha_input(const InitSpec& spec, double d, double x);

/// Activation config whose offset realizes `spec` for `kind`; the offset already
/// subtracts spec.mu_raw.
ActivationConfig high_transmittance_activation(ActivationKind kind, const InitSpec& spec,
                                               std::size_t n_samples = kDefaultInitSamples,
                                               std::uint64_t seed = 0);

}  // namespace alphainv
