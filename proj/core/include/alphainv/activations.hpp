#pragma once

#include <string>
#include <string_view>

namespace alphainv {

/// Maps a raw field output x to a volume density sigma(x).
enum class ActivationKind { Relu, Softplus, Exp, ExpGumbel };

/// Activation with an additive pre-activation shift: sigma = act(x + offset).
///
/// log_L records the log of the reference ray length the offset was derived for.
/// It does not enter alpha_direct(); the shift is fully contained in offset.
struct ActivationConfig {
  ActivationKind kind = ActivationKind::ExpGumbel;
  double offset = 0.0;
  double log_L = 0.0;

  /// Throws DomainError for non-finite offset (or non-finite log_L under ExpGumbel).
  void validate() const;
};

/// "relu" | "softplus" | "exp" | "exp_gumbel"
std::string_view to_string(ActivationKind kind);
/// Throws DomainError on an unknown name.
ActivationKind parse_activation(std::string_view name);

/// log(1 + e^z) computed without overflow.
double softplus(double z);
/// Inverse of softplus for y > 0.
double softplus_inverse(double y);
double sigmoid(double z);

struct SigmaEval {
  double value = 0.0;
  bool saturated = false;  // exp overflowed; value holds DBL_MAX
};

/// sigma(x) for the configured activation.
SigmaEval sigma(const ActivationConfig& act, double x);

/// Segment opacity alpha(x, d).
///
/// ExpGumbel evaluates 1 - exp(-exp(x + offset + log d)); the distance enters as an
/// additive log term, so no intermediate product can overflow. The other kinds
/// compose sigma() with alpha_from_sigma().
double alpha_direct(const ActivationConfig& act, double x, double d);

/// d alpha / d x. Zero on the flat side of ReLU.
double dalpha_dx(const ActivationConfig& act, double x, double d);

/// Density needed for a segment of length d to reach opacity alpha_target.
double required_sigma(double alpha_target, double d);

}  // namespace alphainv
