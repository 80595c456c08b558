#include "alphainv/activations.hpp"

#include <cfloat>
#include <cmath>

#include <fmt/format.h>

#include "alphainv/error.hpp"
#include "alphainv/volrend.hpp"

namespace alphainv {

namespace {

void check_inputs(double x, double d) {
  // x may be -inf: that is the out-of-bounds sentinel and means sigma = 0.
  if (std::isnan(x) || x == INFINITY) {
    throw DomainError(fmt::format("activation: raw output must be finite, got {}", x));
  }
  if (!std::isfinite(d) || !(d > 0.0)) {
    throw DomainError(fmt::format("activation: interval must be finite and > 0, got {}", d));
  }
}

}  // namespace

void ActivationConfig::validate() const {
  if (!std::isfinite(offset)) {
    throw DomainError("ActivationConfig: offset must be finite");
  }
  if (kind == ActivationKind::ExpGumbel && !std::isfinite(log_L)) {
    throw DomainError("ActivationConfig: log_L must be finite for exp_gumbel");
  }
}

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Relu:
      return "relu";
    case ActivationKind::Softplus:
      return "softplus";
    case ActivationKind::Exp:
      return "exp";
    case ActivationKind::ExpGumbel:
      return "exp_gumbel";
  }
  return "unknown";
}

ActivationKind parse_activation(std::string_view name) {
  if (name == "relu") return ActivationKind::Relu;
  if (name == "softplus") return ActivationKind::Softplus;
  if (name == "exp") return ActivationKind::Exp;
  if (name == "exp_gumbel") return ActivationKind::ExpGumbel;
  throw DomainError(fmt::format("unknown activation '{}' (expected relu|softplus|exp|exp_gumbel)", name));
}

double softplus(double z) { return std::log1p(std::exp(-std::fabs(z))) + std::fmax(z, 0.0); }

double softplus_inverse(double y) {
  if (!(y > 0.0)) {
    throw DomainError(fmt::format("softplus_inverse: need y > 0, got {}", y));
  }
  // log(e^y - 1) = y + log(1 - e^-y)
  return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

SigmaEval sigma(const ActivationConfig& act, double x) {
  if (std::isnan(x) || x == INFINITY) {
    throw DomainError(fmt::format("sigma: raw output must be finite, got {}", x));
  }
  const double z = x + act.offset;
  switch (act.kind) {
    case ActivationKind::Relu:
      return {std::fmax(z, 0.0), false};
    case ActivationKind::Softplus:
      return {softplus(z), false};
    case ActivationKind::Exp:
    case ActivationKind::ExpGumbel: {
      if (z > 700.0) {
        return {DBL_MAX, true};
      }
      return {std::exp(z), false};
    }
  }
  return {0.0, false};
}

double alpha_direct(const ActivationConfig& act, double x, double d) {
  check_inputs(x, d);
  switch (act.kind) {
    case ActivationKind::ExpGumbel:
      return -std::expm1(-std::exp(x + act.offset + std::log(d)));
    case ActivationKind::Exp:
      return -std::expm1(-std::exp(x + act.offset) * d);
    case ActivationKind::Relu:
    case ActivationKind::Softplus:
      return alpha_from_sigma(sigma(act, x).value, d);
  }
  return 0.0;
}

double dalpha_dx(const ActivationConfig& act, double x, double d) {
  check_inputs(x, d);
  const double z = x + act.offset;
  switch (act.kind) {
    case ActivationKind::Relu:
      return z > 0.0 ? d * std::exp(-z * d) : 0.0;
    case ActivationKind::Softplus:
      return d * sigmoid(z) * std::exp(-softplus(z) * d);
    case ActivationKind::Exp:
    case ActivationKind::ExpGumbel: {
      // u e^{-u} with u = exp(z + log d), evaluated as exp(a - e^a).
      const double a = z + std::log(d);
      return std::exp(a - std::exp(a));
    }
  }
  return 0.0;
}

double required_sigma(double alpha_target, double d) {
  if (!(alpha_target > 0.0 && alpha_target < 1.0)) {
    throw DomainError(fmt::format("required_sigma: alpha must lie in (0,1), got {}", alpha_target));
  }
  if (!std::isfinite(d) || !(d > 0.0)) {
    throw DomainError(fmt::format("required_sigma: d must be finite and > 0, got {}", d));
  }
  return -std::log1p(-alpha_target) / d;
}

}  // namespace alphainv
