#include <doctest.h>

#include <cfloat>
#include <cmath>
#include <random>

#include <alphainv/activations.hpp>
#include <alphainv/error.hpp>
#include <alphainv/volrend.hpp>

#include "oracles.hpp"

using namespace alphainv;

namespace {

ActivationConfig cfg(ActivationKind kind, double offset = 0.0) { return {kind, offset, 0.0}; }

constexpr ActivationKind kAllKinds[] = {ActivationKind::Relu, ActivationKind::Softplus, ActivationKind::Exp,
                                        ActivationKind::ExpGumbel};

}  // namespace

TEST_SUITE("activations") {

TEST_CASE("sigma examples") {
  CHECK(sigma(cfg(ActivationKind::Relu), -5.0).value == 0.0);
  CHECK(sigma(cfg(ActivationKind::Softplus), 0.0).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(sigma(cfg(ActivationKind::Exp), 0.0).value == 1.0);
  CHECK(sigma(cfg(ActivationKind::Relu, 1.5), 0.5).value == 2.0);
}

TEST_CASE("exp overflow saturates with a flag") {
  const SigmaEval s = sigma(cfg(ActivationKind::Exp), 701.0);
  CHECK(s.saturated);
  CHECK(s.value == DBL_MAX);
  CHECK_FALSE(sigma(cfg(ActivationKind::Exp), 699.0).saturated);
}

TEST_CASE("softplus is overflow safe") {
  CHECK(softplus(1000.0) == 1000.0);
  CHECK(softplus(-1000.0) == 0.0);
  CHECK(softplus(-40.0) == doctest::Approx(std::exp(-40.0)).epsilon(1e-12));
  for (double y : {1e-8, 0.00251258, 0.5, 3.0, 50.0}) CHECK(softplus(softplus_inverse(y)) == doctest::Approx(y).epsilon(1e-12));
}

TEST_CASE("alpha_direct examples") {
  CHECK(alpha_direct(cfg(ActivationKind::ExpGumbel), 0.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
  const double a_exp = alpha_direct(cfg(ActivationKind::Exp), 1.3, 0.07);
  const double a_gum = alpha_direct(cfg(ActivationKind::ExpGumbel), 1.3, 0.07);
  CHECK(std::fabs(a_exp - a_gum) < 1e-14);
  CHECK(alpha_direct(cfg(ActivationKind::Softplus), 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("dalpha_dx examples") {
  CHECK(dalpha_dx(cfg(ActivationKind::Relu), -1.0, 1.0) == 0.0);
  CHECK(dalpha_dx(cfg(ActivationKind::ExpGumbel), 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("dalpha_dx matches finite differences for every kind") {
  // d alpha/dx = exp(-sigma d) * d * sigma'. Only sigma (written out here) is
  // differenced, so neither alpha near 0 nor near 1 cancels.
  const auto oracle_sigma = [](ActivationKind kind, double z) {
    switch (kind) {
      case ActivationKind::Relu:
        return z > 0.0 ? z : 0.0;
      case ActivationKind::Softplus:
        return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      default:
        return std::exp(z);
    }
  };
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(-6.0, 4.0), ud(-3.0, 1.0), uo(-2.0, 2.0);
  for (ActivationKind kind : kAllKinds) {
    for (int i = 0; i < 500; ++i) {
      const ActivationConfig act = cfg(kind, uo(rng));
      const double x = ux(rng), d = std::pow(10.0, ud(rng));
      if (kind == ActivationKind::Relu && std::fabs(x + act.offset) < 1e-3) continue;
      const double h = 1e-6;
      const double an = dalpha_dx(act, x, d);
      const double z = x + act.offset;
      const double dsigma = oracle::central_diff([&](double v) { return oracle_sigma(kind, v); }, z, h * std::fmax(1.0, std::fabs(z)));
      const double fd_survival = std::exp(-oracle_sigma(kind, z) * d) * d * dsigma;
      const double fd_alpha = oracle::central_diff([&](double v) { return alpha_direct(act, v, d); }, x, h);
      if (std::fabs(an) < 1e-200 && std::fabs(fd_survival) < 1e-200) continue;
      CHECK(oracle::rel_err(an, fd_survival, 1e-300) < 1e-6);
      CHECK(std::fabs(an - fd_alpha) <= 1e-6 * std::fabs(fd_alpha) + 1e-10);
    }
  }
}

TEST_CASE("required_sigma examples and round trip") {
  CHECK(required_sigma(1.0 - std::exp(-1.0), 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::fabs(required_sigma(0.99, 0.0625) - 73.68272297580946) < 1e-9);
  CHECK(std::fabs(required_sigma(0.5, 2.0) - 0.34657359027997264) < 1e-12);
  for (double a : {0.01, 0.3, 0.5, 0.9, 0.99, 0.999}) {
    for (double d : {1e-3, 0.0625, 2.0, 100.0}) CHECK(std::fabs(alpha_from_sigma(required_sigma(a, d), d) - a) < 1e-9);
  }
  CHECK_THROWS_AS(required_sigma(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(required_sigma(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(required_sigma(0.5, 0.0), DomainError);
}

TEST_CASE("form equivalence over random inputs") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(-20.0, 20.0), ud(-3.0, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = ux(rng), d = std::pow(10.0, ud(rng));
    CHECK(std::fabs(alpha_direct(cfg(ActivationKind::Exp), x, d) - alpha_direct(cfg(ActivationKind::ExpGumbel), x, d)) <
          1e-12);
    for (ActivationKind kind : {ActivationKind::Relu, ActivationKind::Softplus}) {
      const double composed = alpha_from_sigma(sigma(cfg(kind), x).value, d);
      CHECK(std::fabs(alpha_direct(cfg(kind), x, d) - composed) < 1e-12);
    }
  }
}

TEST_CASE("softplus identity exp(-softplus(x)) == sigmoid(-x)") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ux(-30.0, 30.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = ux(rng);
    CHECK(std::fabs(std::exp(-softplus(x)) - sigmoid(-x)) < 1e-12);
  }
}

TEST_CASE("log-shift invariance of the Gumbel form") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ux(-10.0, 10.0), ud(-2.0, 2.0), uk(-1.0, 1.5);
  const ActivationConfig act = cfg(ActivationKind::ExpGumbel);
  for (int i = 0; i < 2000; ++i) {
    const double x = ux(rng), d = std::pow(10.0, ud(rng)), k = std::pow(10.0, uk(rng));
    CHECK(std::fabs(alpha_direct(act, x, k * d) - alpha_direct(act, x + std::log(k), d)) < 1e-12);
  }
  // Exactly representable inputs: identical expression, identical bits.
  CHECK(alpha_direct(act, 0.25, 4.0) == alpha_direct(act, 0.25 + std::log(4.0), 1.0));
}

TEST_CASE("monotonicity in x") {
  for (ActivationKind kind : kAllKinds) {
    double prev = -1.0;
    for (int i = 0; i <= 400; ++i) {
      const double x = -20.0 + 0.05 * i;
      const double a = alpha_direct(cfg(kind), x, 0.3);
      if (kind == ActivationKind::Relu) {
        CHECK(a >= prev);
      } else if (a < 1.0 - 1e-12 && a > 1e-300) {
        CHECK(a > prev);
      }
      prev = a;
    }
  }
}

TEST_CASE("Gumbel form is finite where plain exp overflows") {
  const double a = alpha_direct(cfg(ActivationKind::ExpGumbel), 500.0, 1e3);
  CHECK(std::isfinite(a));
  CHECK(a >= 0.0);
  CHECK(a <= 1.0);
  CHECK(std::isfinite(dalpha_dx(cfg(ActivationKind::ExpGumbel), 500.0, 1e3)));
  CHECK(alpha_direct(cfg(ActivationKind::ExpGumbel), -800.0, 1e-3) == 0.0);
}

TEST_CASE("activation names round trip") {
  for (ActivationKind kind : kAllKinds) CHECK(parse_activation(to_string(kind)) == kind);
  CHECK(to_string(ActivationKind::ExpGumbel) == "exp_gumbel");
  CHECK_THROWS_AS(parse_activation("tanh"), DomainError);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(cfg(ActivationKind::Exp, NAN).validate(), DomainError);
  ActivationConfig bad{ActivationKind::ExpGumbel, 0.0, INFINITY};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(alpha_direct(cfg(ActivationKind::Exp), NAN, 1.0), DomainError);
}

}
