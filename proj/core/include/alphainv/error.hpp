#pragma once

#include <stdexcept>
#include <string>

namespace alphainv {

/// Input outside the mathematical domain of an operation (negative density,
/// mismatched list lengths, alpha outside (0,1), ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// The requested transform is not expressible for the given configuration,
/// e.g. exact density rescaling under a ReLU activation.
class CapabilityError : public std::logic_error {
 public:
  explicit CapabilityError(const std::string& what) : std::logic_error(what) {}
};

/// A root bracket did not contain a sign change.
class BracketError : public std::runtime_error {
 public:
  BracketError(const std::string& what, double f_lo, double f_hi)
      : std::runtime_error(what), f_lo_(f_lo), f_hi_(f_hi) {}

  double objective_at_lo() const { return f_lo_; }
  double objective_at_hi() const { return f_hi_; }

 private:
  double f_lo_;
  double f_hi_;
};

/// Malformed configuration document. The message is prefixed with a JSON path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& reason)
      : std::runtime_error(path + ": " + reason), path_(path), reason_(reason) {}

  const std::string& path() const { return path_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string path_;
  std::string reason_;
};

}  // namespace alphainv
