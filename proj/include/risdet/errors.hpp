#pragma once

#include <stdexcept>
#include <string>

namespace risdet {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when M_arrival(1+s) * M_service(1-s) >= 1.
class StabilityError : public NumericalError {
 public:
  StabilityError(const std::string& what, double product)
      : NumericalError(what), product_(product) {}
  double product() const { return product_; }

 private:
  double product_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace risdet
