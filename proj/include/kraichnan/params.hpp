#pragma once

namespace kraichnan {

// (d, alpha, s, m, nu); m is the infrared regularizer of the covariance, nu a viscosity
struct ModelParams {
  int d = 2;
  double alpha = 0.5;
  double s = 0.5;
  double m = 0.0;
  double nu = 0.0;

  void validate() const;  // throws DomainError naming the violated range
};

}  // namespace kraichnan
