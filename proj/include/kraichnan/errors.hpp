#pragma once

#include <stdexcept>
#include <string>

namespace kraichnan {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PoleError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NonFiniteIntegrand : Error { using Error::Error; };
struct HigherOrderPole : Error { using Error::Error; };
struct StripViolation : Error { using Error::Error; };
struct CaseOutOfRange : Error { using Error::Error; };
struct StabilityViolation : Error { using Error::Error; };
struct NegativityError : Error { using Error::Error; };
struct InvalidSampleRate : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// carries the best value reached so callers can decide whether to accept it
struct ToleranceNotReached : Error {
  double best_re, best_im, estimate;
  ToleranceNotReached(const std::string& what, double re, double im, double est)
      : Error(what), best_re(re), best_im(im), estimate(est) {}
};

// raised when spectral mass piles up at the grid edges
struct TruncationWarning : Error {
  double time, boundary_fraction;
  TruncationWarning(const std::string& what, double t, double frac)
      : Error(what), time(t), boundary_fraction(frac) {}
};

}  // namespace kraichnan
