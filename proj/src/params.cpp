#include "kraichnan/params.hpp"

#include <cmath>
#include <string>

#include "kraichnan/errors.hpp"

namespace kraichnan {

void ModelParams::validate() const {
  if (d < 2) throw DomainError("d must be an integer >= 2");
  if (!std::isfinite(alpha) || !(alpha > 0.0 && alpha < 1.0))
    throw DomainError("alpha must lie in (0,1)");
  if (!std::isfinite(s) || !(s > 0.0 && s < 0.5 * d))
    throw DomainError("s must lie in (0, d/2)");
  if (!std::isfinite(m) || m < 0.0) throw DomainError("m must be >= 0");
  if (!std::isfinite(nu) || nu < 0.0) throw DomainError("nu must be >= 0");
}

}  // namespace kraichnan
