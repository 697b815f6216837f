#pragma once

#include <cmath>
#include <string>

#include "maxdamp/errors.hpp"
#include "maxdamp/linalg.hpp"

namespace maxdamp
{

/// Dyadic grid q·Z on which face fluxes live. Every stored value is an
/// integer multiple of q with magnitude below 2^50·q, so sums of up to eight
/// such values through an integer incidence stencil are exact in binary64.
class FluxLattice
{
public:
  static constexpr int mantissa_bits = 49;
  static constexpr double headroom = 1125899906842624.0; // 2^50

  FluxLattice() = default;

  /// Lattice whose range covers |x| <= bound with 2^-49 relative resolution.
  static FluxLattice covering(double bound)
  {
    FluxLattice lat;
    if (!(bound > 0.0) || !std::isfinite(bound))
      lat.q_ = 1.0;
    else
      lat.q_ = std::ldexp(1.0, static_cast<int>(std::ceil(std::log2(bound))) - mantissa_bits);
    return lat;
  }

  double quantum() const noexcept { return q_; }
  double limit() const noexcept { return headroom * q_; }

  double snap(double x) const { return std::nearbyint(x / q_) * q_; }

  void snap(Vec &x) const
  {
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
      x[i] = snap(x[i]);
      if (!(std::abs(x[i]) <= limit()))
        throw Error(ErrorKind::precision,
                    "value " + std::to_string(x[i]) + " exceeds flux lattice range " +
                        std::to_string(limit()));
    }
  }

  /// Throws if some entry is off-lattice or out of range.
  void require(const Vec &x) const
  {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (!(std::abs(x[i]) <= limit()) || snap(x[i]) != x[i])
        throw Error(ErrorKind::precision, "flux entry " + std::to_string(i) +
                                              " left the lattice (value " +
                                              std::to_string(x[i]) + ")");
  }

private:
  double q_ = 1.0;
};

} // namespace maxdamp
