#pragma once

#include <cstdint>

#include "maxdamp/evolution.hpp"

namespace maxdamp
{

/// Random state with G^T P M_eps e = 0 at every interior node and b = C a.
/// Normalized to unit energy.
FieldState random_charge_free(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                              std::uint64_t seed);

/// Random PEC-compatible electric field with charges everywhere and b = C a.
/// Normalized to unit energy.
FieldState random_state(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                        std::uint64_t seed);

/// Random node potential vanishing on the boundary.
Vec random_potential(const DeRhamComplex &complex, std::uint64_t seed);

/// e_x = sin(pi y / L) sin(pi z / L) on x-edges, zero magnetic flux.
FieldState standing_wave(const DeRhamComplex &complex);

/// Charge-free datum localized around the box centre with Gaussian profile of
/// the given width. Normalized to unit energy.
FieldState centered_bump(const DeRhamComplex &complex, const MaterialAssembly &assembly,
                         double width);

/// (G p, 0).
FieldState gradient_state(const DeRhamComplex &complex, const Vec &p);

/// Scale a state to unit energy (no-op on the zero state).
FieldState normalized(const MaterialAssembly &assembly, FieldState z);

} // namespace maxdamp
