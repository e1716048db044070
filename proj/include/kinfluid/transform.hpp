#pragma once

#include "kinfluid/field.hpp"

namespace kinfluid {

// Forward DFT, unitary-in-mean convention: coeff(k) = n^-dim * sum_j f(x_j) e^{-2pi i k.j/n}.
SpectralField to_spectral(const PhysicalField& f);

// Inverse DFT: f(x_j) = sum_k coeff(k) e^{+2pi i k.j/n}. Rejects inputs whose
// Hermitian-symmetry violation exceeds 1e-10 (relative to the largest coefficient).
PhysicalField to_physical(const SpectralField& F);

// Largest |coeff(k) - conj(coeff(-k))| over all modes and components.
double hermitian_violation(const SpectralField& F);

}  // namespace kinfluid
