#pragma once

#include "kinfluid/field.hpp"

namespace kinfluid {

// Project a vector field onto mean-free divergence-free fields:
// w(k) -= k (k.w)/|k|^2 per mode, zero mode set to 0.
SpectralField leray_project(const SpectralField& F);

// 2/3-rule truncation: zero every mode with any |k_j| > n/3.
SpectralField dealias(const SpectralField& F);
bool mode_kept(const int k[3], int dim, int n);

// d/dx_axis as the exact multiplier i*2*pi*k_axis (zero at the Nyquist mode).
SpectralField derivative(const SpectralField& F, int axis);

// Gradient tensor g_{j,m} = d w_j / d x_m of a dim-component field,
// stored with component index j*dim + m.
SpectralField gradient_tensor(const SpectralField& w);

// Divergence of a dim*dim tensor field: out_j = sum_m d T_{j,m} / d x_m.
SpectralField tensor_divergence(const SpectralField& T);

}  // namespace kinfluid
