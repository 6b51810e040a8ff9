#ifndef MAGSCHROD_FFT_HPP
#define MAGSCHROD_FFT_HPP

#include <functional>

#include "magschrod/grid.hpp"

namespace msw {

enum class FftDirection { Forward, Inverse };

/**
 * Forward transform returns quadrature-scaled coefficients
 *   fhat(k) = (L/N)^3 sum_x f(x) e^{-i k.x}
 * on the lattice k = (2pi/L) m, m in [-N/2, N/2)^3, stored in FFT bin order.
 * Inverse is the exact left inverse, f(x) = L^{-3} sum_k fhat(k) e^{i k.x}.
 */
ScalarField fourier_transform(const ScalarField& f, FftDirection direction);

/** d/dx_axis via multiplication by i k_axis; the Nyquist multiplier is zeroed. */
ScalarField spectral_derivative(const ScalarField& f, int axis);

ScalarField spectral_laplacian(const ScalarField& f);
VectorField spectral_gradient(const ScalarField& f);
ScalarField spectral_divergence(const VectorField& a);

/** Applies a Fourier multiplier m(k); fn receives the physical wavevector. */
ScalarField apply_multiplier(const ScalarField& f, const std::function<cplx(const Vec3&)>& fn);

/** || <h k>^s fhat ||, normalized so s = 0 equals the physical L^2 norm. */
double semiclassical_norm(const ScalarField& f, const SobolevSpec& spec);

/** Same norm from an already-transformed field (skips one FFT). */
double semiclassical_norm_from_hat(const ScalarField& fhat, const SobolevSpec& spec);

double l2_norm(const ScalarField& f);
double l2_norm(const VectorField& f);
double sup_norm(const ScalarField& f);

/** integral of f conj(g) dx (trapezoid = exact cell sum on the torus). */
cplx inner_l2(const ScalarField& f, const ScalarField& g);

/** integral of f g dx, no conjugation (distribution duality). */
cplx pairing(const ScalarField& f, const ScalarField& g);

cplx mean_integral(const ScalarField& f);

/**
 * Unnormalized index-space DFT (forward) and its exact inverse (backward,
 * scaled by N^-3), for solvers that iterate in coefficient space. No
 * quadrature or centering factors are applied.
 */
void raw_dft(std::vector<cplx>& values, int n, bool forward);

}  // namespace msw

#endif
