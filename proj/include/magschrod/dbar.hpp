#ifndef MAGSCHROD_DBAR_HPP
#define MAGSCHROD_DBAR_HPP

#include "magschrod/fft.hpp"
#include "magschrod/grid.hpp"

namespace msw {
namespace dbar {

/** Orthonormal pair (mu1, mu2) perpendicular to xi. */
struct Frame {
    Vec3 xi;
    Vec3 mu1;
    Vec3 mu2;
    CVec3 zeta0_plus() const { return {cplx(mu1[0], mu2[0]), cplx(mu1[1], mu2[1]), cplx(mu1[2], mu2[2])}; }
    CVec3 zeta0_minus() const { return {cplx(-mu1[0], mu2[0]), cplx(-mu1[1], mu2[1]), cplx(-mu1[2], mu2[2])}; }
};

/**
 * Deterministic frame: pick the first basis vector e_m with |e_m . xi^| <=
 * 1/sqrt(2), orthogonalize it against xi for mu1, then mu2 = xi^ x mu1.
 */
Frame make_frame(const Vec3& xi);

/** Transport phase for one side of the CGO pair. */
struct Phase {
    ScalarField phi_sharp;           // Phi# on the box grid
    VectorField grad_phi_sharp;      // its exact band-limited gradient
    ScalarField lap_phi_sharp;       // and Laplacian (both from the padded solve)
    double tau;                      // mollification width used (0 tags a limit phase)
    CVec3 zeta0;
    double transport_residual_rel;   // || zeta0.grad Phi# + i zeta0.A# || / || zeta0.A# ||, L2 box
    double sup_phi;
    double sup_grad_phi;

    /** amplitude a = e^{Phi#} */
    ScalarField amplitude() const {
        ScalarField a(phi_sharp.grid());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::exp(phi_sharp[i]);
        return a;
    }
};

/**
 * Geometry of the padded solve: the box is embedded centrally in a padded
 * torus and the convolution kernel is truncated at in-plane radius rho. Any
 * rho at least the largest box-to-support separation gives identical values
 * on the box, so the result does not depend on the padding details.
 */
struct PaddedGeometry {
    int pad_n;          // padded points per axis
    double pad_length;  // padded box side
    double rho;         // kernel truncation radius
};

/** Chooses padding from the support half-width of the data (box units). */
PaddedGeometry plane_geometry(const Grid3& grid, double support_halfwidth);

/**
 * (N_zeta0^{-1} f)(x) = (2 pi)^{-1} iint f(x - y1 Re zeta0 - y2 Im zeta0)
 * / (y1 + i y2) dy1 dy2, realized as an exact Fourier multiplier of the
 * disk-truncated kernel on the padded torus. Requires zeta0.zeta0 = 0 and
 * |Re zeta0| = |Im zeta0| = 1.
 */
ScalarField cauchy_transform_inverse(const ScalarField& f, const CVec3& zeta0);

/** Relative L2(box) residual of zeta0.grad(N^{-1} f) - f, derivative taken on
 *  the padded geometry where the output is a consistent periodic field. */
double inverse_residual(const ScalarField& f, const CVec3& zeta0);

/** Phi# = N_zeta0^{-1}(-i zeta0 . A#) together with the transport residual. */
Phase transport_phase(const VectorField& a_sharp, const CVec3& zeta0, double tau);

/** (integral (1+|x|^2)^delta |f|^2 dx)^{1/2}, weight centered at the box center. */
double weighted_l2_norm(const ScalarField& f, double delta);

void validate_zeta0(const CVec3& zeta0);

}  // namespace dbar
}  // namespace msw

#endif
