#ifndef MAGSCHROD_RECON_HPP
#define MAGSCHROD_RECON_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "magschrod/cgo.hpp"
#include "magschrod/forward.hpp"

namespace msw {
namespace recon {

/**
 * Volume integral over Omega of
 *   i (A1 - A2) . (u1 grad conj(u2) - conj(u2) grad u1)
 *   + (A1^2 - A2^2 + q1 - q2) u1 conj(u2).
 * Gradients are supplied by the caller: spectral for periodic fields,
 * part-assembled for CGO solutions, edge differences for FEM fields.
 */
cplx eval_integral_identity(const Potentials& p1, const Potentials& p2, const ScalarField& u1,
                            const ScalarField& u2, const VectorField& grad_u1,
                            const VectorField& grad_u2);

/** Identity for a CGO pair evaluated from the parts, with the exponential
 *  growth cancelled analytically (u1 conj(u2) = e^{i x.xi} (a1+r1) conj(a2+r2)). */
cplx eval_integral_identity_cgo(const Potentials& p1, const Potentials& p2,
                                const cgo::CGOSolution& u1, const cgo::CGOSolution& u2);

struct IdentityRoutes {
    cplx volume;
    cplx boundary;
};

/**
 * Both routes of the Prop-3.2 identity on a forward-solver pair: the volume
 * quadrature with the FEM edge-difference machinery and the boundary-pairing
 * difference (N_{A1,q1}u1, [conj u2]) - conj((N_{conj A2,conj q2}u2, [conj u1])).
 */
IdentityRoutes integral_identity_routes(const Potentials& p1, const Potentials& p2,
                                        const forward::BoxDomain& dom, const ScalarField& f1,
                                        const ScalarField& f2);

struct CoefficientDiagnostics {
    std::vector<double> h_values;
    std::vector<cplx> values;       // h * identity per sweep point
    cplx extrapolated = 0.0;
    double extrapolation_residual = 0.0;
    bool phase_swap_bound_ok = true;  // |e^z - e^w| <= |z-w| e^{max Re} audit
};

/**
 * Extrapolated h -> 0 limit of h * identity with CGO inputs, which converges
 * to -2i (mu1 + i mu2) . What(-xi) for W = A1 - A2. Pass the conjugation of
 * nothing: the routine conjugates P2 internally for the side-2 solution.
 */
cplx phase_corrected_fourier_coefficient(const Potentials& p1, const Potentials& p2,
                                         const dbar::Frame& frame,
                                         const std::vector<double>& h_sweep, double sigma,
                                         CoefficientDiagnostics* diag = nullptr);

/** lhs and rhs of the phase-cancellation identity for W and the frame. */
std::pair<cplx, cplx> eskin_ralston_check(const VectorField& w, const dbar::Frame& frame);

struct Projection {
    std::array<int, 3> mode;  // lattice xi in units of 2 pi / L
    Vec3 mu1, mu2;
    cplx value;  // (mu1 + i mu2) . What(-xi)
};

struct AssemblyResult {
    MagneticField2Form da;
    double max_lsq_residual = 0.0;  // over-determined projection inconsistency
    bool consistent = true;
};

/** dA-hat_jk = i (xi_j What_k - xi_k What_j) from tangential projections on
 *  the ball |mode| <= xi_max_modes, zero-filled outside; inverse FFT. */
AssemblyResult assemble_magnetic_field_hat(const Grid3& grid,
                                           const std::vector<Projection>& projections,
                                           int xi_max_modes, double residual_threshold = 1e-6);

/** psi-hat = (k . Ahat) / (i |k|^2), mean zero; rejects non-curl-free input.
 *  With xi_max_modes > 0 the curl-free test is restricted to the mode ball
 *  (mask truncation rings at high frequency without carrying curl there). */
ScalarField gauge_potential_from_difference(const VectorField& a_diff,
                                            double curl_free_threshold = 1e-5,
                                            int xi_max_modes = 0);

struct QRecoveryResult {
    ScalarField q_diff;
    double max_extrapolation_residual = 0.0;
    double a_mismatch_rel = 0.0;
};

/** Per-xi extrapolation of the identity (no h factor) on a gauge-matched pair;
 *  inverse FFT of q-hat over the ball. */
QRecoveryResult recover_electric_potential(const Potentials& p1, const Potentials& p2_gauged,
                                           const std::vector<double>& h_sweep, double sigma,
                                           int xi_max_modes, int workers = 1);

struct ReconConfig {
    int xi_max_modes = 4;               // frequency ball |m| <= 4
    std::vector<double> h_sweep = {0.2, 0.1};
    double sigma = 0.45;
    int workers = 1;
};

struct ReconResult {
    MagneticField2Form da_estimate;
    double da_oracle_rel = 0.0;         // vs in-ball spectral curl of A1 - A2
    double da_noise = 0.0;              // absolute in-ball norm of the estimate
    double da_scale = 0.0;              // in-ball norm of the curl of A1
    std::optional<ScalarField> psi_estimate;
    double psi_gradient_rel = 0.0;      // || grad psi - (A1 - A2) || / || A1 - A2 ||
    ScalarField q_diff_estimate;
    double q_oracle_rel = 0.0;          // vs in-ball FFT of q1 - q2
    double q_noise_scale = 0.0;         // absolute in-ball norm of the estimate
    bool gauge_stage_ran = false;
    bool a_parts_forced = false;        // curl-free check failed; q stage used A1
    double max_lsq_residual = 0.0;
    bool phase_swap_bound_ok = true;
    std::vector<std::string> stage_log;
};

/** Full pipeline: per-xi coefficients -> dA assembly -> gauge potential ->
 *  electric potential difference, with per-stage diagnostics. */
ReconResult reconstruct(const Potentials& p1, const Potentials& p2, const ReconConfig& config);

/** Relative L2 difference of two spectra restricted to the mode ball. */
double inball_rel_error(const ScalarField& est_hat, const ScalarField& oracle_hat,
                        int xi_max_modes);

/** List of lattice modes with |m| <= radius (257 for radius 4). */
std::vector<std::array<int, 3>> mode_ball(int radius);

}  // namespace recon
}  // namespace msw

#endif
