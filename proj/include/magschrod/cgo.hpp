#ifndef MAGSCHROD_CGO_HPP
#define MAGSCHROD_CGO_HPP

#include <vector>

#include "magschrod/dbar.hpp"
#include "magschrod/potentials.hpp"

namespace msw {
namespace cgo {

/**
 * zeta1 = i h xi / 2 + mu1 + i sqrt(1 - h^2 |xi|^2 / 4) mu2 and the mirrored
 * zeta2; both are null and (zeta1 + conj(zeta2)) / h = i xi. The generic
 * decomposition zeta = zeta0 + corrector (corrector = O(h)) is exposed per
 * side.
 */
struct ZetaPair {
    dbar::Frame frame;
    double h;
    CVec3 zeta1;
    CVec3 zeta2;

    const CVec3& zeta(int side) const { return side == 1 ? zeta1 : zeta2; }
    CVec3 zeta0(int side) const {
        return side == 1 ? frame.zeta0_plus() : frame.zeta0_minus();
    }
    CVec3 corrector(int side) const {
        CVec3 z = zeta(side);
        CVec3 z0 = zeta0(side);
        return {z[0] - z0[0], z[1] - z0[1], z[2] - z0[2]};
    }
};

ZetaPair make_zeta_pair(const dbar::Frame& frame, double h);

/**
 * The conjugated operator e^{-x.zeta/h} h^2 L_{A,q} e^{x.zeta/h} applied to a
 * periodic grid field:
 *   -h^2 Lap - 2ih zeta.D + h^2 A.D - 2hi zeta.A + h^2 m_A + h^2 (A^2 + q),
 * with m_A(u) = D.(A u) taken as a spectral divergence.
 */
ScalarField conjugated_apply(const Potentials& p, const CVec3& zeta, double h,
                             const ScalarField& u);

/** Right-hand side g of the remainder equation, assembled from the phase. */
ScalarField assemble_rhs_g(const Potentials& p, const VectorField& a_sharp,
                           const dbar::Phase& phase, const ZetaPair& pair, int side);

struct SolveOptions {
    double rel_tol = 1e-6;
    int max_iter = 500;
    bool weak_check = true;  // evaluate the weak-form residual after assembly
};

struct SolveInfo {
    std::vector<double> residual_history;  // relative H^-1_scl equation residual
    int iterations = 0;
    double final_residual = 0.0;
    double r_h1_scl = 0.0;
    double bound_ratio = 0.0;   // ||r||_H1scl * h / ||g||_H-1scl
    double kernel_gap = 0.0;    // share of g on the projected-out variety bins
};

class SolveError : public std::runtime_error {
  public:
    SolveError(const std::string& msg, SolveInfo info)
        : std::runtime_error(msg), info(std::move(info)) {}
    SolveInfo info;
};

/**
 * Residual-minimizing solve of conjugated_apply(r) = g in the H^-1_scl
 * metric (CGLS on the weighted normal equations with the symbol of the
 * potential-free operator as preconditioner).
 */
ScalarField solve_remainder(const Potentials& p, const ZetaPair& pair, int side,
                            const ScalarField& g, const SolveOptions& opts = {},
                            SolveInfo* info_out = nullptr);

struct CGOSolution {
    int side;
    double h;
    double sigma;
    double tau;
    ZetaPair pair;
    dbar::Phase phase;
    ScalarField amplitude;
    ScalarField remainder;
    ScalarField assembled;  // u = e^{x.zeta/h} (a + r)

    double g_norm_hm1 = 0.0;
    double r_norm_h1 = 0.0;
    double solve_residual = 0.0;
    int iterations = 0;
    double weak_residual = 0.0;
    double transport_residual = 0.0;

    /** grad u from the parts; the exponential never sees a spectral derivative. */
    VectorField assembled_gradient() const;
};

/**
 * Full chain of Prop-2.6 type: tau = h^sigma, mollify, transport phase,
 * remainder right-hand side, remainder solve, assembly, weak-form check.
 * side selects zeta1/zeta2; for side 2 pass the conjugated potentials.
 */
CGOSolution build_cgo(const Potentials& p, const dbar::Frame& frame, double h, double sigma,
                      int side, const SolveOptions& opts = {},
                      const dbar::Phase* phase_hint = nullptr);

/** max_v |B(u,v)| / (||u||_H1(loc) ||v||_H1) over a fixed basis of 20 bumps. */
double weak_equation_residual(const Potentials& p, const CGOSolution& u);

void save_cgo(const CGOSolution& sol, const std::string& dir);

}  // namespace cgo
}  // namespace msw

#endif
