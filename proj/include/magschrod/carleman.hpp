#ifndef MAGSCHROD_CARLEMAN_HPP
#define MAGSCHROD_CARLEMAN_HPP

#include <vector>

#include "magschrod/potentials.hpp"
#include "magschrod/rng.hpp"

namespace msw {
namespace carleman {

/**
 * Linear limiting weight phi = alpha.x and its convexification
 * phi_eps = phi + (h / 2 eps) phi^2. The paper regime is 0 < h << eps << 1;
 * sweeps may step outside it, so the regime is recorded, not enforced.
 */
struct CarlemanWeight {
    Vec3 alpha;
    double epsilon;
    double h;
    CarlemanWeight(const Vec3& alpha_, double eps_, double h_)
        : alpha(alpha_), epsilon(eps_), h(h_) {
        if (std::abs(norm(alpha) - 1.0) > 1e-12)
            throw std::invalid_argument("CarlemanWeight: |alpha| must be 1");
        if (!(epsilon > 0) || !(h > 0))
            throw std::invalid_argument("CarlemanWeight: epsilon and h must be positive");
    }
    bool in_paper_regime() const { return h < epsilon; }
};

double convexified_weight(const CarlemanWeight& w, const Vec3& x);
Vec3 convexified_weight_gradient(const CarlemanWeight& w, const Vec3& x);

/** e^{phi_eps/h} (-h^2 Lap) e^{-phi_eps/h} u, term-expanded (no exponentials). */
ScalarField conjugated_laplacian(const CarlemanWeight& w, const ScalarField& u);

/** e^{phi/h} (h^2 L_{A,q}) e^{-phi/h} u with the plain linear weight. */
ScalarField conjugated_magnetic(const Potentials& p, const Vec3& alpha, double h,
                                const ScalarField& u);

/** Only the first-order A terms of the conjugated operator (eq. 2.3 probe). */
ScalarField conjugated_first_order_terms(const Potentials& p, const CarlemanWeight& w,
                                         const ScalarField& u);

struct ProbeReport {
    std::vector<double> h_values;
    std::vector<double> min_ratio;    // per h, min over samples
    std::vector<std::vector<double>> ratios;  // per h, all samples
    double slope = 0.0;               // log-log fit of min_ratio vs h
    double constant = 0.0;            // fitted prefactor
    int samples = 0;
    bool regime_ok = true;
};

/** Random compactly supported probe bump inside the default mask. */
ScalarField probe_bump(const Grid3& grid, RngStream& rng);

/** Probe bump carrying a plane-wave modulation at wavevector k_mod. */
ScalarField modulated_probe_bump(const Grid3& grid, RngStream& rng, const Vec3& k_mod);
ScalarField modulated_probe_bump_at(const Grid3& grid, const Vec3& center, const Vec3& widths,
                                    const Vec3& k_mod);

/**
 * Deterministic mixed family: unmodulated bumps plus bumps modulated near the
 * semiclassical characteristic shell |k| = |grad phi| / h of the linear
 * weight, where the estimate's lower bound is attained.
 */
std::vector<ScalarField> make_probe_family(const Grid3& grid, RngStream& rng,
                                           const Vec3& weight_dir, double epsilon, double h,
                                           int samples);

enum class ProbeFamily {
    SpecBumps,   // random tensor Gaussians (the documented default family)
    Quasimode,   // adds characteristic-shell modulated bumps
};

/** min over samples of ||P_phieps u||_{H^s} / ||u||_{H^{s+2}} across an h sweep. */
ProbeReport probe_laplacian_estimate(const Grid3& grid, const Vec3& alpha, double epsilon,
                                     double s, int samples, const std::vector<double>& h_sweep,
                                     std::uint64_t seed, int workers = 1,
                                     ProbeFamily family = ProbeFamily::SpecBumps);

/**
 * Same statistics for h^2 L_{A,q} with s = -1 right / s = +1 left norms. The
 * zero-order term of the conjugated operator dominates low-frequency bumps as
 * h -> 0 (their ratio tends to 1), so this probe always samples the
 * characteristic shell as well.
 */
ProbeReport probe_magnetic_estimate(const Potentials& p, const Vec3& alpha, int samples,
                                    const std::vector<double>& h_sweep, std::uint64_t seed,
                                    int workers = 1);

/** Least-squares slope of log(y) against log(x). */
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace carleman
}  // namespace msw

#endif
