#ifndef MAGSCHROD_POTENTIALS_HPP
#define MAGSCHROD_POTENTIALS_HPP

#include <string>

#include "magschrod/fft.hpp"
#include "magschrod/grid.hpp"

namespace msw {

/**
 * Magnetic potential A, electric potential q and the {0,1} mask marking the
 * open set they live on. A and q vanish identically off the mask (extension
 * by zero) and the mask keeps at least box_length/8 of clearance from the
 * box faces.
 */
class Potentials {
  public:
    Potentials(VectorField a, ScalarField q, ScalarField omega_mask);

    const Grid3& grid() const { return a_.grid(); }
    const VectorField& a() const { return a_; }
    const ScalarField& q() const { return q_; }
    const ScalarField& omega_mask() const { return mask_; }

    Potentials conjugated() const;
    Potentials with_a(VectorField a) const { return Potentials(std::move(a), q_, mask_); }
    bool is_zero() const;

    void save(const std::string& dir) const;
    static Potentials load(const std::string& dir);

  private:
    VectorField a_;
    ScalarField q_;
    ScalarField mask_;
};

/** Antisymmetric components (1,2), (1,3), (2,3) of dA; F_kj = -F_jk. */
struct MagneticField2Form {
    ScalarField f12, f13, f23;
    MagneticField2Form(ScalarField a, ScalarField b, ScalarField c)
        : f12(std::move(a)), f13(std::move(b)), f23(std::move(c)) {}
};

/**
 * Fixed smooth bump c (1 - |x/tau|^2)^4 on |x| <= tau, renormalized after
 * sampling so the discrete integral is 1.
 */
struct MollifierSpec {
    double tau;
    explicit MollifierSpec(double tau_) : tau(tau_) {
        if (!(tau > 0)) throw std::invalid_argument("MollifierSpec: tau must be positive");
    }
};

enum class PotentialKind { Smooth, Indicator, Gradient, PlaneWave };

struct PotentialParams {
    double amplitude = 1.0;
    double radius_fraction = 0.2;   // support radius as a fraction of L
    Vec3 direction = {1.0, 0.0, 0.0};
    std::array<int, 3> wave_mode = {1, 0, 0};  // lattice mode for PlaneWave
    double q_amplitude = 0.0;
    Vec3 center = {0.0, 0.0, 0.0};
    double width_fraction = 0.0;    // Gaussian width / L; 0 picks a grid-resolvable default
};

PotentialKind potential_kind_from_string(const std::string& s);

Potentials make_test_potential(const Grid3& grid, PotentialKind kind, const PotentialParams& params);

/** A_sharp = A * Psi_tau by FFT convolution; exact for the sampled kernel. */
VectorField mollify(const Potentials& p, const MollifierSpec& spec);
ScalarField mollify_scalar(const ScalarField& f, const MollifierSpec& spec);

/** F_jk = d_j A_k - d_k A_j via spectral derivatives. */
MagneticField2Form magnetic_field(const VectorField& a);

double l2_norm(const MagneticField2Form& f);
double sup_norm(const MagneticField2Form& f);

/** (A + grad psi, q) -- same mask; psi must live strictly inside the mask. */
Potentials gauge_shift(const Potentials& p, const ScalarField& psi);

/** Grid-friendly C^infty-like bump: Gaussian of width w hard-zeroed at r_cut. */
ScalarField gaussian_bump(const Grid3& grid, const Vec3& center, double width, double cut_radius,
                          cplx amplitude = cplx(1.0));

/** Gaussian width that balances truncation and aliasing tails on this grid. */
double default_bump_width(const Grid3& grid);

/** C^infty radial window equal to 1 for r <= r_core, 0 for r >= r_outer. */
ScalarField plateau_window(const Grid3& grid, const Vec3& center, double r_core, double r_outer);

/** Same window with its closed-form gradient (no spectral ringing). */
struct WindowBump {
    ScalarField value;
    VectorField gradient;
};
WindowBump plateau_bump(const Grid3& grid, const Vec3& center, double r_core, double r_outer);

/** Characteristic function of the centered box |x_i| <= half_side. */
ScalarField box_mask(const Grid3& grid, double half_side);

/** Default computation domain: centered box of side L/2 (margin L/4). */
ScalarField default_omega_mask(const Grid3& grid);

}  // namespace msw

#endif
