#include "magschrod/potentials.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "magschrod/field_io.hpp"

namespace msw {

namespace {

constexpr double kMaskLeakTol = 1e-4;

void apply_mask(ScalarField& f, const ScalarField& mask) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (mask[i] == cplx(0.0)) f[i] = 0.0;
}

double max_outside_mask(const ScalarField& f, const ScalarField& mask) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (mask[i] == cplx(0.0)) m = std::max(m, std::abs(f[i]));
    return m;
}

void check_mask_margin(const ScalarField& mask) {
    const Grid3& g = mask.grid();
    const double margin = g.box_length() / 8.0;
    const double lim = 0.5 * g.box_length() - margin;
    const int n = g.n();
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                cplx m = mask.at(ix, iy, iz);
                if (m != cplx(0.0) && m != cplx(1.0))
                    throw std::invalid_argument("Potentials: mask values must be 0 or 1");
                if (m == cplx(1.0)) {
                    Vec3 x = g.point(ix, iy, iz);
                    if (std::abs(x[0]) > lim || std::abs(x[1]) > lim || std::abs(x[2]) > lim)
                        throw std::invalid_argument(
                            "Potentials: mask support violates the L/8 boundary margin");
                }
            }
}

}  // namespace

Potentials::Potentials(VectorField a, ScalarField q, ScalarField omega_mask)
    : a_(std::move(a)), q_(std::move(q)), mask_(std::move(omega_mask)) {
    if (a_.grid() != q_.grid() || a_.grid() != mask_.grid())
        throw std::invalid_argument("Potentials: fields must share one grid");
    check_mask_margin(mask_);
    for (int c = 0; c < 3; ++c) apply_mask(a_[c], mask_);
    apply_mask(q_, mask_);
    for (int c = 0; c < 3; ++c) a_[c].require_finite("Potentials A");
    q_.require_finite("Potentials q");
}

Potentials Potentials::conjugated() const {
    return Potentials(conjugate(a_), conjugate(q_), mask_);
}

bool Potentials::is_zero() const {
    for (int c = 0; c < 3; ++c)
        for (const cplx& z : a_[c].values())
            if (z != cplx(0.0)) return false;
    for (const cplx& z : q_.values())
        if (z != cplx(0.0)) return false;
    return true;
}

void Potentials::save(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    write_field(dir + "/A1", a_[0], "magnetic-potential-1");
    write_field(dir + "/A2", a_[1], "magnetic-potential-2");
    write_field(dir + "/A3", a_[2], "magnetic-potential-3");
    write_field(dir + "/q", q_, "electric-potential");
    write_field(dir + "/mask", mask_, "omega-mask");
    nlohmann::ordered_json man;
    man["kind"] = "potentials";
    man["n"] = grid().n();
    man["box_length"] = grid().box_length();
    std::ofstream os(dir + "/manifest.json", std::ios::trunc);
    os << man.dump(2) << "\n";
}

Potentials Potentials::load(const std::string& dir) {
    VectorField a(read_field(dir + "/A1"), read_field(dir + "/A2"), read_field(dir + "/A3"));
    return Potentials(std::move(a), read_field(dir + "/q"), read_field(dir + "/mask"));
}

ScalarField gaussian_bump(const Grid3& g, const Vec3& center, double width, double cut_radius,
                          cplx amplitude) {
    ScalarField f(g);
    const int n = g.n();
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                Vec3 x = g.point(ix, iy, iz);
                Vec3 d = x - center;
                double r2 = dot(d, d);
                if (r2 >= cut_radius * cut_radius) continue;
                f.at(ix, iy, iz) = amplitude * std::exp(-0.5 * r2 / (width * width));
            }
    return f;
}

double default_bump_width(const Grid3& g) {
    return std::max(0.03 * g.box_length(), 2.0 * g.spacing());
}

ScalarField plateau_window(const Grid3& g, const Vec3& center, double r_core, double r_outer) {
    // phi(t) = e^{-1/t} transition: exactly 1 on the core, exactly 0 outside
    auto taper = [](double t) {
        if (t <= 0.0) return 1.0;
        if (t >= 1.0) return 0.0;
        double a = std::exp(-1.0 / (1.0 - t));
        double b = std::exp(-1.0 / t);
        return a / (a + b);
    };
    ScalarField f(g);
    const int n = g.n();
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                Vec3 d = g.point(ix, iy, iz) - center;
                double r = std::sqrt(dot(d, d));
                f.at(ix, iy, iz) = taper((r - r_core) / (r_outer - r_core));
            }
    return f;
}

WindowBump plateau_bump(const Grid3& g, const Vec3& center, double r_core, double r_outer) {
    WindowBump out{ScalarField(g), VectorField(g)};
    const double span = r_outer - r_core;
    const int n = g.n();
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                Vec3 d = g.point(ix, iy, iz) - center;
                double r = std::sqrt(dot(d, d));
                double t = (r - r_core) / span;
                if (t >= 1.0) continue;
                std::size_t i = g.index(ix, iy, iz);
                if (t <= 0.0) {
                    out.value[i] = 1.0;
                    continue;
                }
                double a = std::exp(-1.0 / (1.0 - t));
                double b = std::exp(-1.0 / t);
                double s = a + b;
                out.value[i] = a / s;
                double da = -a / ((1.0 - t) * (1.0 - t));
                double db = b / (t * t);
                double dw = (da * b - a * db) / (s * s) / span;
                if (r > 0)
                    for (int c = 0; c < 3; ++c) out.gradient[c][i] = dw * d[c] / r;
            }
    return out;
}

ScalarField box_mask(const Grid3& g, double half_side) {
    ScalarField f(g);
    const int n = g.n();
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                Vec3 x = g.point(ix, iy, iz);
                if (std::abs(x[0]) <= half_side && std::abs(x[1]) <= half_side &&
                    std::abs(x[2]) <= half_side)
                    f.at(ix, iy, iz) = 1.0;
            }
    return f;
}

ScalarField default_omega_mask(const Grid3& g) { return box_mask(g, 0.25 * g.box_length()); }

PotentialKind potential_kind_from_string(const std::string& s) {
    if (s == "smooth") return PotentialKind::Smooth;
    if (s == "indicator") return PotentialKind::Indicator;
    if (s == "gradient") return PotentialKind::Gradient;
    if (s == "plane_wave") return PotentialKind::PlaneWave;
    if (s == "zero") return PotentialKind::Smooth;  // handled by amplitude 0 upstream
    throw std::invalid_argument("make_test_potential: unsupported kind '" + s + "'");
}

Potentials make_test_potential(const Grid3& g, PotentialKind kind, const PotentialParams& p) {
    ScalarField mask = default_omega_mask(g);
    const double L = g.box_length();
    const double r = p.radius_fraction * L;
    VectorField a(g);
    ScalarField q(g);
    const double w = p.width_fraction > 0 ? p.width_fraction * L : default_bump_width(g);
    const double cut = 0.22 * L;
    switch (kind) {
        case PotentialKind::Smooth: {
            // Gaussian profile times a fixed direction, plus an independent q bump
            ScalarField prof = gaussian_bump(g, p.center, w, cut, cplx(p.amplitude));
            for (int c = 0; c < 3; ++c)
                for (std::size_t i = 0; i < prof.size(); ++i) a[c][i] = p.direction[c] * prof[i];
            q = gaussian_bump(g, p.center, 0.9 * w, cut, cplx(p.q_amplitude));
            break;
        }
        case PotentialKind::Indicator: {
            const int n = g.n();
            for (int iz = 0; iz < n; ++iz)
                for (int iy = 0; iy < n; ++iy)
                    for (int ix = 0; ix < n; ++ix) {
                        Vec3 x = g.point(ix, iy, iz);
                        Vec3 d = x - p.center;
                        if (dot(d, d) <= r * r)
                            for (int c = 0; c < 3; ++c)
                                a[c].at(ix, iy, iz) = p.amplitude * p.direction[c];
                    }
            q = gaussian_bump(g, p.center, 0.9 * w, cut, cplx(p.q_amplitude));
            break;
        }
        case PotentialKind::Gradient: {
            ScalarField psi = gaussian_bump(g, p.center, w, cut, cplx(p.amplitude));
            a = spectral_gradient(psi);
            break;
        }
        case PotentialKind::PlaneWave: {
            // single lattice mode under a smooth window that is 1 on the core
            ScalarField win = plateau_window(g, p.center, 0.1 * L, 0.24 * L);
            const int n = g.n();
            Vec3 k = {2.0 * M_PI / L * p.wave_mode[0], 2.0 * M_PI / L * p.wave_mode[1],
                      2.0 * M_PI / L * p.wave_mode[2]};
            for (int iz = 0; iz < n; ++iz)
                for (int iy = 0; iy < n; ++iy)
                    for (int ix = 0; ix < n; ++ix) {
                        Vec3 x = g.point(ix, iy, iz);
                        cplx w = win.at(ix, iy, iz) * p.amplitude *
                                 std::exp(cplx(0.0, dot(to_complex(x), k).real()));
                        for (int c = 0; c < 3; ++c) a[c].at(ix, iy, iz) = p.direction[c] * w;
                    }
            break;
        }
    }
    return Potentials(std::move(a), std::move(q), std::move(mask));
}

ScalarField mollify_scalar(const ScalarField& f, const MollifierSpec& spec) {
    const Grid3& g = f.grid();
    if (spec.tau < 2.0 * g.spacing())
        throw std::invalid_argument("mollify: tau below 2*spacing is not resolvable");
    // sample the kernel, renormalize to unit discrete mass, convolve via FFT;
    // with quadrature-scaled transforms the convolution theorem is exact
    ScalarField kernel(g);
    const int n = g.n();
    const double tau = spec.tau;
    double mass = 0.0;
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                Vec3 x = g.point(ix, iy, iz);
                double u2 = dot(x, x) / (tau * tau);
                if (u2 >= 1.0) continue;
                double w = std::pow(1.0 - u2, 4);
                kernel.at(ix, iy, iz) = w;
                mass += w;
            }
    mass *= g.cell_volume();
    for (cplx& z : kernel.values()) z /= mass;
    ScalarField khat = fourier_transform(kernel, FftDirection::Forward);
    ScalarField fhat = fourier_transform(f, FftDirection::Forward);
    for (std::size_t i = 0; i < fhat.size(); ++i) fhat[i] *= khat[i];
    return fourier_transform(fhat, FftDirection::Inverse);
}

VectorField mollify(const Potentials& p, const MollifierSpec& spec) {
    return VectorField(mollify_scalar(p.a()[0], spec), mollify_scalar(p.a()[1], spec),
                       mollify_scalar(p.a()[2], spec));
}

MagneticField2Form magnetic_field(const VectorField& a) {
    ScalarField f12 = spectral_derivative(a[1], 1) - spectral_derivative(a[0], 2);
    ScalarField f13 = spectral_derivative(a[2], 1) - spectral_derivative(a[0], 3);
    ScalarField f23 = spectral_derivative(a[2], 2) - spectral_derivative(a[1], 3);
    return MagneticField2Form(std::move(f12), std::move(f13), std::move(f23));
}

double l2_norm(const MagneticField2Form& f) {
    double a = l2_norm(f.f12), b = l2_norm(f.f13), c = l2_norm(f.f23);
    return std::sqrt(a * a + b * b + c * c);
}

double sup_norm(const MagneticField2Form& f) {
    return std::max({sup_norm(f.f12), sup_norm(f.f13), sup_norm(f.f23)});
}

Potentials gauge_shift(const Potentials& p, const ScalarField& psi) {
    for (const cplx& z : psi.values())
        if (z.imag() != 0.0) throw std::invalid_argument("gauge_shift: psi must be real-valued");
    VectorField grad = spectral_gradient(psi);
    VectorField shifted = p.a() + grad;
    // the mask is re-applied by the constructor; reject psi whose gradient
    // carries mass there, since that silently changes the potential
    double grad_scale = std::max({sup_norm(grad[0]), sup_norm(grad[1]), sup_norm(grad[2]), 1e-300});
    for (int c = 0; c < 3; ++c) {
        if (max_outside_mask(grad[c], p.omega_mask()) > kMaskLeakTol * grad_scale)
            throw std::invalid_argument("gauge_shift: psi is not supported inside the mask");
    }
    return Potentials(std::move(shifted), p.q(), p.omega_mask());
}

}  // namespace msw
