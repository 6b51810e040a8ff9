#include "magschrod/dbar.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace msw {
namespace dbar {

namespace {

// J0 via the Abramowitz--Stegun 9.4.1 / 9.4.3 rational fits (|err| < 1e-7);
// the kernel symbol needs far less accuracy than the 1e-4 transport targets.
double besj0(double x) {
    double ax = std::abs(x);
    if (ax < 8.0) {
        double y = x * x;
        double num = 57568490574.0 + y * (-13362590354.0 + y * (651619640.7 +
                     y * (-11214424.18 + y * (77392.33017 + y * (-184.9052456)))));
        double den = 57568490411.0 + y * (1029532985.0 + y * (9494680.718 +
                     y * (59272.64853 + y * (267.8532712 + y))));
        return num / den;
    }
    double z = 8.0 / ax;
    double y = z * z;
    double xx = ax - 0.785398164;
    double p0 = 1.0 + y * (-0.1098628627e-2 + y * (0.2734510407e-4 +
                y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
    double q0 = -0.1562499995e-1 + y * (0.1430488765e-3 + y * (-0.6911147651e-5 +
                y * (0.7621095161e-6 + y * (-0.934935152e-7))));
    return std::sqrt(0.636619772 / ax) * (std::cos(xx) * p0 - z * std::sin(xx) * q0);
}

bool fft_friendly(int n) {
    for (int p : {2, 3, 5, 7})
        while (n % p == 0) n /= p;
    return n == 1;
}

int next_fft_size(int n) {
    if (n % 2) ++n;
    while (!fft_friendly(n)) n += 2;
    return n;
}

class PadPlanCache {
  public:
    static PadPlanCache& instance() {
        static PadPlanCache c;
        return c;
    }
    fftw_plan get(int n, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> tmp(std::size_t(n) * n * n);
        fftw_plan p = fftw_plan_dft_3d(n, n, n,
                                       reinterpret_cast<fftw_complex*>(tmp.data()),
                                       reinterpret_cast<fftw_complex*>(tmp.data()),
                                       sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

  private:
    std::mutex mu_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

void run_padded_dft(std::vector<cplx>& v, int n, int sign) {
    fftw_execute_dft(PadPlanCache::instance().get(n, sign),
                     reinterpret_cast<fftw_complex*>(v.data()),
                     reinterpret_cast<fftw_complex*>(v.data()));
}

double support_halfwidth(const ScalarField& f) {
    const Grid3& g = f.grid();
    double sup = sup_norm(f);
    if (sup == 0.0) return 0.0;
    const double thresh = 1e-13 * sup;
    const int n = g.n();
    double hw = 0.0;
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                if (std::abs(f.at(ix, iy, iz)) <= thresh) continue;
                Vec3 x = g.point(ix, iy, iz);
                hw = std::max({hw, std::abs(x[0]), std::abs(x[1]), std::abs(x[2])});
            }
    return hw;
}

struct PaddedSolve {
    ScalarField phi;        // box restriction of N^{-1} f
    VectorField grad_phi;   // box restriction of its gradient
    ScalarField lap_phi;
};

// One padded pass: embed, forward DFT, kernel and derivative multipliers,
// four backward DFTs, restrict to the box.
PaddedSolve padded_solve(const ScalarField& f, const CVec3& zeta0, const PaddedGeometry& geo) {
    const Grid3& g = f.grid();
    const int n = g.n();
    const int np = geo.pad_n;
    const int off = (np - n) / 2;
    const Vec3 re = real_part(zeta0);
    const Vec3 im = imag_part(zeta0);

    std::vector<cplx> pad(std::size_t(np) * np * np, cplx(0.0));
    auto pidx = [np](int ix, int iy, int iz) {
        return std::size_t(ix) + std::size_t(np) * (std::size_t(iy) + std::size_t(np) * iz);
    };
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                pad[pidx(ix + off, iy + off, iz + off)] = f.at(ix, iy, iz);

    run_padded_dft(pad, np, FFTW_FORWARD);

    // disk-truncated kernel symbol of 1/(2 pi (y1 + i y2)) in frame coordinates
    const double dk = 2.0 * M_PI / geo.pad_length;
    const double inv_npts = 1.0 / (double(np) * np * np);
    std::vector<cplx> hat(pad.size());
    std::size_t idx = 0;
    for (int jz = 0; jz < np; ++jz) {
        int mz = jz < np / 2 ? jz : jz - np;
        for (int jy = 0; jy < np; ++jy) {
            int my = jy < np / 2 ? jy : jy - np;
            for (int jx = 0; jx < np; ++jx, ++idx) {
                int mx = jx < np / 2 ? jx : jx - np;
                if (std::abs(mx) == np / 2 || std::abs(my) == np / 2 || std::abs(mz) == np / 2) {
                    hat[idx] = 0.0;
                    continue;
                }
                Vec3 k = {dk * mx, dk * my, dk * mz};
                double k1 = dot(k, re);
                double k2 = dot(k, im);
                double kp2 = k1 * k1 + k2 * k2;
                // modes parallel to the frame axis lie in the kernel of the
                // plane convolution (the disk kernel has zero mean); roundoff
                // must not turn them into 1/kappa amplifiers
                if (kp2 <= 1e-20 * dot(k, k)) {
                    hat[idx] = 0.0;
                    continue;
                }
                double kp = std::sqrt(kp2);
                double x = kp * geo.rho;
                double factor;  // (1 - J0(kp rho)) / kp^2
                if (x < 0.5) {
                    // series form dodges the cancellation of 1 - J0 near 0
                    double x2 = x * x;
                    factor = geo.rho * geo.rho *
                             (0.25 - x2 / 64.0 + x2 * x2 / 2304.0 - x2 * x2 * x2 / 147456.0);
                } else {
                    factor = (1.0 - besj0(x)) / kp2;
                }
                cplx m = cplx(0.0, -1.0) * cplx(k1, -k2) * factor;
                hat[idx] = m * pad[idx] * inv_npts;
            }
        }
    }

    PaddedSolve out{ScalarField(g), VectorField(g), ScalarField(g)};
    std::vector<cplx> work(hat.size());

    auto restrict_to_box = [&](const std::vector<cplx>& src, ScalarField& dst) {
        for (int iz = 0; iz < n; ++iz)
            for (int iy = 0; iy < n; ++iy)
                for (int ix = 0; ix < n; ++ix)
                    dst.at(ix, iy, iz) = src[pidx(ix + off, iy + off, iz + off)];
    };

    work = hat;
    run_padded_dft(work, np, FFTW_BACKWARD);
    restrict_to_box(work, out.phi);

    for (int axis = 0; axis < 3; ++axis) {
        idx = 0;
        for (int jz = 0; jz < np; ++jz) {
            int mz = jz < np / 2 ? jz : jz - np;
            for (int jy = 0; jy < np; ++jy) {
                int my = jy < np / 2 ? jy : jy - np;
                for (int jx = 0; jx < np; ++jx, ++idx) {
                    int mx = jx < np / 2 ? jx : jx - np;
                    double ka = dk * (axis == 0 ? mx : (axis == 1 ? my : mz));
                    work[idx] = cplx(0.0, ka) * hat[idx];
                }
            }
        }
        run_padded_dft(work, np, FFTW_BACKWARD);
        restrict_to_box(work, out.grad_phi[axis]);
    }

    idx = 0;
    for (int jz = 0; jz < np; ++jz) {
        int mz = jz < np / 2 ? jz : jz - np;
        for (int jy = 0; jy < np; ++jy) {
            int my = jy < np / 2 ? jy : jy - np;
            for (int jx = 0; jx < np; ++jx, ++idx) {
                int mx = jx < np / 2 ? jx : jx - np;
                double k2 = dk * dk * double(mx * mx + my * my + mz * mz);
                work[idx] = -k2 * hat[idx];
            }
        }
    }
    run_padded_dft(work, np, FFTW_BACKWARD);
    restrict_to_box(work, out.lap_phi);
    return out;
}

}  // namespace

void validate_zeta0(const CVec3& zeta0) {
    const double tol = 1e-10;
    cplx null = dot(zeta0, zeta0);
    Vec3 re = real_part(zeta0);
    Vec3 im = imag_part(zeta0);
    if (std::abs(null) > tol || std::abs(norm(re) - 1.0) > tol || std::abs(norm(im) - 1.0) > tol)
        throw std::invalid_argument(
            "cauchy_transform_inverse: zeta0 must satisfy zeta0.zeta0=0 and |Re|=|Im|=1");
}

Frame make_frame(const Vec3& xi) {
    double n = norm(xi);
    if (!(n > 0)) throw std::invalid_argument("make_frame: xi must be nonzero");
    Vec3 xin = {xi[0] / n, xi[1] / n, xi[2] / n};
    int pick = -1;
    for (int m = 0; m < 3; ++m) {
        if (std::abs(xin[m]) <= 1.0 / std::sqrt(2.0) + 1e-15) {
            pick = m;
            break;
        }
    }
    Vec3 e = {0.0, 0.0, 0.0};
    e[pick] = 1.0;
    Vec3 mu1 = normalized(e - dot(e, xin) * xin);
    Vec3 mu2 = cross(xin, mu1);
    return Frame{xi, mu1, mu2};
}

PaddedGeometry plane_geometry(const Grid3& grid, double support_halfwidth) {
    const double L = grid.box_length();
    const double s = grid.spacing();
    const double sep = std::sqrt(3.0) * (0.5 * L + std::min(support_halfwidth, 0.5 * L));
    const double rho = sep + 4.0 * s;
    const double need = rho + sep + 4.0 * s;
    int pad_n = next_fft_size(int(std::ceil(need / s)));
    if ((pad_n - grid.n()) % 2 != 0) pad_n = next_fft_size(pad_n + 1);
    return PaddedGeometry{pad_n, pad_n * s, rho};
}

ScalarField cauchy_transform_inverse(const ScalarField& f, const CVec3& zeta0) {
    validate_zeta0(zeta0);
    f.require_finite("cauchy_transform_inverse");
    double hw = support_halfwidth(f);
    if (hw == 0.0) return ScalarField(f.grid());
    return padded_solve(f, zeta0, plane_geometry(f.grid(), hw)).phi;
}

double inverse_residual(const ScalarField& f, const CVec3& zeta0) {
    validate_zeta0(zeta0);
    double hw = support_halfwidth(f);
    double fnorm = l2_norm(f);
    if (hw == 0.0 || fnorm == 0.0) return 0.0;
    PaddedSolve sol = padded_solve(f, zeta0, plane_geometry(f.grid(), hw));
    ScalarField resid(f.grid());
    for (std::size_t i = 0; i < resid.size(); ++i) {
        cplx nphi = zeta0[0] * sol.grad_phi[0][i] + zeta0[1] * sol.grad_phi[1][i] +
                    zeta0[2] * sol.grad_phi[2][i];
        resid[i] = nphi - f[i];
    }
    return l2_norm(resid) / fnorm;
}

Phase transport_phase(const VectorField& a_sharp, const CVec3& zeta0, double tau) {
    validate_zeta0(zeta0);
    const Grid3& g = a_sharp.grid();
    ScalarField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        cplx za = zeta0[0] * a_sharp[0][i] + zeta0[1] * a_sharp[1][i] + zeta0[2] * a_sharp[2][i];
        f[i] = cplx(0.0, -1.0) * za;
    }
    double fnorm = l2_norm(f);
    if (fnorm == 0.0) {
        return Phase{ScalarField(g), VectorField(g), ScalarField(g), tau, zeta0, 0.0, 0.0, 0.0};
    }
    PaddedSolve sol = padded_solve(f, zeta0, plane_geometry(g, support_halfwidth(f)));
    ScalarField resid(g);
    for (std::size_t i = 0; i < resid.size(); ++i) {
        cplx nphi = zeta0[0] * sol.grad_phi[0][i] + zeta0[1] * sol.grad_phi[1][i] +
                    zeta0[2] * sol.grad_phi[2][i];
        resid[i] = nphi - f[i];
    }
    double sup_grad = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double m2 = std::norm(sol.grad_phi[0][i]) + std::norm(sol.grad_phi[1][i]) +
                    std::norm(sol.grad_phi[2][i]);
        sup_grad = std::max(sup_grad, m2);
    }
    double residual_rel = l2_norm(resid) / fnorm;
    double sup_phi = sup_norm(sol.phi);
    return Phase{std::move(sol.phi), std::move(sol.grad_phi), std::move(sol.lap_phi), tau, zeta0,
                 residual_rel, sup_phi, std::sqrt(sup_grad)};
}

double weighted_l2_norm(const ScalarField& f, double delta) {
    if (!(delta > -1.0 && delta < 1.0))
        throw std::invalid_argument("weighted_l2_norm: delta must lie in (-1, 1)");
    const Grid3& g = f.grid();
    const int n = g.n();
    double acc = 0.0;
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                Vec3 x = g.point(ix, iy, iz);
                acc += std::pow(1.0 + dot(x, x), delta) * std::norm(f.at(ix, iy, iz));
            }
    return std::sqrt(acc * g.cell_volume());
}

}  // namespace dbar
}  // namespace msw
