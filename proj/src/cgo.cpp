#include "magschrod/cgo.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "magschrod/field_io.hpp"
#include "magschrod/rng.hpp"

#include <cstdlib>

namespace msw {
namespace cgo {

namespace {

constexpr double kMaxExponent = 300.0;

// 1-D symbol tables for the solver: odd (derivative) symbols have the
// Nyquist bin zeroed to match spectral_derivative.
struct SymbolTables {
    std::vector<double> k_odd;
    std::vector<double> k_full;
    explicit SymbolTables(const Grid3& g) {
        const int n = g.n();
        k_odd.resize(n);
        k_full.resize(n);
        for (int j = 0; j < n; ++j) {
            double k = g.wavenumber(j);
            k_full[j] = k;
            k_odd[j] = (g.freq_index(j) == -n / 2) ? 0.0 : k;
        }
    }
};

struct BinVisitor {
    int n;
    template <typename Fn>
    void operator()(Fn&& fn) const {
        std::size_t idx = 0;
        for (int jz = 0; jz < n; ++jz)
            for (int jy = 0; jy < n; ++jy)
                for (int jx = 0; jx < n; ++jx, ++idx) fn(jx, jy, jz, idx);
    }
};

/**
 * Fourier-bin representation of the conjugated operator. The symbol part
 * p(k) = h^2 |k|^2 - 2 i h zeta.k is diagonal; the potential terms run
 * through physical space.
 */
class ConjugatedOperator {
  public:
    ConjugatedOperator(const Potentials& p, const CVec3& zeta, double h)
        : grid_(p.grid()), tables_(grid_), zeta_(zeta), h_(h), has_a_(false), has_c0_(false) {
        const std::size_t npts = grid_.num_points();
        symbol_.resize(npts);
        BinVisitor{grid_.n()}([&](int jx, int jy, int jz, std::size_t i) {
            double kx = tables_.k_full[jx], ky = tables_.k_full[jy], kz = tables_.k_full[jz];
            double k2 = kx * kx + ky * ky + kz * kz;
            cplx zk = zeta_[0] * tables_.k_odd[jx] + zeta_[1] * tables_.k_odd[jy] +
                      zeta_[2] * tables_.k_odd[jz];
            symbol_[i] = h_ * h_ * k2 - cplx(0.0, 2.0 * h_) * zk;
        });
        for (int c = 0; c < 3; ++c) {
            a_[c] = &p.a()[c].values();
            for (const cplx& z : *a_[c])
                if (z != cplx(0.0)) { has_a_ = true; break; }
        }
        c0_.resize(npts);
        for (std::size_t i = 0; i < npts; ++i) {
            CVec3 av = {p.a()[0][i], p.a()[1][i], p.a()[2][i]};
            cplx a2 = dot(av, av);
            c0_[i] = cplx(0.0, -2.0 * h_) * dot(zeta_, av) + h_ * h_ * (a2 + p.q()[i]);
            if (c0_[i] != cplx(0.0)) has_c0_ = true;
        }
    }

    bool potential_free() const { return !has_a_ && !has_c0_; }
    const std::vector<cplx>& symbol() const { return symbol_; }

    // y = L x (adjoint=false) or y = L^H x (adjoint=true), x and y in bins
    void apply(const std::vector<cplx>& x, std::vector<cplx>& y, bool adjoint) const {
        const std::size_t npts = x.size();
        const int n = grid_.n();
        y.resize(npts);
        for (std::size_t i = 0; i < npts; ++i)
            y[i] = (adjoint ? std::conj(symbol_[i]) : symbol_[i]) * x[i];
        if (!has_a_ && !has_c0_) return;

        std::vector<cplx> phys(x);
        raw_dft(phys, n, false);

        std::vector<cplx> accum(npts, cplx(0.0));
        if (has_c0_) {
            for (std::size_t i = 0; i < npts; ++i)
                accum[i] = (adjoint ? std::conj(c0_[i]) : c0_[i]) * phys[i];
        }
        if (has_a_) {
            const double h2 = h_ * h_;
            // first-order term h^2 A.D (or its adjoint h^2 conj(A).D)
            std::vector<cplx> du(npts);
            for (int axis = 0; axis < 3; ++axis) {
                du = x;
                mult_k(du, axis);
                raw_dft(du, n, false);
                const std::vector<cplx>& ac = *a_[axis];
                if (!adjoint)
                    for (std::size_t i = 0; i < npts; ++i) accum[i] += h2 * ac[i] * du[i];
                else
                    for (std::size_t i = 0; i < npts; ++i)
                        accum[i] += h2 * std::conj(ac[i]) * du[i];
            }
        }
        raw_dft(accum, n, true);
        for (std::size_t i = 0; i < npts; ++i) y[i] += accum[i];
        if (has_a_) {
            // divergence-form term h^2 m_A (or adjoint via conj(A))
            const double h2 = h_ * h_;
            std::vector<cplx> va(npts);
            for (int axis = 0; axis < 3; ++axis) {
                const std::vector<cplx>& ac = *a_[axis];
                if (!adjoint)
                    for (std::size_t i = 0; i < npts; ++i) va[i] = ac[i] * phys[i];
                else
                    for (std::size_t i = 0; i < npts; ++i) va[i] = std::conj(ac[i]) * phys[i];
                raw_dft(va, n, true);
                add_k_mult(va, axis, h2, y);
            }
        }
    }

  private:
    void mult_k(std::vector<cplx>& v, int axis) const {
        BinVisitor{grid_.n()}([&](int jx, int jy, int jz, std::size_t i) {
            int j = axis == 0 ? jx : (axis == 1 ? jy : jz);
            v[i] *= tables_.k_odd[j];
        });
    }
    void add_k_mult(const std::vector<cplx>& v, int axis, double scale,
                    std::vector<cplx>& out) const {
        BinVisitor{grid_.n()}([&](int jx, int jy, int jz, std::size_t i) {
            int j = axis == 0 ? jx : (axis == 1 ? jy : jz);
            out[i] += scale * tables_.k_odd[j] * v[i];
        });
    }

    Grid3 grid_;
    SymbolTables tables_;
    CVec3 zeta_;
    double h_;
    std::vector<cplx> symbol_;
    const std::vector<cplx>* a_[3];
    std::vector<cplx> c0_;
    bool has_a_;
    bool has_c0_;
};

double bin_norm(const std::vector<cplx>& v) {
    double acc = 0.0;
    for (const cplx& z : v) acc += std::norm(z);
    return std::sqrt(acc);
}

cplx bin_dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx acc(0.0);
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

void exponent_guard(const Grid3& g, double h) {
    double worst = std::sqrt(3.0) * 0.5 * g.box_length() / h;
    if (worst > kMaxExponent)
        throw std::invalid_argument(
            "build_cgo: e^{x.zeta/h} exceeds double range on this box; increase h");
}

}  // namespace

ZetaPair make_zeta_pair(const dbar::Frame& frame, double h) {
    if (!(h > 0)) throw std::invalid_argument("make_zeta_pair: h must be positive");
    double xin = norm(frame.xi);
    if (h * xin >= 2.0)
        throw std::invalid_argument(
            "make_zeta_pair: h |xi| >= 2 leaves no real root in eq. for zeta; shrink h");
    double beta = std::sqrt(1.0 - h * h * xin * xin / 4.0);
    CVec3 z1, z2;
    for (int c = 0; c < 3; ++c) {
        cplx ihxi(0.0, 0.5 * h * frame.xi[c]);
        z1[c] = ihxi + frame.mu1[c] + cplx(0.0, beta) * frame.mu2[c];
        z2[c] = -ihxi - frame.mu1[c] + cplx(0.0, beta) * frame.mu2[c];
    }
    ZetaPair pair{frame, h, z1, z2};
    for (int side : {1, 2}) {
        if (std::abs(dot(pair.zeta(side), pair.zeta(side))) > 1e-12)
            throw std::logic_error("make_zeta_pair: null condition violated");
    }
    for (int c = 0; c < 3; ++c) {
        cplx s = (z1[c] + std::conj(z2[c])) / h - cplx(0.0, frame.xi[c]);
        if (std::abs(s) > 1e-12) throw std::logic_error("make_zeta_pair: xi condition violated");
    }
    return pair;
}

ScalarField conjugated_apply(const Potentials& p, const CVec3& zeta, double h,
                             const ScalarField& u) {
    if (u.grid() != p.grid()) throw std::invalid_argument("conjugated_apply: grid mismatch");
    ConjugatedOperator op(p, zeta, h);
    std::vector<cplx> bins = u.values();
    raw_dft(bins, u.grid().n(), true);
    std::vector<cplx> out;
    op.apply(bins, out, false);
    raw_dft(out, u.grid().n(), false);
    return ScalarField(u.grid(), std::move(out));
}

ScalarField assemble_rhs_g(const Potentials& p, const VectorField& a_sharp,
                           const dbar::Phase& phase, const ZetaPair& pair, int side) {
    const Grid3& g = p.grid();
    CVec3 z0 = pair.zeta0(side);
    for (int c = 0; c < 3; ++c)
        if (std::abs(z0[c] - phase.zeta0[c]) > 1e-12)
            throw std::invalid_argument("assemble_rhs_g: phase was built for a different zeta0");

    const CVec3 zc = pair.corrector(side);
    const double h = pair.h;
    const double h2 = h * h;

    ScalarField amp = phase.amplitude();
    // m_A(a) = -i div(A a): A has compact support, so the product is periodic
    VectorField a_times_amp(g);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < amp.size(); ++i) a_times_amp[c][i] = p.a()[c][i] * amp[i];
    ScalarField div_a_amp = spectral_divergence(a_times_amp);

    ScalarField out(g);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const cplx a = amp[i];
        const CVec3 grad_phi = {phase.grad_phi_sharp[0][i], phase.grad_phi_sharp[1][i],
                                phase.grad_phi_sharp[2][i]};
        const CVec3 av = {p.a()[0][i], p.a()[1][i], p.a()[2][i]};
        const CVec3 avs = {a_sharp[0][i], a_sharp[1][i], a_sharp[2][i]};
        const cplx lap_a = a * (phase.lap_phi_sharp[i] + dot(grad_phi, grad_phi));
        const CVec3 d_a = cplx(0.0, -1.0) * grad_phi;  // D a / a
        const cplx a2q = dot(av, av) + p.q()[i];
        cplx v = h2 * lap_a;
        v -= h2 * dot(av, d_a) * a;
        v -= h2 * cplx(0.0, -1.0) * div_a_amp[i];
        v -= h2 * a2q * a;
        v += cplx(0.0, 2.0 * h) * dot(zc, d_a) * a;
        v += cplx(0.0, 2.0 * h) * dot(z0, CVec3{av[0] - avs[0], av[1] - avs[1], av[2] - avs[2]}) * a;
        v += cplx(0.0, 2.0 * h) * dot(zc, av) * a;
        out[i] = v;
    }
    return out;
}

ScalarField solve_remainder(const Potentials& p, const ZetaPair& pair, int side,
                            const ScalarField& g, const SolveOptions& opts, SolveInfo* info_out) {
    const Grid3& grid = p.grid();
    if (g.grid() != grid) throw std::invalid_argument("solve_remainder: grid mismatch");
    const double h = pair.h;
    ConjugatedOperator op(p, pair.zeta(side), h);
    double kernel_gap = 0.0;

    const std::size_t npts = grid.num_points();
    std::vector<cplx> ghat = g.values();
    raw_dft(ghat, grid.n(), true);

    // H^-1_scl weight and the potential-free symbol preconditioner
    std::vector<double> w(npts), prec(npts);
    {
        SymbolTables t(grid);
        const double delta = std::pow(0.1 * h, 2);
        BinVisitor{grid.n()}([&](int jx, int jy, int jz, std::size_t i) {
            double kx = t.k_full[jx], ky = t.k_full[jy], kz = t.k_full[jz];
            double k2 = kx * kx + ky * ky + kz * kz;
            w[i] = 1.0 / std::sqrt(1.0 + h * h * k2);
            double wp = w[i] * std::abs(op.symbol()[i]);
            prec[i] = 1.0 / std::sqrt(wp * wp + delta);
        });
    }

    // bins on the discrete characteristic variety (k = 0 and k = -xi are
    // exact members for every admissible pair) have no stable inverse on the
    // lattice; the continuum integrates across the variety instead. They are
    // projected out of the solve and their share of g is reported.
    const double kernel_tol = 0.2 * h * 2.0 * M_PI / grid.box_length();
    std::vector<bool> kernel_bin(npts, false);
    {
        double gap2 = 0.0, tot2 = 0.0;
        for (std::size_t i = 0; i < npts; ++i) {
            tot2 += std::norm(w[i] * ghat[i]);
            if (std::abs(op.symbol()[i]) <= kernel_tol) {
                kernel_bin[i] = true;
                gap2 += std::norm(w[i] * ghat[i]);
                ghat[i] = 0.0;
            }
        }
        if (tot2 > 0) kernel_gap = std::sqrt(gap2 / tot2);
    }

    SolveInfo info;
    info.kernel_gap = kernel_gap;
    std::vector<cplx> c(npts);
    for (std::size_t i = 0; i < npts; ++i) c[i] = w[i] * ghat[i];
    const double cnorm = bin_norm(c);
    std::vector<cplx> x(npts, cplx(0.0));

    auto apply_B = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
        std::vector<cplx> tmp(npts);
        for (std::size_t i = 0; i < npts; ++i) tmp[i] = kernel_bin[i] ? cplx(0.0) : prec[i] * in[i];
        op.apply(tmp, out, false);
        for (std::size_t i = 0; i < npts; ++i) out[i] = kernel_bin[i] ? cplx(0.0) : w[i] * out[i];
    };
    auto apply_BH = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
        std::vector<cplx> tmp(npts);
        for (std::size_t i = 0; i < npts; ++i) tmp[i] = kernel_bin[i] ? cplx(0.0) : w[i] * in[i];
        op.apply(tmp, out, true);
        for (std::size_t i = 0; i < npts; ++i) out[i] = kernel_bin[i] ? cplx(0.0) : prec[i] * out[i];
    };

    if (cnorm == 0.0) {
        if (info_out) *info_out = info;
        return ScalarField(grid);
    }

    if (op.potential_free()) {
        // diagonal least squares: exact in one pass; bins on the characteristic
        // variety (k = -xi sits there identically) are left at zero
        SymbolTables t(grid);
        std::vector<double> pscale(npts);
        BinVisitor{grid.n()}([&](int jx, int jy, int jz, std::size_t i) {
            double kx = t.k_full[jx], ky = t.k_full[jy], kz = t.k_full[jz];
            double kn = std::sqrt(kx * kx + ky * ky + kz * kz);
            pscale[i] = h * h * kn * kn + 2.0 * h * kn;
        });
        for (std::size_t i = 0; i < npts; ++i) {
            cplx s = op.symbol()[i];
            x[i] = (kernel_bin[i] || std::abs(s) <= 1e-12 * pscale[i]) ? cplx(0.0)
                                                                       : ghat[i] / s;
        }
        std::vector<cplx> resid(npts);
        for (std::size_t i = 0; i < npts; ++i) {
            cplx s = op.symbol()[i];
            resid[i] = w[i] * (s * x[i] - ghat[i]);
        }
        info.final_residual = bin_norm(resid) / cnorm;
        info.residual_history.push_back(info.final_residual);
    } else {
        // CGLS on min || w (L prec y - ghat) ||
        std::vector<cplx> r(c), s(npts), q(npts), d(npts), y(npts, cplx(0.0));
        apply_BH(r, s);
        d = s;
        double gamma = std::pow(bin_norm(s), 2);
        double rel = 1.0;
        info.residual_history.push_back(rel);
        int it = 0;
        for (; it < opts.max_iter && rel > opts.rel_tol; ++it) {
            apply_B(d, q);
            double qn2 = std::pow(bin_norm(q), 2);
            if (qn2 == 0.0) break;
            double alpha = gamma / qn2;
            for (std::size_t i = 0; i < npts; ++i) {
                y[i] += alpha * d[i];
                r[i] -= alpha * q[i];
            }
            apply_BH(r, s);
            double gamma_new = std::pow(bin_norm(s), 2);
            double beta = gamma_new / gamma;
            gamma = gamma_new;
            for (std::size_t i = 0; i < npts; ++i) d[i] = s[i] + beta * d[i];
            rel = bin_norm(r) / cnorm;
            info.residual_history.push_back(rel);
        }
        info.iterations = it;
        info.final_residual = rel;
        for (std::size_t i = 0; i < npts; ++i)
            x[i] = kernel_bin[i] ? cplx(0.0) : prec[i] * y[i];
        if (rel > opts.rel_tol)
            throw SolveError("solve_remainder: iteration budget exhausted at relative residual " +
                                 std::to_string(rel),
                             info);
    }

    std::vector<cplx> xphys(x);
    raw_dft(xphys, grid.n(), false);
    ScalarField r_field(grid, std::move(xphys));

    info.r_h1_scl = semiclassical_norm(r_field, SobolevSpec(1.0, h));
    double g_hm1 = semiclassical_norm(g, SobolevSpec(-1.0, h));
    info.bound_ratio = g_hm1 > 0 ? info.r_h1_scl * h / g_hm1 : 0.0;
    if (info_out) *info_out = info;
    return r_field;
}

VectorField CGOSolution::assembled_gradient() const {
    const Grid3& g = assembled.grid();
    VectorField grad_r = spectral_gradient(remainder);
    VectorField out(g);
    const double inv_h = 1.0 / h;
    const CVec3 z = pair.zeta(side);
    const int n = g.n();
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                std::size_t i = g.index(ix, iy, iz);
                Vec3 x = g.point(ix, iy, iz);
                cplx e = std::exp((x[0] * z[0] + x[1] * z[1] + x[2] * z[2]) * inv_h);
                cplx ar = amplitude[i] + remainder[i];
                for (int c = 0; c < 3; ++c)
                    out[c][i] = e * (z[c] * inv_h * ar +
                                     amplitude[i] * phase.grad_phi_sharp[c][i] + grad_r[c][i]);
            }
    return out;
}

double weak_equation_residual(const Potentials& p, const CGOSolution& sol) {
    const Grid3& g = p.grid();
    const double L = g.box_length();
    RngStream rng(12345, "weak-check");
    VectorField grad_u = sol.assembled_gradient();
    const ScalarField& u = sol.assembled;

    double worst = 0.0;
    for (int m = 0; m < 20; ++m) {
        Vec3 c = {rng.uniform(-0.15 * L, 0.15 * L), rng.uniform(-0.15 * L, 0.15 * L),
                  rng.uniform(-0.15 * L, 0.15 * L)};
        WindowBump v = plateau_bump(g, c, 0.04 * L, 0.12 * L);

        cplx b(0.0);
        double unorm2 = 0.0, vnorm2 = 0.0;
        for (std::size_t i = 0; i < v.value.size(); ++i) {
            if (v.value[i] == cplx(0.0)) continue;
            CVec3 gu = {grad_u[0][i], grad_u[1][i], grad_u[2][i]};
            CVec3 gv = {v.gradient[0][i], v.gradient[1][i], v.gradient[2][i]};
            CVec3 av = {p.a()[0][i], p.a()[1][i], p.a()[2][i]};
            cplx a2q = dot(av, av) + p.q()[i];
            cplx vv = v.value[i];
            b += dot(gu, gv) + cplx(0.0, 1.0) * (u[i] * dot(av, gv) - vv * dot(av, gu)) +
                 a2q * u[i] * vv;
            vnorm2 += std::norm(vv) + std::norm(gv[0]) + std::norm(gv[1]) + std::norm(gv[2]);
            unorm2 += std::norm(u[i]) + std::norm(gu[0]) + std::norm(gu[1]) + std::norm(gu[2]);
        }
        double cell = g.cell_volume();
        double ratio = std::abs(b) * cell /
                       (std::sqrt(unorm2 * cell) * std::sqrt(vnorm2 * cell) + 1e-300);
        worst = std::max(worst, ratio);
    }
    return worst;
}

CGOSolution build_cgo(const Potentials& p, const dbar::Frame& frame, double h, double sigma,
                      int side, const SolveOptions& opts, const dbar::Phase* phase_hint) {
    if (!(sigma > 0.0 && sigma < 0.5))
        throw std::invalid_argument("build_cgo: sigma must lie in (0, 1/2)");
    if (side != 1 && side != 2) throw std::invalid_argument("build_cgo: side must be 1 or 2");
    const Grid3& g = p.grid();
    exponent_guard(g, h);
    ZetaPair pair = make_zeta_pair(frame, h);

    double tau = std::max(std::pow(h, sigma), 2.0 * g.spacing());
    VectorField a_sharp = p.is_zero() ? VectorField(g) : mollify(p, MollifierSpec(tau));
    CVec3 z0 = pair.zeta0(side);
    bool hint_ok = phase_hint && phase_hint->tau == tau &&
                   std::abs(phase_hint->zeta0[0] - z0[0]) + std::abs(phase_hint->zeta0[1] - z0[1]) +
                           std::abs(phase_hint->zeta0[2] - z0[2]) ==
                       0.0;
    dbar::Phase phase = hint_ok ? *phase_hint : dbar::transport_phase(a_sharp, z0, tau);
    ScalarField amp = phase.amplitude();
    ScalarField rhs = assemble_rhs_g(p, a_sharp, phase, pair, side);

    SolveInfo sinfo;
    ScalarField rem = solve_remainder(p, pair, side, rhs, opts, &sinfo);

    ScalarField assembled(g);
    const CVec3 z = pair.zeta(side);
    const int n = g.n();
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                std::size_t i = g.index(ix, iy, iz);
                Vec3 x = g.point(ix, iy, iz);
                cplx e = std::exp((x[0] * z[0] + x[1] * z[1] + x[2] * z[2]) / h);
                assembled[i] = e * (amp[i] + rem[i]);
            }

    CGOSolution sol{side,
                    h,
                    sigma,
                    tau,
                    pair,
                    std::move(phase),
                    std::move(amp),
                    std::move(rem),
                    std::move(assembled)};
    sol.g_norm_hm1 = semiclassical_norm(rhs, SobolevSpec(-1.0, h));
    sol.r_norm_h1 = sinfo.r_h1_scl;
    sol.solve_residual = sinfo.final_residual;
    sol.iterations = sinfo.iterations;
    sol.transport_residual = sol.phase.transport_residual_rel;
    sol.weak_residual = opts.weak_check ? weak_equation_residual(p, sol) : 0.0;
    return sol;
}

void save_cgo(const CGOSolution& sol, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_field(dir + "/phi_sharp", sol.phase.phi_sharp, "cgo-phase");
    write_field(dir + "/amplitude", sol.amplitude, "cgo-amplitude");
    write_field(dir + "/remainder", sol.remainder, "cgo-remainder");
    write_field(dir + "/assembled", sol.assembled, "cgo-solution");
    nlohmann::ordered_json d;
    d["side"] = sol.side;
    d["h"] = sol.h;
    d["sigma"] = sol.sigma;
    d["tau"] = sol.tau;
    d["g_norm_hm1"] = sol.g_norm_hm1;
    d["r_norm_h1"] = sol.r_norm_h1;
    d["solve_residual"] = sol.solve_residual;
    d["iterations"] = sol.iterations;
    d["transport_residual"] = sol.transport_residual;
    d["weak_residual"] = sol.weak_residual;
    std::ofstream os(dir + "/diagnostics.json", std::ios::trunc);
    os << d.dump(2) << "\n";
}

}  // namespace cgo
}  // namespace msw
