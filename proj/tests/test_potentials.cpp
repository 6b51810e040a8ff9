#include "doctest.h"
#include "magschrod/carleman.hpp"
#include "magschrod/potentials.hpp"
#include "test_util.hpp"

#include <filesystem>

using namespace msw;
using namespace msw::test;

TEST_CASE("extension by zero holds exactly for every instance") {
    Grid3 g(24, 8.0);
    for (auto kind : {PotentialKind::Smooth, PotentialKind::Indicator, PotentialKind::Gradient}) {
        PotentialParams pp;
        pp.amplitude = 1.3;
        pp.q_amplitude = 0.4;
        Potentials p = make_test_potential(g, kind, pp);
        for (std::size_t i = 0; i < p.omega_mask().size(); ++i)
            if (p.omega_mask()[i] == cplx(0.0)) {
                for (int c = 0; c < 3; ++c) CHECK(p.a()[c][i] == cplx(0.0));
                CHECK(p.q()[i] == cplx(0.0));
            }
    }
}

TEST_CASE("mask must respect the L/8 margin") {
    Grid3 g(16, 8.0);
    ScalarField bad_mask = box_mask(g, 0.49 * g.box_length());
    CHECK_THROWS_AS(Potentials(VectorField(g), ScalarField(g), bad_mask), std::invalid_argument);
}

TEST_CASE("gradient kind gives A close to an exact gradient with q = 0") {
    Grid3 g(32, 8.0);
    PotentialParams pp;
    pp.amplitude = 0.8;
    Potentials p = make_test_potential(g, PotentialKind::Gradient, pp);
    CHECK(sup_norm(p.q()) == 0.0);
    CHECK(sup_norm(magnetic_field(p.a())) < 1e-6 * sup_norm(p.a()[0]));
}

TEST_CASE("indicator kind is discontinuous with the declared sup norm") {
    Grid3 g(32, 8.0);
    PotentialParams pp;
    pp.amplitude = 1.0;
    pp.direction = {1.0, 0.0, 0.0};
    pp.radius_fraction = 0.2;
    Potentials p = make_test_potential(g, PotentialKind::Indicator, pp);
    CHECK(sup_norm(p.a()[0]) == doctest::Approx(1.0));
    // jump across the sphere: neighboring samples differ by the full amplitude
    bool jump = false;
    for (int ix = 1; ix < g.n(); ++ix) {
        cplx a = p.a()[0].at(ix - 1, g.n() / 2, g.n() / 2);
        cplx b = p.a()[0].at(ix, g.n() / 2, g.n() / 2);
        if (std::abs(a - b) == 1.0) jump = true;
    }
    CHECK(jump);
}

TEST_CASE("smooth kind matches the hand-derived curl of the Gaussian profile") {
    Grid3 g(64, 8.0);
    PotentialParams pp;
    pp.amplitude = 0.9;
    pp.direction = {0.2, -1.0, 0.5};
    pp.width_fraction = 0.04;
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);
    MagneticField2Form f = magnetic_field(p.a());
    // A_c = d_c a e^{-|x|^2/(2w^2)}  =>  F_jk = (d_j x_k - d_k x_j) a e^{..} / w^2
    const double w = 0.04 * 8.0;
    double worst = 0;
    for (int iz = 8; iz < g.n() - 8; ++iz)
        for (int iy = 8; iy < g.n() - 8; ++iy)
            for (int ix = 8; ix < g.n() - 8; ++ix) {
                Vec3 x = g.point(ix, iy, iz);
                if (dot(x, x) > std::pow(0.15 * 8.0, 2)) continue;
                double e = 0.9 * std::exp(-0.5 * dot(x, x) / (w * w)) / (w * w);
                auto expect = [&](int j, int k) {
                    return (pp.direction[j] * x[k] - pp.direction[k] * x[j]) * e;
                };
                worst = std::max(worst, std::abs(f.f12.at(ix, iy, iz) - expect(0, 1)));
                worst = std::max(worst, std::abs(f.f13.at(ix, iy, iz) - expect(0, 2)));
                worst = std::max(worst, std::abs(f.f23.at(ix, iy, iz) - expect(1, 2)));
            }
    CHECK(worst < 1e-5 * sup_norm(f));
}

TEST_CASE("unsupported kind is rejected") {
    CHECK_THROWS_AS(potential_kind_from_string("sawtooth"), std::invalid_argument);
}

TEST_CASE("mollifier: zero in, zero out; unit mass; mean preserved") {
    Grid3 g(32, 8.0);
    Potentials zero(VectorField(g), ScalarField(g), default_omega_mask(g));
    VectorField z = mollify(zero, MollifierSpec(0.6));
    CHECK(l2_norm(z) == 0.0);

    PotentialParams pp;
    pp.amplitude = 1.0;
    Potentials ind = make_test_potential(g, PotentialKind::Indicator, pp);
    VectorField as = mollify(ind, MollifierSpec(0.6));
    cplx m0 = mean_integral(ind.a()[0]);
    cplx m1 = mean_integral(as[0]);
    CHECK(std::abs(m0 - m1) < 1e-10 * std::abs(m0));
    CHECK_THROWS_AS(mollify(ind, MollifierSpec(0.3 * g.spacing())), std::invalid_argument);
}

TEST_CASE("mollifier reproduces the field away from the discontinuity") {
    Grid3 g(32, 8.0);
    PotentialParams pp;
    pp.amplitude = 1.0;
    pp.radius_fraction = 0.2;
    Potentials ind = make_test_potential(g, PotentialKind::Indicator, pp);
    double tau = 0.55;
    VectorField as = mollify(ind, MollifierSpec(tau));
    const double r = 0.2 * 8.0;
    for (int iz = 0; iz < g.n(); ++iz)
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix) {
                Vec3 x = g.point(ix, iy, iz);
                double d = std::sqrt(dot(x, x));
                if (d < r - 1.1 * tau)
                    CHECK(std::abs(as[0].at(ix, iy, iz) - 1.0) < 1e-10);
                if (d > r + 1.1 * tau)
                    CHECK(std::abs(as[0].at(ix, iy, iz)) < 1e-10);
            }
}

TEST_CASE("mollifier tau sweep: L2 error decreases, sup gradient grows like 1/tau") {
    Grid3 g(64, 8.0);
    PotentialParams pp;
    pp.amplitude = 1.0;
    Potentials ind = make_test_potential(g, PotentialKind::Indicator, pp);
    std::vector<double> taus = {0.2 * 8.0 / 2, 0.1 * 8.0 / 2, 0.05 * 8.0 / 2};
    std::vector<double> errs, grads;
    for (double tau : taus) {
        VectorField as = mollify(ind, MollifierSpec(tau));
        errs.push_back(l2_norm(ind.a() - as));
        VectorField grad = spectral_gradient(as[0]);
        grads.push_back(std::max({sup_norm(grad[0]), sup_norm(grad[1]), sup_norm(grad[2])}));
    }
    CHECK(errs[0] > errs[1]);
    CHECK(errs[1] > errs[2]);
    double slope = carleman::loglog_slope(taus, grads);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.2));
}

TEST_CASE("d of a spectral gradient vanishes for any sampled field") {
    Grid3 g(32, 8.0);
    RngStream rng(31, "ddzero");
    ScalarField psi = random_band_limited(g, rng);
    MagneticField2Form f = magnetic_field(spectral_gradient(psi));
    CHECK(sup_norm(f) < 1e-10 * sup_norm(psi));
}

TEST_CASE("analytic curl example: rotation field under a plateau window") {
    Grid3 g(48, 8.0);
    ScalarField w = plateau_window(g, {0, 0, 0}, 1.0, 1.9);
    VectorField a(g);
    for (int iz = 0; iz < g.n(); ++iz)
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix) {
                Vec3 x = g.point(ix, iy, iz);
                cplx ww = w.at(ix, iy, iz);
                a[0].at(ix, iy, iz) = -x[1] * ww;
                a[1].at(ix, iy, iz) = x[0] * ww;
            }
    MagneticField2Form f = magnetic_field(a);
    // on the plateau core the window is identically 1 and F_12 = 2
    double worst = 0;
    for (int iz = 0; iz < g.n(); ++iz)
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix) {
                Vec3 x = g.point(ix, iy, iz);
                if (dot(x, x) < 0.5 * 0.5)
                    worst = std::max(worst, std::abs(f.f12.at(ix, iy, iz) - 2.0));
            }
    CHECK(worst < 5e-3);
}

TEST_CASE("magnetic field matches a 4th-order finite-difference curl") {
    Grid3 g(32, 8.0);
    RngStream rng(37, "fdcurl");
    VectorField a(g);
    for (int c = 0; c < 3; ++c) a[c] = random_band_limited(g, rng);
    MagneticField2Form f = magnetic_field(a);
    const double s = g.spacing();
    auto fd = [&](const ScalarField& v, int axis, int ix, int iy, int iz) {
        auto at = [&](int d) {
            int jx = ix, jy = iy, jz = iz;
            if (axis == 0) jx = (ix + d + g.n()) % g.n();
            if (axis == 1) jy = (iy + d + g.n()) % g.n();
            if (axis == 2) jz = (iz + d + g.n()) % g.n();
            return v.at(jx, jy, jz);
        };
        return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * s);
    };
    double num = 0, den = 0;
    for (int iz = 0; iz < g.n(); ++iz)
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix) {
                cplx expect = fd(a[1], 0, ix, iy, iz) - fd(a[0], 1, ix, iy, iz);
                num += std::norm(expect - f.f12.at(ix, iy, iz));
                den += std::norm(expect);
            }
    CHECK(std::sqrt(num / den) < 1e-3);  // band-limited modes up to 4: FD error dominates
}

TEST_CASE("gauge shift: identity at psi = 0 and dA invariance") {
    Grid3 g(64, 8.0);
    PotentialParams pp;
    pp.amplitude = 0.7;
    pp.q_amplitude = 0.3;
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);

    ScalarField zero_psi(g);
    Potentials same = gauge_shift(p, zero_psi);
    CHECK(sup_diff(same.a()[0], p.a()[0]) == 0.0);
    CHECK(sup_diff(same.q(), p.q()) == 0.0);

    ScalarField psi = gaussian_bump(g, {0.2, -0.1, 0.1}, 0.28, 1.8, cplx(0.25));
    Potentials shifted = gauge_shift(p, psi);
    MagneticField2Form f0 = magnetic_field(p.a());
    MagneticField2Form f1 = magnetic_field(shifted.a());
    double scale = std::max(sup_norm(f0), 1e-300);
    CHECK(sup_diff(f1.f12, f0.f12) / scale < 1e-6);
    CHECK(sup_diff(f1.f13, f0.f13) / scale < 1e-6);
    CHECK(sup_diff(f1.f23, f0.f23) / scale < 1e-6);

    ScalarField complex_psi(g);
    complex_psi[0] = cplx(0.0, 1.0);
    CHECK_THROWS_AS(gauge_shift(p, complex_psi), std::invalid_argument);

    ScalarField outside = gaussian_bump(g, {3.2, 0, 0}, 0.28, 0.6);
    CHECK_THROWS_AS(gauge_shift(p, outside), std::invalid_argument);
}

TEST_CASE("conjugation identity: L_{A+grad psi,q} u = e^{-i psi} L_{A,q} (e^{i psi} u)") {
    Grid3 g(64, 8.0);
    PotentialParams pp;
    pp.amplitude = 0.8;
    pp.q_amplitude = 0.5;
    pp.direction = {0.4, 0.8, -0.2};
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);
    ScalarField psi = gaussian_bump(g, {0.1, 0.15, -0.1}, 0.3, 1.8, cplx(0.35));
    Potentials shifted = gauge_shift(p, psi);
    RngStream rng(41, "conj");
    ScalarField u = random_band_limited(g, rng, 3, 6);

    auto apply_l = [&](const Potentials& pot, const ScalarField& v) {
        ScalarField lap = spectral_laplacian(v);
        VectorField grad = spectral_gradient(v);
        VectorField av(g);
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < v.size(); ++i) av[c][i] = pot.a()[c][i] * v[i];
        ScalarField divav = spectral_divergence(av);
        ScalarField out(g);
        for (std::size_t i = 0; i < v.size(); ++i) {
            CVec3 a = {pot.a()[0][i], pot.a()[1][i], pot.a()[2][i]};
            CVec3 dv = {cplx(0, -1) * grad[0][i], cplx(0, -1) * grad[1][i],
                        cplx(0, -1) * grad[2][i]};
            out[i] = -lap[i] + dot(a, dv) + cplx(0, -1) * divav[i] +
                     (dot(a, a) + pot.q()[i]) * v[i];
        }
        return out;
    };

    ScalarField eiu(g), route2(g);
    for (std::size_t i = 0; i < u.size(); ++i)
        eiu[i] = std::exp(cplx(0, 1) * psi[i]) * u[i];
    ScalarField l_eiu = apply_l(p, eiu);
    for (std::size_t i = 0; i < u.size(); ++i)
        route2[i] = std::exp(cplx(0, -1) * psi[i]) * l_eiu[i];
    ScalarField route1 = apply_l(shifted, u);
    CHECK(rel_l2_diff(route1, route2) < 1e-8);
}

TEST_CASE("potentials directory serialization round trip") {
    Grid3 g(16, 8.0);
    PotentialParams pp;
    pp.amplitude = 0.5;
    pp.q_amplitude = 0.2;
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);
    std::string dir = (std::filesystem::temp_directory_path() / "msw_pot_test").string();
    p.save(dir);
    Potentials back = Potentials::load(dir);
    CHECK(sup_diff(back.a()[1], p.a()[1]) == 0.0);
    CHECK(sup_diff(back.q(), p.q()) == 0.0);
}
