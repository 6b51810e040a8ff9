#include "doctest.h"
#include "magschrod/recon.hpp"
#include "test_util.hpp"

using namespace msw;
using namespace msw::test;

TEST_CASE("identity vanishes pointwise when the potentials coincide") {
    Grid3 g(24, 8.0);
    PotentialParams pp;
    pp.amplitude = 0.7;
    pp.q_amplitude = 0.4;
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);
    RngStream rng(3, "identity");
    ScalarField u1 = random_band_limited(g, rng), u2 = random_band_limited(g, rng);
    VectorField g1 = spectral_gradient(u1), g2 = spectral_gradient(u2);
    CHECK(std::abs(recon::eval_integral_identity(p, p, u1, u2, g1, g2)) < 1e-12);
}

TEST_CASE("mode ball has 257 points at radius 4") {
    CHECK(recon::mode_ball(4).size() == 257);
    CHECK(recon::mode_ball(0).size() == 1);
}

TEST_CASE("dA assembly: exact projections of a band-limited field match its curl") {
    Grid3 g(32, 8.0);
    RngStream rng(5, "assembly");
    VectorField a(g);
    for (int c = 0; c < 3; ++c) a[c] = random_band_limited(g, rng, 3, 6);
    ScalarField hats[3] = {fourier_transform(a[0], FftDirection::Forward),
                           fourier_transform(a[1], FftDirection::Forward),
                           fourier_transform(a[2], FftDirection::Forward)};
    const int ball = 4;
    std::vector<recon::Projection> projections;
    auto wrap = [&](int v) { return v >= 0 ? v : v + g.n(); };
    for (const auto& m : recon::mode_ball(ball)) {
        if (m[0] == 0 && m[1] == 0 && m[2] == 0) continue;
        Vec3 xi = {2 * M_PI / 8 * m[0], 2 * M_PI / 8 * m[1], 2 * M_PI / 8 * m[2]};
        dbar::Frame fr = dbar::make_frame(xi);
        std::size_t bin = g.index(wrap(-m[0]), wrap(-m[1]), wrap(-m[2]));
        CVec3 what = {hats[0][bin], hats[1][bin], hats[2][bin]};
        Vec3 neg_mu2 = {-fr.mu2[0], -fr.mu2[1], -fr.mu2[2]};
        projections.push_back({m, fr.mu1, fr.mu2, dot(fr.zeta0_plus(), what)});
        CVec3 zm = {cplx(fr.mu1[0], -fr.mu2[0]), cplx(fr.mu1[1], -fr.mu2[1]),
                    cplx(fr.mu1[2], -fr.mu2[2])};
        projections.push_back({m, fr.mu1, neg_mu2, dot(zm, what)});
    }
    recon::AssemblyResult res = recon::assemble_magnetic_field_hat(g, projections, ball);
    CHECK(res.consistent);

    MagneticField2Form oracle = magnetic_field(a);
    ScalarField est = fourier_transform(res.da.f12, FftDirection::Forward);
    ScalarField orc = fourier_transform(oracle.f12, FftDirection::Forward);
    CHECK(recon::inball_rel_error(est, orc, ball) < 1e-8);
    ScalarField est23 = fourier_transform(res.da.f23, FftDirection::Forward);
    ScalarField orc23 = fourier_transform(oracle.f23, FftDirection::Forward);
    CHECK(recon::inball_rel_error(est23, orc23, ball) < 1e-8);
}

TEST_CASE("dA assembly: single mode algebra and gradient-difference rejection") {
    Grid3 g(16, 8.0);
    // single plane-wave A with amplitude along e2 at mode (1,0,0)
    std::array<int, 3> m = {1, 0, 0};
    Vec3 xi = {2 * M_PI / 8, 0, 0};
    dbar::Frame fr = dbar::make_frame(xi);
    CVec3 what = {cplx(0.0), cplx(2.0, 1.0), cplx(0.0)};  // What(-xi)
    Vec3 neg_mu2 = {-fr.mu2[0], -fr.mu2[1], -fr.mu2[2]};
    CVec3 zm = {cplx(fr.mu1[0], -fr.mu2[0]), cplx(fr.mu1[1], -fr.mu2[1]),
                cplx(fr.mu1[2], -fr.mu2[2])};
    std::vector<recon::Projection> projections = {
        {m, fr.mu1, fr.mu2, dot(fr.zeta0_plus(), what)},
        {m, fr.mu1, neg_mu2, dot(zm, what)},
    };
    recon::AssemblyResult res = recon::assemble_magnetic_field_hat(g, projections, 4);
    ScalarField est = fourier_transform(res.da.f12, FftDirection::Forward);
    auto wrap = [&](int v) { return v >= 0 ? v : v + g.n(); };
    cplx got = est[g.index(wrap(-1), 0, 0)];
    cplx expect = cplx(0, -1) * (xi[0] * what[1] - 0.0);
    CHECK(std::abs(got - expect) < 1e-10);

    // a gradient difference has zero tangential projections: assembled dA ~ 0
    for (auto& pr : projections) pr.value = 0.0;
    recon::AssemblyResult zero = recon::assemble_magnetic_field_hat(g, projections, 4);
    CHECK(sup_norm(zero.da) < 1e-14);
}

TEST_CASE("inconsistent over-determined projections are flagged") {
    Grid3 g(16, 8.0);
    std::array<int, 3> m = {0, 1, 0};
    Vec3 xi = {0, 2 * M_PI / 8, 0};
    dbar::Frame fr = dbar::make_frame(xi);
    Vec3 neg_mu2 = {-fr.mu2[0], -fr.mu2[1], -fr.mu2[2]};
    CVec3 zm = {cplx(fr.mu1[0], -fr.mu2[0]), cplx(fr.mu1[1], -fr.mu2[1]),
                cplx(fr.mu1[2], -fr.mu2[2])};
    CVec3 what = {cplx(1.0), cplx(0.0), cplx(0.5)};
    std::vector<recon::Projection> projections = {
        {m, fr.mu1, fr.mu2, dot(fr.zeta0_plus(), what)},
        {m, fr.mu1, neg_mu2, dot(zm, what)},
        {m, fr.mu1, fr.mu2, dot(fr.zeta0_plus(), what) + cplx(0.3)},  // contradicts row 1
    };
    recon::AssemblyResult res = recon::assemble_magnetic_field_hat(g, projections, 4);
    CHECK_FALSE(res.consistent);
    CHECK(res.max_lsq_residual > 1e-3);
}

TEST_CASE("gauge potential from a gradient difference round-trips") {
    Grid3 g(32, 8.0);
    ScalarField b = gaussian_bump(g, {0.2, -0.3, 0.1}, 0.45, 1.9, cplx(0.8));
    VectorField grad_b = spectral_gradient(b);
    ScalarField zero(g);
    CHECK(l2_norm(recon::gauge_potential_from_difference(VectorField(g))) == 0.0);

    ScalarField psi = recon::gauge_potential_from_difference(grad_b);
    // mean-zero convention: compare after removing the means
    cplx mb = mean_integral(b) / g.volume();
    double worst = 0;
    for (std::size_t i = 0; i < psi.size(); ++i)
        worst = std::max(worst, std::abs(psi[i] - (b[i] - mb)));
    CHECK(worst < 1e-6);

    VectorField grad_psi = spectral_gradient(psi);
    CHECK(l2_norm(grad_psi - grad_b) / l2_norm(grad_b) < 1e-6);

    // rotational field must be rejected
    RngStream rng(7, "rot");
    VectorField rot(g);
    rot[0] = random_band_limited(g, rng, 2, 4);
    rot[1] = random_band_limited(g, rng, 2, 4);
    CHECK_THROWS_AS(recon::gauge_potential_from_difference(rot), std::invalid_argument);
}

TEST_CASE("phase cancellation identity: trivial, smooth and mollified-rough fields") {
    Grid3 g(48, 8.0);
    dbar::Frame fr = dbar::make_frame({0.5, 1.0, -0.3});
    auto [l0, r0] = recon::eskin_ralston_check(VectorField(g), fr);
    CHECK(std::abs(l0) == 0.0);
    CHECK(std::abs(r0) == 0.0);

    PotentialParams pp;
    pp.amplitude = 0.8;
    pp.direction = {0.3, -0.6, 0.8};
    Potentials smooth = make_test_potential(g, PotentialKind::Smooth, pp);
    auto [l1, r1] = recon::eskin_ralston_check(smooth.a(), fr);
    CHECK(std::abs(l1 - r1) / std::abs(r1) < 1e-3);

    PotentialParams ip;
    ip.amplitude = 1.0;
    Potentials ind = make_test_potential(g, PotentialKind::Indicator, ip);
    VectorField rough = mollify(ind, MollifierSpec(0.05 * 8.0));
    auto [l2, r2] = recon::eskin_ralston_check(rough, fr);
    CHECK(std::abs(l2 - r2) / std::abs(r2) < 1e-2);
}

TEST_CASE("both routes of the integral identity agree on a 16^3 forward grid") {
    Grid3 g(32, 8.0);
    forward::BoxDomain dom(g, 16, 2);
    PotentialParams p1p, p2p;
    p1p.amplitude = 0.5;
    p1p.q_amplitude = 0.3;
    p1p.direction = {0.7, 0.2, -0.4};
    p2p.amplitude = 0.3;
    p2p.q_amplitude = 0.2;
    p2p.direction = {-0.2, 0.5, 0.6};
    Potentials pot1 = make_test_potential(g, PotentialKind::Smooth, p1p);
    Potentials pot2 = make_test_potential(g, PotentialKind::Smooth, p2p);
    ScalarField f1 = forward::boundary_basis_field(dom, 1);
    ScalarField f2 = forward::boundary_basis_field(dom, 3);
    recon::IdentityRoutes routes = recon::integral_identity_routes(pot1, pot2, dom, f1, f2);
    CHECK(std::abs(routes.volume - routes.boundary) / std::abs(routes.boundary) < 1e-4);
}

TEST_CASE("cgo handoff: fields written by one stage are read back bit-exactly") {
    Grid3 g(16, 8.0);
    PotentialParams pp;
    pp.amplitude = 0.4;
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);
    cgo::CGOSolution sol = cgo::build_cgo(p, dbar::make_frame({1, 0, 0}), 0.2, 1.0 / 3.0, 1);
    std::string dir = (std::filesystem::temp_directory_path() / "msw_cgo_roundtrip").string();
    cgo::save_cgo(sol, dir);
    ScalarField back = read_field(dir + "/remainder");
    CHECK(std::memcmp(back.values().data(), sol.remainder.values().data(),
                      back.size() * sizeof(cplx)) == 0);
    CHECK(semiclassical_norm(back, SobolevSpec(1.0, sol.h)) ==
          semiclassical_norm(sol.remainder, SobolevSpec(1.0, sol.h)));
}
