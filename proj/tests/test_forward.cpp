#include "doctest.h"
#include "magschrod/forward.hpp"
#include "test_util.hpp"

using namespace msw;
using namespace msw::test;

namespace {

Potentials zero_potentials(const Grid3& g) {
    return Potentials(VectorField(g), ScalarField(g), default_omega_mask(g));
}

ScalarField coordinate_field(const Grid3& g, int axis) {
    ScalarField f(g);
    for (int iz = 0; iz < g.n(); ++iz)
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix)
                f.at(ix, iy, iz) = g.point(ix, iy, iz)[axis];
    return f;
}

/** smooth analytic potentials for manufactured solutions; everything has a
 *  closed form so the oracle needs no numerical differentiation */
struct Manufactured {
    static double a1(const Vec3& x) { return 0.3 * std::sin(0.5 * x[0]) * std::cos(0.4 * x[1]); }
    static double u_star(const Vec3& x) {
        return 2.0 + std::sin(0.4 * x[0]) * std::cos(0.3 * x[1]) * std::cos(0.2 * x[2]);
    }
    static Vec3 grad_u(const Vec3& x) {
        double c = std::cos(0.4 * x[0]), s = std::sin(0.4 * x[0]);
        double cy = std::cos(0.3 * x[1]), sy = std::sin(0.3 * x[1]);
        double cz = std::cos(0.2 * x[2]), sz = std::sin(0.2 * x[2]);
        return {0.4 * c * cy * cz, -0.3 * s * sy * cz, -0.2 * s * cy * sz};
    }
    static double lap_u(const Vec3& x) {
        return -(0.16 + 0.09 + 0.04) * std::sin(0.4 * x[0]) * std::cos(0.3 * x[1]) *
               std::cos(0.2 * x[2]);
    }
    static Vec3 a(const Vec3& x) { return {a1(x), 0.0, 0.0}; }
    static Vec3 grad_a1(const Vec3& x) {
        return {0.15 * std::cos(0.5 * x[0]) * std::cos(0.4 * x[1]),
                -0.12 * std::sin(0.5 * x[0]) * std::sin(0.4 * x[1]), 0.0};
    }
    // L_{A,0} u + q u = 0 defines q; u* stays in [1, 3] so the division is safe
    static cplx q_star(const Vec3& x) {
        double u = u_star(x);
        Vec3 gu = grad_u(x);
        Vec3 av = a(x);
        double diva = grad_a1(x)[0];
        cplx l_without_q = -lap_u(x) + cplx(0, -1) * (2.0 * av[0] * gu[0] + diva * u) +
                           av[0] * av[0] * u;
        return -l_without_q / u;
    }
};

}  // namespace

TEST_CASE("constants are harmonic") {
    Grid3 g(32, 8.0);
    forward::BoxDomain dom(g, 9, 2);
    Potentials p0 = zero_potentials(g);
    ScalarField one(g);
    for (auto& z : one.values()) z = 1.0;
    forward::SolveReport rep;
    ScalarField u = forward::solve_dirichlet(p0, dom, one, &rep);
    double worst = 0;
    for (int k = 0; k < dom.nodes(); ++k)
        for (int j = 0; j < dom.nodes(); ++j)
            for (int i = 0; i < dom.nodes(); ++i)
                worst = std::max(worst, std::abs(u[dom.grid_index(i, j, k)] - 1.0));
    CHECK(worst < 1e-10);
    CHECK(rep.relative_residual < 1e-9);
}

TEST_CASE("harmonic polynomial data is reproduced at the nodes") {
    Grid3 g(32, 8.0);
    forward::BoxDomain dom(g, 9, 2);
    Potentials p0 = zero_potentials(g);
    ScalarField harm(g);
    for (int iz = 0; iz < g.n(); ++iz)
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix) {
                Vec3 x = g.point(ix, iy, iz);
                harm.at(ix, iy, iz) = x[0] * x[0] - x[1] * x[1];
            }
    ScalarField u = forward::solve_dirichlet(p0, dom, harm);
    double num = 0, den = 0;
    for (int k = 0; k < dom.nodes(); ++k)
        for (int j = 0; j < dom.nodes(); ++j)
            for (int i = 0; i < dom.nodes(); ++i) {
                num += std::norm(u[dom.grid_index(i, j, k)] - harm[dom.grid_index(i, j, k)]);
                den += std::norm(harm[dom.grid_index(i, j, k)]);
            }
    CHECK(std::sqrt(num / den) < 1e-10);
}

TEST_CASE("manufactured solution converges at second order") {
    Grid3 g(64, 8.0);
    Potentials pot = [&g]() {
        VectorField a(g);
        ScalarField q(g);
        ScalarField mask = box_mask(g, 0.375 * g.box_length());
        for (int iz = 0; iz < g.n(); ++iz)
            for (int iy = 0; iy < g.n(); ++iy)
                for (int ix = 0; ix < g.n(); ++ix) {
                    Vec3 x = g.point(ix, iy, iz);
                    a[0].at(ix, iy, iz) = Manufactured::a1(x);
                    q.at(ix, iy, iz) = Manufactured::q_star(x);
                }
        return Potentials(std::move(a), std::move(q), std::move(mask));
    }();
    ScalarField trace(g);
    for (int iz = 0; iz < g.n(); ++iz)
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix)
                trace.at(ix, iy, iz) = Manufactured::u_star(g.point(ix, iy, iz));

    std::vector<double> spacings, errors;
    for (int cfg = 0; cfg < 2; ++cfg) {
        forward::BoxDomain dom = cfg == 0 ? forward::BoxDomain(g, 9, 4)
                                          : forward::BoxDomain(g, 17, 2);
        ScalarField u = forward::solve_dirichlet(pot, dom, trace);
        double num = 0, den = 0;
        for (int k = 0; k < dom.nodes(); ++k)
            for (int j = 0; j < dom.nodes(); ++j)
                for (int i = 0; i < dom.nodes(); ++i) {
                    std::size_t gi = dom.grid_index(i, j, k);
                    num += std::norm(u[gi] - trace[gi]);
                    den += std::norm(trace[gi]);
                }
        spacings.push_back(dom.spacing());
        errors.push_back(std::sqrt(num / den));
    }
    double order = std::log(errors[0] / errors[1]) / std::log(spacings[0] / spacings[1]);
    CHECK(order == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("pairing of trivial fields") {
    Grid3 g(32, 8.0);
    forward::BoxDomain dom(g, 9, 2);
    Potentials p0 = zero_potentials(g);
    ScalarField one(g);
    for (auto& z : one.values()) z = 1.0;
    CHECK(std::abs(forward::neumann_pairing(p0, dom, one, one)) < 1e-12);
    ScalarField x1 = coordinate_field(g, 0);
    CHECK(forward::neumann_pairing(p0, dom, x1, x1).real() ==
          doctest::Approx(dom.volume()).epsilon(1e-12));
}

TEST_CASE("adjoint symmetry of the pairing on solution pairs") {
    Grid3 g(32, 8.0);
    forward::BoxDomain dom(g, 9, 2);
    PotentialParams pp;
    pp.amplitude = 0.5;
    pp.q_amplitude = 0.3;
    pp.direction = {0.6, 0.4, -0.5};
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);
    Potentials pc = p.conjugated();

    ScalarField f1 = forward::boundary_basis_field(dom, 2);
    ScalarField f2 = forward::boundary_basis_field(dom, 4);
    ScalarField u1 = forward::solve_dirichlet(p, dom, f1);
    ScalarField u2 = forward::solve_dirichlet(pc, dom, f2);
    cplx lhs = forward::neumann_pairing(p, dom, u1, conjugate(u2));
    cplx rhs = std::conj(forward::neumann_pairing(pc, dom, u2, conjugate(u1)));
    CHECK(std::abs(lhs - rhs) / std::abs(rhs) < 1e-8);
}

TEST_CASE("weak consistency: pairing ignores interior perturbations of g") {
    Grid3 g(32, 8.0);
    forward::BoxDomain dom(g, 9, 2);
    PotentialParams pp;
    pp.amplitude = 0.4;
    pp.q_amplitude = 0.2;
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);
    ScalarField f = forward::boundary_basis_field(dom, 3);
    ScalarField u = forward::solve_dirichlet(p, dom, f);

    // interior bump vanishing on the domain boundary
    ScalarField interior = gaussian_bump(g, {0, 0, 0}, 0.4, 1.2);
    cplx before = forward::neumann_pairing(p, dom, u, f);
    cplx after = forward::neumann_pairing(p, dom, u, f + interior);
    double scale = std::max(std::abs(before), 1.0);
    CHECK(std::abs(forward::neumann_pairing(p, dom, u, interior)) < 1e-8 * scale);
    CHECK(std::abs(before - after) < 1e-8 * scale);
}

TEST_CASE("dataset: constant boundary data gives a zero row, reruns are bit-identical") {
    Grid3 g(32, 8.0);
    forward::BoxDomain dom(g, 9, 2);
    Potentials p0 = zero_potentials(g);
    forward::CauchyDataset one = forward::build_cauchy_dataset(p0, dom, 1, 1);
    CHECK(std::abs(one.at(0, 0)) < 1e-11);

    PotentialParams pp;
    pp.amplitude = 0.5;
    pp.q_amplitude = 0.25;
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);
    forward::CauchyDataset a = forward::build_cauchy_dataset(p, dom, 7, 2);
    forward::CauchyDataset b = forward::build_cauchy_dataset(p, dom, 7, 2);
    CHECK(std::memcmp(a.q.data(), b.q.data(), a.q.size() * sizeof(cplx)) == 0);
}

TEST_CASE("dataset is Hermitian for real potentials") {
    Grid3 g(32, 8.0);
    forward::BoxDomain dom(g, 9, 2);
    PotentialParams pp;
    pp.amplitude = 0.5;
    pp.q_amplitude = 0.3;
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);
    forward::CauchyDataset ds = forward::build_cauchy_dataset(p, dom, 7, 2);
    double scale = 0, gap = 0;
    for (int m = 0; m < ds.modes; ++m)
        for (int mp = 0; mp < ds.modes; ++mp) {
            scale = std::max(scale, std::abs(ds.at(m, mp)));
            gap = std::max(gap, std::abs(ds.at(m, mp) - std::conj(ds.at(mp, m))));
        }
    CHECK(gap / scale < 1e-8);
}

TEST_CASE("pairing entries converge under refinement for smooth global data") {
    Grid3 g(64, 8.0);
    PotentialParams pp;
    pp.amplitude = 0.4;
    pp.q_amplitude = 0.2;
    Potentials p = make_test_potential(g, PotentialKind::Smooth, pp);
    ScalarField f1(g), f2(g);
    for (int iz = 0; iz < g.n(); ++iz)
        for (int iy = 0; iy < g.n(); ++iy)
            for (int ix = 0; ix < g.n(); ++ix) {
                Vec3 x = g.point(ix, iy, iz);
                f1.at(ix, iy, iz) = std::cos(0.3 * x[0]) * std::cos(0.2 * x[1]);
                f2.at(ix, iy, iz) = std::sin(0.25 * x[2]) + 0.5 * x[0];
            }
    std::vector<double> spacings, errors;
    cplx finest;
    {
        forward::BoxDomain dom(g, 33, 1);
        finest = forward::neumann_pairing(p, dom, forward::solve_dirichlet(p, dom, f1), f2);
    }
    for (int cfg = 0; cfg < 2; ++cfg) {
        forward::BoxDomain dom = cfg == 0 ? forward::BoxDomain(g, 9, 4)
                                          : forward::BoxDomain(g, 17, 2);
        cplx v = forward::neumann_pairing(p, dom, forward::solve_dirichlet(p, dom, f1), f2);
        spacings.push_back(dom.spacing());
        errors.push_back(std::abs(v - finest));
    }
    double order = std::log(errors[0] / errors[1]) / std::log(spacings[0] / spacings[1]);
    CHECK(order >= 1.8);
}
