#ifndef MAGSCHROD_FORWARD_HPP
#define MAGSCHROD_FORWARD_HPP

#include <optional>
#include <string>
#include <vector>

#include "magschrod/potentials.hpp"

namespace msw {
namespace forward {

/**
 * Axis-aligned box Omega embedded in the torus grid; FEM nodes are a strided
 * subset of grid nodes so potentials sample without interpolation. Nodes with
 * any index at 0 or m-1 are boundary nodes.
 */
class BoxDomain {
  public:
    BoxDomain(const Grid3& grid, int nodes_per_axis, int stride);

    const Grid3& grid() const { return grid_; }
    int nodes() const { return m_; }
    int stride() const { return stride_; }
    double spacing() const { return grid_.spacing() * stride_; }
    double side() const { return spacing() * (m_ - 1); }
    double volume() const { return std::pow(side(), 3); }

    int grid_index_1d(int i) const { return lo_ + stride_ * i; }
    std::size_t grid_index(int i, int j, int k) const {
        return grid_.index(grid_index_1d(i), grid_index_1d(j), grid_index_1d(k));
    }
    Vec3 node_point(int i, int j, int k) const {
        return grid_.point(grid_index_1d(i), grid_index_1d(j), grid_index_1d(k));
    }
    std::size_t node_index(int i, int j, int k) const {
        return std::size_t(i) + std::size_t(m_) * (std::size_t(j) + std::size_t(m_) * k);
    }
    bool is_boundary(int i, int j, int k) const {
        return i == 0 || j == 0 || k == 0 || i == m_ - 1 || j == m_ - 1 || k == m_ - 1;
    }
    std::size_t num_nodes() const { return std::size_t(m_) * m_ * m_; }

    /** Same box with the mesh refined by an integer factor (stride divisible). */
    BoxDomain refined(int factor) const;

  private:
    Grid3 grid_;
    int m_;
    int stride_;
    int lo_;
};

struct SolveReport {
    double relative_residual = 0.0;
    int iterations = 0;
    bool used_direct_solver = false;
};

/**
 * Dirichlet solve of the weak magnetic Schroedinger equation on Omega with
 * trilinear elements and trapezoid quadrature. Boundary values are read from
 * f at boundary nodes. The returned field carries u at the domain's grid
 * nodes and zero elsewhere.
 */
ScalarField solve_dirichlet(const Potentials& p, const BoxDomain& dom, const ScalarField& f,
                            SolveReport* report = nullptr);

/**
 * (N_{A,q} u, [g]) = integral over Omega of grad u . grad g
 *   + i A . (u grad g - g grad u) + (A^2 + q) u g, with exactly the discrete
 * form used by solve_dirichlet (one bilinear form for solver and pairing).
 */
cplx neumann_pairing(const Potentials& p, const BoxDomain& dom, const ScalarField& u,
                     const ScalarField& g);

/** Boundary basis function m: the constant, then per-face cosine products
 *  ordered by total frequency, face, then frequency pair. */
ScalarField boundary_basis_field(const BoxDomain& dom, int index);

struct CauchyDataset {
    int modes = 0;
    std::vector<cplx> q;  // modes x modes pairing matrix, row-major
    cplx& at(int m, int mp) { return q[std::size_t(m) * modes + mp]; }
    const cplx& at(int m, int mp) const { return q[std::size_t(m) * modes + mp]; }
    double max_abs_diff(const CauchyDataset& other) const;

    void save(const std::string& dir) const;
    static CauchyDataset load(const std::string& dir);
};

/** Q[m,m'] = (N u_m, [g_m']) over the first `modes` boundary basis functions. */
CauchyDataset build_cauchy_dataset(const Potentials& p, const BoxDomain& dom, int modes,
                                   int workers = 1);

struct GaugeReport {
    double positive_discrepancy = 0.0;   // interior-supported psi
    double negative_discrepancy = 0.0;   // psi != 0 on the boundary
    double nested_discrepancy = 0.0;     // datasets on the enlarged domain
    double discretization_budget = 0.0;  // coarse-vs-refined dataset delta
    int modes = 0;
};

/**
 * Lemma-3.1-type verification: datasets for (A, q) and (A + grad psi, q)
 * agree when psi is interior supported, a boundary-supported psi breaks the
 * agreement, and equality persists on an enclosing domain. The budget is the
 * measured discretization error of the dataset itself (coarse vs refined).
 */
GaugeReport verify_gauge_equivalence(const Potentials& p, const ScalarField& psi,
                                     const BoxDomain& dom, int modes, int workers = 1);

}  // namespace forward
}  // namespace msw

#endif
