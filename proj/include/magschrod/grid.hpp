#ifndef MAGSCHROD_GRID_HPP
#define MAGSCHROD_GRID_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "magschrod/vec.hpp"

namespace msw {

/** Periodic cubic box [-L/2, L/2)^3 sampled on an N^3 lattice, x fastest. */
class Grid3 {
  public:
    Grid3(int n, double box_length) : n_(n), box_length_(box_length) {
        if (n < 4 || n % 2 != 0) throw std::invalid_argument("Grid3: N must be even and >= 4");
        if (!(box_length > 0)) throw std::invalid_argument("Grid3: box length must be positive");
    }

    int n() const { return n_; }
    double box_length() const { return box_length_; }
    double spacing() const { return box_length_ / n_; }
    double volume() const { return box_length_ * box_length_ * box_length_; }
    double cell_volume() const { double s = spacing(); return s * s * s; }
    std::size_t num_points() const { return std::size_t(n_) * n_ * n_; }

    std::size_t index(int ix, int iy, int iz) const {
        return std::size_t(ix) + std::size_t(n_) * (std::size_t(iy) + std::size_t(n_) * iz);
    }
    double coord(int i) const { return -0.5 * box_length_ + spacing() * i; }
    Vec3 point(int ix, int iy, int iz) const { return {coord(ix), coord(iy), coord(iz)}; }

    /** Signed integer frequency for FFT bin j (negative half for j >= N/2). */
    int freq_index(int j) const { return j < n_ / 2 ? j : j - n_; }
    double wavenumber(int j) const { return 2.0 * M_PI / box_length_ * freq_index(j); }

    bool operator==(const Grid3& o) const { return n_ == o.n_ && box_length_ == o.box_length_; }
    bool operator!=(const Grid3& o) const { return !(*this == o); }

  private:
    int n_;
    double box_length_;
};

/** Complex scalar samples on a Grid3, row-major with x fastest. */
class ScalarField {
  public:
    explicit ScalarField(const Grid3& grid) : grid_(grid), v_(grid.num_points(), cplx(0.0)) {}
    ScalarField(const Grid3& grid, std::vector<cplx> values) : grid_(grid), v_(std::move(values)) {
        if (v_.size() != grid_.num_points())
            throw std::invalid_argument("ScalarField: value count does not match grid");
    }

    const Grid3& grid() const { return grid_; }
    std::vector<cplx>& values() { return v_; }
    const std::vector<cplx>& values() const { return v_; }
    std::size_t size() const { return v_.size(); }

    cplx& operator[](std::size_t i) { return v_[i]; }
    const cplx& operator[](std::size_t i) const { return v_[i]; }
    cplx& at(int ix, int iy, int iz) { return v_[grid_.index(ix, iy, iz)]; }
    const cplx& at(int ix, int iy, int iz) const { return v_[grid_.index(ix, iy, iz)]; }

    bool all_finite() const {
        for (const cplx& z : v_)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        return true;
    }
    void require_finite(const std::string& what) const {
        if (!all_finite()) throw std::invalid_argument(what + ": field has non-finite entries");
    }

  private:
    Grid3 grid_;
    std::vector<cplx> v_;
};

/** Three scalar components on one shared grid. */
class VectorField {
  public:
    explicit VectorField(const Grid3& grid) : comp_{ScalarField(grid), ScalarField(grid), ScalarField(grid)} {}
    VectorField(ScalarField a1, ScalarField a2, ScalarField a3)
        : comp_{std::move(a1), std::move(a2), std::move(a3)} {
        if (comp_[0].grid() != comp_[1].grid() || comp_[0].grid() != comp_[2].grid())
            throw std::invalid_argument("VectorField: components must share one grid");
    }

    const Grid3& grid() const { return comp_[0].grid(); }
    ScalarField& operator[](int a) { return comp_[a]; }
    const ScalarField& operator[](int a) const { return comp_[a]; }

  private:
    std::array<ScalarField, 3> comp_;
};

/** Order and semiclassical parameter of the H^s_scl multiplier norm. */
struct SobolevSpec {
    double s = 0.0;
    double h = 1.0;
    SobolevSpec(double s_, double h_) : s(s_), h(h_) {
        if (!(h > 0)) throw std::invalid_argument("SobolevSpec: h must be positive");
    }
};

// elementwise helpers used throughout the modules

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    ScalarField r(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}
inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    ScalarField r(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}
inline ScalarField operator*(cplx s, const ScalarField& a) {
    ScalarField r(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}
inline ScalarField multiply(const ScalarField& a, const ScalarField& b) {
    ScalarField r(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
    return r;
}
inline ScalarField conjugate(const ScalarField& a) {
    ScalarField r(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = std::conj(a[i]);
    return r;
}
inline VectorField conjugate(const VectorField& a) {
    return VectorField(conjugate(a[0]), conjugate(a[1]), conjugate(a[2]));
}
inline VectorField operator+(const VectorField& a, const VectorField& b) {
    return VectorField(a[0] + b[0], a[1] + b[1], a[2] + b[2]);
}
inline VectorField operator-(const VectorField& a, const VectorField& b) {
    return VectorField(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

}  // namespace msw

#endif
