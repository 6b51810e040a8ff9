#include "magschrod/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace msw {

namespace {

// FFTW plan creation is not thread safe; execution via fftw_execute_dft is.
// Plans are cached per grid size and reused on caller buffers (UNALIGNED).
class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache c;
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
    PlanCache() = default;
    std::mutex mu_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

void run_dft(std::vector<cplx>& v, int n, int sign) {
    fftw_plan p = PlanCache::instance().get(n, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(v.data()),
                     reinterpret_cast<fftw_complex*>(v.data()));
}

// Centered sampling x = -L/2 + s*i turns e^{-ik.x} into a (-1)^{jx+jy+jz}
// twist on top of the plain index DFT.
inline double parity_sign(int jx, int jy, int jz) {
    return ((jx + jy + jz) & 1) ? -1.0 : 1.0;
}

template <typename Fn>
void for_each_mode(const Grid3& g, std::vector<cplx>& v, Fn&& fn) {
    const int n = g.n();
    std::size_t idx = 0;
    for (int jz = 0; jz < n; ++jz)
        for (int jy = 0; jy < n; ++jy)
            for (int jx = 0; jx < n; ++jx, ++idx) fn(jx, jy, jz, v[idx]);
}

}  // namespace

ScalarField fourier_transform(const ScalarField& f, FftDirection direction) {
    f.require_finite("fourier_transform");
    const Grid3& g = f.grid();
    ScalarField out(g, f.values());
    const int n = g.n();
    if (direction == FftDirection::Forward) {
        run_dft(out.values(), n, FFTW_FORWARD);
        const double scale = g.cell_volume();
        for_each_mode(g, out.values(), [&](int jx, int jy, int jz, cplx& z) {
            z *= scale * parity_sign(jx, jy, jz);
        });
    } else {
        const double scale = 1.0 / g.volume();
        for_each_mode(g, out.values(), [&](int jx, int jy, int jz, cplx& z) {
            z *= scale * parity_sign(jx, jy, jz);
        });
        run_dft(out.values(), n, FFTW_BACKWARD);
    }
    return out;
}

namespace {

// in-place spectral pipeline: forward DFT, multiplier on physical wavevectors,
// backward DFT (parity twists cancel between the two stages)
void multiplier_pipeline(ScalarField& f, const std::function<cplx(const Vec3&)>& fn) {
    const Grid3& g = f.grid();
    const int n = g.n();
    run_dft(f.values(), n, FFTW_FORWARD);
    const double scale = 1.0 / (double(n) * n * n);
    for_each_mode(g, f.values(), [&](int jx, int jy, int jz, cplx& z) {
        Vec3 k = {g.wavenumber(jx), g.wavenumber(jy), g.wavenumber(jz)};
        z *= scale * fn(k);
    });
    run_dft(f.values(), n, FFTW_BACKWARD);
}

}  // namespace

ScalarField apply_multiplier(const ScalarField& f, const std::function<cplx(const Vec3&)>& fn) {
    ScalarField out(f.grid(), f.values());
    multiplier_pipeline(out, fn);
    return out;
}

ScalarField spectral_derivative(const ScalarField& f, int axis) {
    if (axis < 1 || axis > 3) throw std::invalid_argument("spectral_derivative: axis must be 1..3");
    f.require_finite("spectral_derivative");
    const Grid3& g = f.grid();
    const double knyq = 2.0 * M_PI / g.box_length() * (-g.n() / 2);
    const int a = axis - 1;
    return apply_multiplier(f, [a, knyq](const Vec3& k) {
        if (k[a] == knyq) return cplx(0.0);  // odd operator: symmetrized Nyquist
        return cplx(0.0, k[a]);
    });
}

ScalarField spectral_laplacian(const ScalarField& f) {
    return apply_multiplier(f, [](const Vec3& k) { return cplx(-dot(k, k)); });
}

VectorField spectral_gradient(const ScalarField& f) {
    return VectorField(spectral_derivative(f, 1), spectral_derivative(f, 2), spectral_derivative(f, 3));
}

ScalarField spectral_divergence(const VectorField& a) {
    ScalarField out = spectral_derivative(a[0], 1);
    ScalarField d2 = spectral_derivative(a[1], 2);
    ScalarField d3 = spectral_derivative(a[2], 3);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d2[i] + d3[i];
    return out;
}

double semiclassical_norm(const ScalarField& f, const SobolevSpec& spec) {
    const Grid3& g = f.grid();
    ScalarField work(g, f.values());
    run_dft(work.values(), g.n(), FFTW_FORWARD);
    // |fhat|^2 = (L/N)^6 |DFT|^2 and norm^2 = L^{-3} sum <hk>^{2s} |fhat|^2
    const double scale = g.volume() / std::pow(double(g.num_points()), 2);
    double acc = 0.0;
    for_each_mode(g, work.values(), [&](int jx, int jy, int jz, cplx& z) {
        Vec3 k = {g.wavenumber(jx), g.wavenumber(jy), g.wavenumber(jz)};
        double w = 1.0 + spec.h * spec.h * dot(k, k);
        acc += std::pow(w, spec.s) * std::norm(z);
    });
    return std::sqrt(scale * acc);
}

double semiclassical_norm_from_hat(const ScalarField& fhat, const SobolevSpec& spec) {
    const Grid3& g = fhat.grid();
    double acc = 0.0;
    std::size_t idx = 0;
    const int n = g.n();
    for (int jz = 0; jz < n; ++jz)
        for (int jy = 0; jy < n; ++jy)
            for (int jx = 0; jx < n; ++jx, ++idx) {
                Vec3 k = {g.wavenumber(jx), g.wavenumber(jy), g.wavenumber(jz)};
                double w = 1.0 + spec.h * spec.h * dot(k, k);
                acc += std::pow(w, spec.s) * std::norm(fhat[idx]);
            }
    return std::sqrt(acc / g.volume());
}

double l2_norm(const ScalarField& f) {
    double acc = 0.0;
    for (const cplx& z : f.values()) acc += std::norm(z);
    return std::sqrt(acc * f.grid().cell_volume());
}

double l2_norm(const VectorField& f) {
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
        double na = l2_norm(f[a]);
        acc += na * na;
    }
    return std::sqrt(acc);
}

double sup_norm(const ScalarField& f) {
    double m = 0.0;
    for (const cplx& z : f.values()) m = std::max(m, std::abs(z));
    return m;
}

cplx inner_l2(const ScalarField& f, const ScalarField& g) {
    cplx acc(0.0);
    for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * std::conj(g[i]);
    return acc * f.grid().cell_volume();
}

cplx pairing(const ScalarField& f, const ScalarField& g) {
    cplx acc(0.0);
    for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * g[i];
    return acc * f.grid().cell_volume();
}

cplx mean_integral(const ScalarField& f) {
    cplx acc(0.0);
    for (const cplx& z : f.values()) acc += z;
    return acc * f.grid().cell_volume();
}

void raw_dft(std::vector<cplx>& values, int n, bool forward) {
    run_dft(values, n, forward ? FFTW_FORWARD : FFTW_BACKWARD);
    if (!forward) {
        const double scale = 1.0 / (double(n) * n * n);
        for (cplx& z : values) z *= scale;
    }
}

}  // namespace msw
