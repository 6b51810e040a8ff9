#ifndef MAGSCHROD_VEC_HPP
#define MAGSCHROD_VEC_HPP

#include <array>
#include <cmath>
#include <complex>

namespace msw {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;
using CVec3 = std::array<cplx, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline cplx dot(const CVec3& a, const CVec3& b) {
    // bilinear (no conjugation); the null condition zeta.zeta=0 uses this form
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline cplx dot(const CVec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline double norm(const CVec3& a) {
    return std::sqrt(std::norm(a[0]) + std::norm(a[1]) + std::norm(a[2]));
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]};
}

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

inline CVec3 operator+(const CVec3& a, const CVec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline CVec3 operator*(cplx s, const CVec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

inline CVec3 to_complex(const Vec3& a) { return {cplx(a[0]), cplx(a[1]), cplx(a[2])}; }

inline CVec3 conj(const CVec3& a) { return {std::conj(a[0]), std::conj(a[1]), std::conj(a[2])}; }

inline Vec3 real_part(const CVec3& a) { return {a[0].real(), a[1].real(), a[2].real()}; }
inline Vec3 imag_part(const CVec3& a) { return {a[0].imag(), a[1].imag(), a[2].imag()}; }

inline Vec3 normalized(const Vec3& a) {
    double n = norm(a);
    return {a[0] / n, a[1] / n, a[2] / n};
}

}  // namespace msw

#endif
