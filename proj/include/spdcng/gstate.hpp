#pragma once

// Gaussian-state reference for the two-photon transverse state: the
// phase-space covariance matrix built from the second moments, its
// symplectic spectrum, purity and von Neumann entropy.
//
// Convention: vacuum quadrature variances 1/2 (product 1/4), so vacuum symplectic
// eigenvalues are 1/2 and a pure state has all nu = 1/2.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spdcng/distributions.hpp"
#include "spdcng/quadrature.hpp"
#include "spdcng/shape_constants.hpp"

namespace spdcng {

using Mat4 = std::array<std::array<double, 4>, 4>;

// Ordering (x1, q1, x2, q2). Position and momentum blocks are uncorrelated.
struct TwoModeCov {
    double a = 0.0;  // var(x_i)
    double b = 0.0;  // var(q_i)
    double c = 0.0;  // cov(x1, x2)
    double d = 0.0;  // cov(q1, q2)
    Mat4 m{};

    static TwoModeCov from_generators(double a, double b, double c, double d) {
        TwoModeCov v;
        v.a = a;
        v.b = b;
        v.c = c;
        v.d = d;
        v.m = {{{a, 0.0, c, 0.0}, {0.0, b, 0.0, d}, {c, 0.0, a, 0.0}, {0.0, d, 0.0, b}}};
        return v;
    }

    static TwoModeCov vacuum() { return from_generators(0.5, 0.5, 0.0, 0.0); }

    double det() const { return (a * a - c * c) * (b * b - d * d); }
};

// Generators from the closed-form second moments at the crystal plane.
// Free propagation to another near-field plane (sigma > 1) is a symplectic
// map, so the spectrum does not depend on sigma and the crystal-plane
// matrix is used for every Params.
inline TwoModeCov two_mode_cov(const Params& prm, const quad::QuadTolerance& tol = {}) {
    const double p = prm.p();
    const double r = shape_constants(tol).a2_over_a1();
    const double a = 0.25 * (1.0 + 4.0 * r * p * p);
    const double c = 0.25 * (1.0 - 4.0 * r * p * p);
    const double b = 0.25 * (1.0 + 3.0 / (p * p));
    const double d = 0.25 * (1.0 - 3.0 / (p * p));
    return TwoModeCov::from_generators(a, b, c, d);
}

struct SymplecticSpectrum {
    double nu_plus = 0.0;
    double nu_minus = 0.0;
};

namespace detail {

inline double det2(double a, double b, double c, double d) { return a * d - b * c; }

inline double det4(const Mat4& m) {
    // Laplace expansion along the first row.
    double out = 0.0;
    for (int j = 0; j < 4; ++j) {
        std::array<std::array<double, 3>, 3> s{};
        for (int r = 1; r < 4; ++r) {
            int cc = 0;
            for (int k = 0; k < 4; ++k) {
                if (k == j) continue;
                s[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(cc++)] =
                    m[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
            }
        }
        const double minor = s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1]) -
                             s[0][1] * (s[1][0] * s[2][2] - s[1][2] * s[2][0]) +
                             s[0][2] * (s[1][0] * s[2][1] - s[1][1] * s[2][0]);
        out += ((j % 2 == 0) ? 1.0 : -1.0) * m[0][static_cast<std::size_t>(j)] * minor;
    }
    return out;
}

// Cholesky attempt; fails for matrices that are not positive definite.
inline bool positive_definite(const Mat4& m) {
    Mat4 l{};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(s > 0.0)) return false;
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return true;
}

}  // namespace detail

// Symplectic eigenvalues of a two-mode covariance matrix from the standard
// invariants: with blocks A (mode 1), B (mode 2), C (cross),
//   Delta = det A + det B + 2 det C,
//   nu_{+,-}^2 = (Delta -+ sqrt(Delta^2 - 4 det V)) / 2.
// For the block structure above this is {sqrt((a+c)(b+d)), sqrt((a-c)(b-d))};
// nu_plus names the smaller one (the sum mode).
inline SymplecticSpectrum symplectic_spectrum(const TwoModeCov& v) {
    const Mat4& m = v.m;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            if (!std::isfinite(m[i][j])) throw std::domain_error("symplectic_spectrum: non-finite entry");
            if (std::abs(m[i][j] - m[j][i]) > 1e-12 * (std::abs(m[i][j]) + std::abs(m[j][i]) + 1e-300)) {
                throw std::domain_error("symplectic_spectrum: matrix is not symmetric");
            }
        }
    }
    if (!detail::positive_definite(m)) throw std::domain_error("symplectic_spectrum: matrix is not positive definite");
    const double det_a = detail::det2(m[0][0], m[0][1], m[1][0], m[1][1]);
    const double det_b = detail::det2(m[2][2], m[2][3], m[3][2], m[3][3]);
    const double det_c = detail::det2(m[0][2], m[0][3], m[1][2], m[1][3]);
    const double delta = det_a + det_b + 2.0 * det_c;
    const double det_v = detail::det4(m);
    const double disc = std::sqrt(std::max(delta * delta - 4.0 * det_v, 0.0));
    SymplecticSpectrum s;
    // Product form for the smaller root avoids cancellation.
    const double big = 0.5 * (delta + disc);
    s.nu_minus = std::sqrt(big);
    s.nu_plus = std::sqrt(det_v / big);
    return s;
}

inline double purity(const SymplecticSpectrum& s) { return 1.0 / (4.0 * s.nu_plus * s.nu_minus); }

enum class EntropyBase { nats, bits };

// Entropy contribution of one symplectic eigenvalue, in nats.
inline double vn_term(double nu) {
    if (!std::isfinite(nu) || nu < 0.5 - 1e-9) throw std::domain_error("vn_term: symplectic eigenvalue below 1/2");
    const double up = nu + 0.5;
    const double dn = nu - 0.5;
    return up * std::log(up) - (dn > 0.0 ? dn * std::log(dn) : 0.0);
}

inline double von_neumann_entropy(const SymplecticSpectrum& s, EntropyBase base = EntropyBase::nats) {
    const double h = vn_term(s.nu_plus) + vn_term(s.nu_minus);
    return base == EntropyBase::nats ? h : h / std::numbers::ln2;
}

// Relative-entropy non-Gaussianity of the pure two-photon state: the
// entropy of its moment-matched Gaussian reference.
inline double delta_b(const Params& prm, EntropyBase base = EntropyBase::nats, const quad::QuadTolerance& tol = {}) {
    return von_neumann_entropy(symplectic_spectrum(two_mode_cov(prm, tol)), base);
}

}  // namespace spdcng
