#pragma once

// Elementary kernels: sinc, the sine integral Si, sint = 1 - (2/pi) Si, and
// the phase-matching shapes evaluated on the squared variable t = s^2.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdcng {

namespace detail {

inline void require_finite(double x, const char* who) {
    if (!std::isfinite(x)) throw std::domain_error(std::string(who) + ": argument must be finite");
}

}  // namespace detail

inline double sinc(double x) {
    detail::require_finite(x, "sinc");
    const double ax = std::abs(x);
    if (ax < 1e-4) {
        // Taylor polynomial; the next omitted term is below 1e-22.
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
    }
    return std::sin(x) / x;
}

// Auxiliary functions of the sine and cosine integrals for x > 0:
//   Si(x) = pi/2 - f cos x - g sin x
// obtained from the continued fraction of exp(ix) E1(ix) = g - i f.
struct AuxFG {
    double f;
    double g;
};

inline AuxFG sine_integral_aux(double x) {
    detail::require_finite(x, "sine_integral_aux");
    if (!(x > 2.0)) throw std::domain_error("sine_integral_aux: requires x > 2");
    if (x >= 1e4) {
        // Asymptotic series; the first omitted terms are below 1e-21 relative.
        const double r = 1.0 / (x * x);
        return {(1.0 - r * (2.0 - 24.0 * r)) / x, r * (1.0 - r * (6.0 - 120.0 * r))};
    }
    using C = std::complex<double>;
    constexpr double tiny = 1e-300;
    constexpr double eps = 4e-16;
    C b(1.0, x);
    C c(1.0 / tiny, 0.0);
    C d = 1.0 / b;
    C h = d;
    for (int i = 2; i < 100000; ++i) {
        const double a = -static_cast<double>(i - 1) * static_cast<double>(i - 1);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const C del = c * d;
        h *= del;
        if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < eps) return {-h.imag(), h.real()};
    }
    throw std::runtime_error("sine_integral_aux: continued fraction did not converge");
}

inline double sine_integral(double x) {
    detail::require_finite(x, "sine_integral");
    const double ax = std::abs(x);
    double v = 0.0;
    if (ax <= 4.0) {
        const double x2 = ax * ax;
        double term = ax;  // x^(2k+1)/(2k+1)!
        double sum = ax;
        for (int k = 1; k < 60; ++k) {
            term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
            const double add = term / (2.0 * k + 1.0);
            sum += add;
            if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        }
        v = sum;
    } else {
        const AuxFG fg = sine_integral_aux(ax);
        v = std::numbers::pi / 2.0 - fg.f * std::cos(ax) - fg.g * std::sin(ax);
    }
    return x < 0.0 ? -v : v;
}

// sint(x) = 1 - (2/pi) Si(x) for x >= 0. Beyond x = 4 it is formed from the
// auxiliary functions directly, which keeps full relative accuracy in the tail.
inline double sint(double x) {
    detail::require_finite(x, "sint");
    if (x < 0.0) throw std::domain_error("sint: argument must be non-negative");
    if (x <= 4.0) return 1.0 - (2.0 / std::numbers::pi) * sine_integral(x);
    const AuxFG fg = sine_integral_aux(x);
    return (2.0 / std::numbers::pi) * (fg.f * std::cos(x) + fg.g * std::sin(x));
}

// Width parameter alpha of a Gaussian exp(-alpha u) that meets sinc(u) at the
// given fraction of the peak, at the first crossing u* in (0, pi).
inline double matching_alpha(double level) {
    detail::require_finite(level, "matching_alpha");
    if (!(level > 0.0 && level < 1.0)) throw std::domain_error("matching_alpha: level must lie in (0,1)");
    double lo = 0.0;
    double hi = std::numbers::pi;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (sinc(mid) > level) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return -std::log(level) / (0.5 * (lo + hi));
}

// Shapes of the difference factor in the reduced variable s:
//   sinc2: sinc^2(s^2), sint2: sint^2(s^2), gauss: exp(-s^2/2).
enum class Shape { sinc2, sint2, gauss };

inline const char* shape_name(Shape k) {
    switch (k) {
        case Shape::sinc2: return "sinc2";
        case Shape::sint2: return "sint2";
        case Shape::gauss: return "gauss";
    }
    return "?";
}

inline double shape_value(Shape k, double s) {
    switch (k) {
        case Shape::sinc2: {
            const double v = sinc(s * s);
            return v * v;
        }
        case Shape::sint2: {
            const double v = sint(s * s);
            return v * v;
        }
        case Shape::gauss: return std::exp(-0.5 * s * s);
    }
    return 0.0;
}

// For large t the oscillating shapes are exactly
//   K(t) = mean + cos_amp cos(2t) + sin_amp sin(2t)
// with slowly varying coefficients. Valid for t > 4.
struct TailParts {
    double mean;
    double cos_amp;
    double sin_amp;
};

inline TailParts shape_tail(Shape k, double t) {
    if (!(t > 4.0)) throw std::domain_error("shape_tail: requires t > 4");
    switch (k) {
        case Shape::sinc2: {
            const double a = 0.5 / (t * t);
            return {a, -a, 0.0};
        }
        case Shape::sint2: {
            const AuxFG fg = sine_integral_aux(t);
            constexpr double c = 2.0 / (std::numbers::pi * std::numbers::pi);
            return {c * (fg.f * fg.f + fg.g * fg.g), c * (fg.f * fg.f - fg.g * fg.g), 2.0 * c * fg.f * fg.g};
        }
        case Shape::gauss: break;
    }
    throw std::domain_error("shape_tail: shape has no oscillatory tail");
}

inline bool shape_oscillates(Shape k) { return k != Shape::gauss; }

// The zero of sint inside (k pi, (k+1) pi), k >= 0. For large k it sits
// just below (k + 1/2) pi.
inline double sint_zero(long k) {
    if (k < 0) throw std::domain_error("sint_zero: index must be non-negative");
    const double c = (static_cast<double>(k) + 0.5) * std::numbers::pi;
    double t = k == 0 ? 1.9 : c - 1.0 / c;
    for (int it = 0; it < 60; ++it) {
        const double v = sint(t);
        const double dv = -(2.0 / std::numbers::pi) * std::sin(t) / t;
        const double nt = t - v / dv;
        const bool done = std::abs(nt - t) <= 4e-16 * t;
        t = nt;
        if (done) break;
    }
    return t;
}

}  // namespace spdcng
