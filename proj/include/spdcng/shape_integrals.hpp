#pragma once

// Integrals of the phase-matching shapes against smooth weights:
//
//   plain:  I = int W(s) K(s^2) ds
//   log:    I = int W(s) K(s^2) ln K(s^2) ds
//
// where W = (optional Gaussian envelope) x (user weight), and K is one of the
// shapes in specfun.hpp. The sinc^2 and sint^2 shapes oscillate as cos(2 s^2)
// with an envelope that decays only like s^-4, so a plain adaptive rule would
// need enormous numbers of panels. Instead the line is split at |s| = s0:
//
//  * |s| <= s0: adaptive Gauss-Kronrod on panels aligned to the chirp,
//    one panel per period of cos(2 s^2);
//  * |s| >  s0: K = A + B cos 2t + C sin 2t exactly (t = s^2), so the
//    integral is the smooth part int W A (done adaptively on the mapped half
//    line) plus an oscillatory remainder evaluated by two steps of
//    integration by parts at the boundary.
//
// For the log kind, K ln K is split the same way using
// cos^2 ln cos^2 = (1/2 - ln 2) + Q(theta); the zero-mean remainder Q is not
// integrated, and a bound for it is added to the error estimate instead.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "spdcng/quadrature.hpp"
#include "spdcng/specfun.hpp"

namespace spdcng {

enum class KernelKind { plain, log };

// Gaussian envelope exp(-(s-center)^2 / (2 width^2)); an infinite width
// means no envelope.
struct Envelope {
    double center = 0.0;
    double width = std::numeric_limits<double>::infinity();

    bool finite() const { return std::isfinite(width); }
    double operator()(double s) const {
        if (!finite()) return 1.0;
        const double z = (s - center) / width;
        return std::exp(-0.5 * z * z);
    }
};

namespace detail {

inline double xlogx(double k) { return k > 1e-300 ? k * std::log(k) : 0.0; }

inline double kernel_term(Shape shape, KernelKind kind, double s) {
    const double k = shape_value(shape, s);
    return kind == KernelKind::plain ? k : xlogx(k);
}

// Number of standard deviations kept on each side of a Gaussian.
inline double gaussian_reach(const quad::QuadTolerance& tol) {
    return std::sqrt(2.0 * std::log(1.0 / std::min(tol.tail_cutoff, 0.1))) + 3.0;
}

// Zeros of sint, tabulated once for the range used by default splits and
// computed on demand beyond it.
inline double sint_zero_cached(long k) {
    static const std::vector<double> table = [] {
        std::vector<double> z;
        const long n = static_cast<long>(4.0e5 / std::numbers::pi);
        z.reserve(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) z.push_back(sint_zero(i));
        return z;
    }();
    if (k < static_cast<long>(table.size())) return table[static_cast<std::size_t>(k)];
    return sint_zero(k);
}

// Chirp breakpoints inside [a, b]: one per period of cos(2 s^2), placed on
// the zeros of the shape so that K ln K has its kinks on panel edges.
inline void add_chirp_breaks(std::vector<double>& out, Shape shape, double a, double b) {
    auto add_side = [&](double lo, double hi, double sign) {
        if (!(hi > lo)) return;
        const auto k0 = static_cast<long>(std::floor(lo * lo / std::numbers::pi));
        const auto k1 = static_cast<long>(std::ceil(hi * hi / std::numbers::pi));
        for (long k = k0; k <= k1; ++k) {
            double t = 0.0;
            if (shape == Shape::sint2) {
                t = sint_zero_cached(k);
            } else {
                if (k == 0) continue;
                t = static_cast<double>(k) * std::numbers::pi;
            }
            const double s = std::sqrt(t);
            if (s > lo && s < hi) out.push_back(sign * s);
        }
    };
    if (b > 0.0) add_side(std::max(a, 0.0), b, 1.0);
    if (a < 0.0) add_side(std::max(-b, 0.0), -a, -1.0);
}

// Smooth-mean and oscillatory coefficients of K or K ln K at s (|s| > 2).
struct TailTerms {
    double mean;
    std::complex<double> amp;  // K_osc = Re(amp * exp(2 i s^2))
    double q_scale;            // R^2 multiplying the dropped Q remainder
};

inline TailTerms tail_terms(Shape shape, KernelKind kind, double s) {
    const TailParts tp = shape_tail(shape, s * s);
    const std::complex<double> osc(tp.cos_amp, -tp.sin_amp);
    if (kind == KernelKind::plain) return {tp.mean, osc, 0.0};
    const double r2 = 2.0 * tp.mean;
    const double lr = std::log(r2);
    return {tp.mean * (std::log(tp.mean) - std::numbers::ln2 + 1.0), lr * osc, r2};
}

}  // namespace detail

template <std::size_t N, class W>
quad::BasicResult<std::array<double, N>> shape_integral(Shape shape, KernelKind kind, const Envelope& env,
                                                        W&& weight, const quad::QuadTolerance& tol,
                                                        const char* label = "shape integral") {
    using V = std::array<double, N>;
    tol.validate();
    if (env.finite() && !(env.width > 0.0)) throw std::domain_error("shape_integral: envelope width must be > 0");

    auto wfull = [&](double s) -> V {
        V w = weight(s);
        const double e = env(s);
        for (double& x : w) x *= e;
        return w;
    };

    quad::BasicResult<V> out;
    out.value = V{};
    out.err_estimate = V{};
    auto accumulate = [&](const quad::BasicResult<V>& r) {
        for (std::size_t i = 0; i < N; ++i) {
            out.value[i] += r.value[i];
            out.err_estimate[i] += r.err_estimate[i];
        }
        out.evaluations += r.evaluations;
        out.subdivisions += r.subdivisions;
    };

    // Support of the envelope and of a Gaussian shape.
    const double reach = detail::gaussian_reach(tol);
    constexpr double inf = std::numeric_limits<double>::infinity();
    double lo = -inf;
    double hi = inf;
    if (env.finite()) {
        lo = env.center - reach * env.width;
        hi = env.center + reach * env.width;
    }
    if (shape == Shape::gauss) {
        lo = std::max(lo, -reach - 1.0);
        hi = std::min(hi, reach + 1.0);
        if (!(lo < hi)) return out;
    }
    // Gaussian cut-off contributes at most (edge value) * width / reach.
    auto add_cut_bound = [&](double edge, double scale) {
        const V w = wfull(edge);
        const double k = std::abs(detail::kernel_term(shape, kind, edge)) + (kind == KernelKind::log ? 0.37 : 0.0);
        for (std::size_t i = 0; i < N; ++i) out.err_estimate[i] += std::abs(w[i]) * k * scale / reach;
    };
    if (env.finite()) {
        add_cut_bound(lo, env.width);
        add_cut_bound(hi, env.width);
    }

    auto integrand = [&](double s) -> V {
        V w = wfull(s);
        const double k = detail::kernel_term(shape, kind, s);
        for (double& x : w) x *= k;
        return w;
    };
    auto env_breaks = [&](std::vector<double>& br, double a, double b) {
        br.push_back(0.0);
        if (env.finite()) {
            for (int j = -static_cast<int>(reach); j <= static_cast<int>(reach); ++j) {
                const double x = env.center + j * env.width;
                if (x > a && x < b) br.push_back(x);
            }
        }
    };

    if (!shape_oscillates(shape)) {
        std::vector<double> br;
        env_breaks(br, lo, hi);
        for (int j = -12; j <= 12; ++j) br.push_back(static_cast<double>(j));
        accumulate(quad::integrate<V>(integrand, quad::Domain::finite(lo, hi).with_breakpoints(br), tol, label));
        return out;
    }

    // Split point. The envelope must vary slowly over one chirp period at s0
    // for the boundary expansion to hold.
    double s0 = 20.0;
    if (env.finite()) s0 = std::max(s0, 8.0 / env.width);
    auto tail_weight_scale = [&](double s) {
        double m = 0.0;
        for (double x : {s, -s}) {
            for (double v : wfull(x)) m = std::max(m, std::abs(v));
        }
        if (env.finite() && std::abs(env.center) > s) {
            for (double v : wfull(env.center)) m = std::max(m, std::abs(v));
        }
        return m;
    };
    // Bound of the dropped zero-mean remainder Q for the log kind.
    auto q_bound = [&](double s) {
        const detail::TailTerms tt = detail::tail_terms(shape, kind, s);
        return tail_weight_scale(s) * tt.q_scale * 0.5 / s;
    };
    if (kind == KernelKind::log) {
        while (s0 < 400.0 && q_bound(s0) > 0.05 * tol.abs_tol) s0 *= 1.1;
    }

    // Brute-force core.
    const double a = std::max(lo, -s0);
    const double b = std::min(hi, s0);
    if (a < b) {
        std::vector<double> br;
        detail::add_chirp_breaks(br, shape, a, b);
        env_breaks(br, a, b);
        accumulate(quad::integrate<V>(integrand, quad::Domain::finite(a, b).with_breakpoints(br), tol, label));
    }

    // Tails on each side.
    for (const double sign : {1.0, -1.0}) {
        // Tail interval in the reflected variable r = sign * s, r in [r0, r1].
        const double r0 = std::max(s0, sign > 0 ? lo : -hi);
        const double r1 = sign > 0 ? hi : -lo;
        if (!(r0 < r1)) continue;

        auto mean_part = [&](double r) -> V {
            V w = wfull(sign * r);
            const double m = detail::tail_terms(shape, kind, r).mean;
            for (double& x : w) x *= m;
            return w;
        };
        std::vector<double> br;
        if (env.finite()) {
            for (int j = -static_cast<int>(reach); j <= static_cast<int>(reach); ++j) {
                const double x = sign * env.center + j * env.width;
                if (x > r0 && x < r1) br.push_back(x);
            }
        }
        const quad::Domain dom = std::isfinite(r1) ? quad::Domain::finite(r0, r1).with_breakpoints(br)
                                                   : quad::Domain::half_line(r0).with_breakpoints(br);
        accumulate(quad::integrate<V>(mean_part, dom, tol, label));

        // Boundary terms of the oscillatory part, only if the weight is alive
        // at the split point.
        if (r0 == s0) {
            auto h_over_dpsi = [&](double r) {
                std::array<std::complex<double>, N> h;
                const V w = wfull(sign * r);
                const detail::TailTerms tt = detail::tail_terms(shape, kind, r);
                for (std::size_t i = 0; i < N; ++i) h[i] = w[i] * tt.amp / (4.0 * r);
                return h;
            };
            double step = 1e-3 * s0;
            if (env.finite()) step = std::min(step, 1e-3 * env.width);
            // Three terms of the boundary expansion
            //   int_{s0}^inf u psi' e^{i psi} ds
            //     ~ e^{i psi0} [ i u - u'/psi' - i (u'/psi')'/psi' ](s0),
            // with u = H/psi'. Derivatives by central differences.
            std::array<std::array<std::complex<double>, N>, 5> u;
            for (int j = -2; j <= 2; ++j) u[static_cast<std::size_t>(j + 2)] = h_over_dpsi(s0 + j * step);
            const std::complex<double> e0 = std::polar(1.0, 2.0 * s0 * s0);
            const double dpsi = 4.0 * s0;
            const std::complex<double> iu(0.0, 1.0);
            for (std::size_t i = 0; i < N; ++i) {
                const std::complex<double> d1 = (u[3][i] - u[1][i]) / (2.0 * step);
                const std::complex<double> wp = (u[4][i] - u[2][i]) / (2.0 * step) / (4.0 * (s0 + step));
                const std::complex<double> wm = (u[2][i] - u[0][i]) / (2.0 * step) / (4.0 * (s0 - step));
                const std::complex<double> d2 = (wp - wm) / (2.0 * step);
                const std::complex<double> val = e0 * (iu * u[2][i] - d1 / dpsi - iu * d2 / dpsi);
                out.value[i] += val.real();
                out.err_estimate[i] += std::abs(d2) / dpsi;
            }
            if (kind == KernelKind::log) {
                const double qb = q_bound(s0);
                for (std::size_t i = 0; i < N; ++i) out.err_estimate[i] += qb;
            }
        }
    }
    return out;
}

// Convenience: a single weight.
template <class W>
quad::QuadResult shape_integral_1(Shape shape, KernelKind kind, const Envelope& env, W&& weight,
                                  const quad::QuadTolerance& tol, const char* label = "shape integral") {
    auto r = shape_integral<1>(shape, kind, env, [&](double s) { return std::array<double, 1>{weight(s)}; }, tol,
                               label);
    quad::QuadResult q;
    q.value = r.value[0];
    q.err_estimate = r.err_estimate[0];
    q.evaluations = r.evaluations;
    q.subdivisions = r.subdivisions;
    return q;
}

}  // namespace spdcng
