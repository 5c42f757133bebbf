#pragma once

// Universal integrals of the phase-matching shapes, computed once per
// tolerance and shared across threads.

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "spdcng/quadrature.hpp"
#include "spdcng/shape_integrals.hpp"
#include "spdcng/specfun.hpp"

namespace spdcng {

struct ShapeConstants {
    // int sint^2(s^2) ds and int s^2 sint^2(s^2) ds over the real line.
    double a1 = 0.0;
    double a2 = 0.0;
    // int_0^inf sinc^2(v^2) ln sinc^2(v^2) dv (half line).
    double i_ff = 0.0;
    // int sint^2(s^2) ln sint^2(s^2) ds over the whole real line. With these
    // limits the near-field joint entropy offset
    //   (1 - 2 i_nf / a1) / (2 ln 2)
    // evaluates to 1.434 bits.
    double i_nf = 0.0;
    // int s^2 sinc^2(s^2) ds / int sinc^2(s^2) ds; exactly 3/4.
    double sinc_moment_ratio = 0.0;
    // int sinc^2(s^2) ds (= 4 sqrt(pi)/3) and int s^2 sinc^2(s^2) ds.
    double b1 = 0.0;
    double b2 = 0.0;

    struct Errors {
        double a1 = 0.0, a2 = 0.0, i_ff = 0.0, i_nf = 0.0, sinc_moment_ratio = 0.0, b1 = 0.0, b2 = 0.0;
    } err;

    double a2_over_a1() const { return a2 / a1; }
};

// Moments int s^k K(s^2) ds for k = 0, 1, 2 of one shape, and its log
// integral int K ln K ds, both over the real line.
struct ShapeMoments {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0, log_integral = 0.0;
    double m0_err = 0.0, m2_err = 0.0, log_err = 0.0;
};

namespace detail {

inline ShapeMoments compute_shape_moments(Shape shape, const quad::QuadTolerance& tol) {
    ShapeMoments out;
    const auto moments = shape_integral<3>(
        shape, KernelKind::plain, Envelope{}, [](double s) { return std::array<double, 3>{1.0, s, s * s}; }, tol,
        shape == Shape::sint2 ? "sint^2 moments" : (shape == Shape::sinc2 ? "sinc^2 moments" : "gaussian moments"));
    const auto logi = shape_integral_1(
        shape, KernelKind::log, Envelope{}, [](double) { return 1.0; }, tol,
        shape == Shape::sint2 ? "sint^2 log integral" : (shape == Shape::sinc2 ? "sinc^2 log integral" : "gaussian log integral"));
    out.m0 = moments.value[0];
    out.m1 = moments.value[1];
    out.m2 = moments.value[2];
    out.m0_err = moments.err_estimate[0];
    out.m2_err = moments.err_estimate[2];
    out.log_integral = logi.value;
    out.log_err = logi.err_estimate;
    return out;
}

template <class T, class Make>
const T& memoized(std::map<quad::QuadTolerance, T>& cache, std::mutex& mu, const quad::QuadTolerance& tol,
                  Make&& make) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(tol);
    if (it != cache.end()) return it->second;
    return cache.emplace(tol, make()).first->second;
}

}  // namespace detail

// Memoized per (shape, tolerance). The lock is held during the first
// computation so concurrent first callers wait for a single evaluation.
inline const ShapeMoments& shape_moments(Shape shape, const quad::QuadTolerance& tol = {}) {
    tol.validate();
    static std::mutex mu;
    static std::map<quad::QuadTolerance, ShapeMoments> caches[3];
    return detail::memoized(caches[static_cast<int>(shape)], mu, tol,
                            [&] { return detail::compute_shape_moments(shape, tol); });
}

inline const ShapeConstants& shape_constants(const quad::QuadTolerance& tol = {}) {
    tol.validate();
    static std::mutex mu;
    static std::map<quad::QuadTolerance, ShapeConstants> cache;
    return detail::memoized(cache, mu, tol, [&] {
        const ShapeMoments& nf = shape_moments(Shape::sint2, tol);
        const ShapeMoments& ff = shape_moments(Shape::sinc2, tol);
        ShapeConstants c;
        c.a1 = nf.m0;
        c.a2 = nf.m2;
        c.i_nf = nf.log_integral;
        c.b1 = ff.m0;
        c.b2 = ff.m2;
        c.i_ff = 0.5 * ff.log_integral;
        c.sinc_moment_ratio = ff.m2 / ff.m0;
        c.err.a1 = nf.m0_err;
        c.err.a2 = nf.m2_err;
        c.err.i_nf = nf.log_err;
        c.err.b1 = ff.m0_err;
        c.err.b2 = ff.m2_err;
        c.err.i_ff = 0.5 * ff.log_err;
        c.err.sinc_moment_ratio = (ff.m2_err + c.sinc_moment_ratio * ff.m0_err) / ff.m0;
        return c;
    });
}

// Entropy offsets (bits) of the joint densities beyond the log-normalization
// term, derived from the constants above.
inline double far_field_entropy_offset(const ShapeConstants& c) {
    return (0.5 - 2.0 * c.i_ff / c.b1) / std::numbers::ln2;
}
inline double near_field_entropy_offset(const ShapeConstants& c) {
    return (1.0 - 2.0 * c.i_nf / c.a1) / (2.0 * std::numbers::ln2);
}

}  // namespace spdcng
