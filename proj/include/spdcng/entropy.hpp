#pragma once

// Differential entropies and negentropies (bits) of the two-photon densities,
// and the total / conditional / marginal non-Gaussianity measures.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "spdcng/distributions.hpp"
#include "spdcng/moments.hpp"
#include "spdcng/quadrature.hpp"
#include "spdcng/shape_constants.hpp"
#include "spdcng/shape_integrals.hpp"

namespace spdcng {

// Value and error estimate in nats.
struct EntropyNats {
    double value = 0.0;
    double err = 0.0;
};

inline double nats_to_bits(double v) { return v / std::numbers::ln2; }

namespace detail {

inline double gaussian_entropy_nats(double var) { return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var); }

// Entropy of N * G(u) * D(d) with the (u, d) Jacobian 1/2:
//   H = -ln N - <ln G> - <ln D>.
inline EntropyNats joint_entropy_nats(const DensitySpec& joint, const quad::QuadTolerance& tol) {
    const JointGeometry& g = joint.geometry();
    const double su = g.u_width;
    const auto gi = quad::integrate<std::array<double, 2>>(
        [su](double u) {
            const double z = u / su;
            const double e = std::exp(-0.5 * z * z);
            return std::array<double, 2>{e, -0.5 * z * z * e};
        },
        quad::Domain::full_line().with_breakpoints({-su, 0.0, su}), tol, "sum-factor entropy");
    const ShapeMoments& sm = shape_moments(g.shape, tol);
    EntropyNats h;
    h.value = -std::log(joint.norm()) - gi.value[1] / gi.value[0] - sm.log_integral / sm.m0;
    h.err = (gi.err_estimate[1] + gi.err_estimate[0]) / gi.value[0] +
            (sm.log_err + std::abs(sm.log_integral / sm.m0) * sm.m0_err) / sm.m0 + sm.m0_err / sm.m0;
    return h;
}

// Product profile q(r) = K(r^2) g(r), g Gaussian:
//   int q ln q = int g K ln K + int K g ln g.
inline EntropyNats product_entropy_nats(const SliceProfile& pr, const quad::QuadTolerance& tol) {
    const Envelope env{pr.center, pr.width};
    const double c = pr.center;
    const double w = pr.width;
    const auto plain = shape_integral<2>(
        pr.shape, KernelKind::plain, env,
        [c, w](double s) {
            const double z = (s - c) / w;
            return std::array<double, 2>{1.0, -0.5 * z * z};
        },
        tol, "slice entropy");
    const auto logk = shape_integral_1(pr.shape, KernelKind::log, env, [](double) { return 1.0; }, tol,
                                       "slice entropy (log kernel)");
    const double z = plain.value[0];
    const double e = logk.value + plain.value[1];
    EntropyNats h;
    h.value = std::log(z) - e / z + std::log(std::abs(pr.scale));
    h.err = plain.err_estimate[0] / z + (logk.err_estimate + plain.err_estimate[1]) / z +
            std::abs(e / z) * plain.err_estimate[0] / z;
    return h;
}

// Smooth part of the marginal far from the centre: the Gaussian average of
// the tail mean A(s^2). Valid once the whole Gaussian lies where |s| > 2.
inline double convolved_mean(Shape shape, double y, double w, const quad::QuadTolerance& tol) {
    if (w <= kHermiteWidth) {
        const quad::HermiteRule& r = quad::gauss_hermite(64);
        double acc = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            const double s = y + std::numbers::sqrt2 * w * r.nodes[i];
            acc += r.weights[i] * shape_tail(shape, s * s).mean;
        }
        return std::numbers::sqrt2 * w * acc;
    }
    const double reach = gaussian_reach(tol);
    const double lo = std::max(y - reach * w, 2.5);
    const double hi = y + reach * w;
    std::vector<double> br;
    for (int j = -static_cast<int>(reach); j <= static_cast<int>(reach); ++j) br.push_back(y + j * w);
    return quad::integrate_1d(
               [&](double s) {
                   const double z = (s - y) / w;
                   return std::exp(-0.5 * z * z) * shape_tail(shape, s * s).mean;
               },
               quad::Domain::finite(lo, hi).with_breakpoints(br), tol, "marginal tail")
        .value;
}

// Bound on what is lost by replacing the marginal with its smooth part
// beyond |y| = Y: the surviving chirp amplitude after Gaussian smoothing,
// times the log weight, integrated by parts once.
inline double marginal_chirp_bound(Shape shape, double y, double w) {
    const double a = shape_tail(shape, std::pow(std::max(y - 12.0 * w, 2.5), 2.0)).mean;
    const double damp = std::exp(-8.0 * y * y * w * w / (1.0 + 16.0 * w * w * w * w));
    return 2.0 * a * (std::abs(std::log(a)) + 1.0) * damp / (4.0 * y);
}

// Convolution profile q(r) = int K(s^2) N(s; r, w) ds (unnormalized
// Gaussian). Even in r, so integrate over r >= 0 and double.
inline EntropyNats convolution_entropy_nats(const SliceProfile& pr, const quad::QuadTolerance& tol) {
    const Shape shape = pr.shape;
    const double w = pr.width;
    using V = std::array<double, 4>;  // q, q ln q, dq, dq |1 + ln q|
    auto exact = [&](double r) -> V {
        const quad::QuadResult m = convolved_shape(shape, r, w, tol);
        const double q = m.value;
        const double lq = q > 1e-300 ? std::log(q) : 0.0;
        return {q, q > 1e-300 ? q * lq : 0.0, m.err_estimate, m.err_estimate * std::abs(1.0 + lq)};
    };
    const double reach = gaussian_reach(tol);
    const double sd = std::sqrt(shape_moments(shape, tol).m2 / shape_moments(shape, tol).m0 + w * w);

    quad::BasicResult<V> core;
    quad::BasicResult<V> tail;
    double bound = 0.0;
    if (!shape_oscillates(shape)) {
        std::vector<double> br;
        for (int j = 1; j <= static_cast<int>(reach) + 2; ++j) br.push_back(j * sd);
        core = quad::integrate<V>(exact, quad::Domain::half_line(0.0).with_breakpoints(br), tol, "marginal entropy",
                                  quad::Control{2});
    } else {
        // Split where the chirp has been smoothed away and the Gaussian sits
        // entirely in the asymptotic region.
        double y1 = 22.0 * w + 5.0;
        while (marginal_chirp_bound(shape, y1, w) > 0.01 * tol.abs_tol) y1 *= 1.05;
        bound = 2.0 * marginal_chirp_bound(shape, y1, w);

        std::vector<double> br;
        const double y_osc = std::min(y1, 2.2 / w);
        const auto kmax = static_cast<long>(y_osc * y_osc / std::numbers::pi);
        for (long k = 1; k <= kmax; ++k) br.push_back(std::sqrt(k * std::numbers::pi));
        for (int j = 1; j * w < y1 && j <= 64; ++j) br.push_back(j * w);
        for (int j = 1; j * sd < y1 && j <= 64; ++j) br.push_back(j * sd);
        core = quad::integrate<V>(exact, quad::Domain::finite(0.0, y1).with_breakpoints(br), tol,
                                  "marginal entropy", quad::Control{2});
        auto smooth = [&](double r) -> V {
            const double q = convolved_mean(shape, r, w, tol);
            return {q, q > 1e-300 ? q * std::log(q) : 0.0, 0.0, 0.0};
        };
        std::vector<double> tb;
        for (int j = 1; j <= static_cast<int>(reach); ++j) tb.push_back(y1 + j * w);
        tail = quad::integrate<V>(smooth, quad::Domain::half_line(y1).with_breakpoints(tb), tol,
                                  "marginal entropy tail", quad::Control{2});
    }
    const double z = 2.0 * (core.value[0] + tail.value[0]);
    const double e = 2.0 * (core.value[1] + tail.value[1]);
    const double ez = 2.0 * (core.err_estimate[0] + tail.err_estimate[0] + core.value[2] + tail.value[2]);
    const double ee = 2.0 * (core.err_estimate[1] + tail.err_estimate[1] + core.value[3] + tail.value[3]) + bound;
    EntropyNats h;
    h.value = std::log(z) - e / z + std::log(std::abs(pr.scale));
    h.err = ez / z + ee / z + std::abs(e / z) * ez / z;
    return h;
}

inline EntropyNats entropy_nats(const DensitySpec& spec, const quad::QuadTolerance& tol) {
    if (spec.form().kind == Form::Kind::joint) return joint_entropy_nats(spec, tol);
    const SliceProfile& pr = spec.profile();
    return pr.kind == SliceProfile::Kind::product ? product_entropy_nats(pr, tol) : convolution_entropy_nats(pr, tol);
}

}  // namespace detail

struct EntropyValue {
    double value = 0.0;         // bits
    double err_estimate = 0.0;  // bits
};

inline EntropyValue differential_entropy_detail(const DensitySpec& spec, const quad::QuadTolerance& tol = {}) {
    const EntropyNats h = detail::entropy_nats(spec, tol);
    return {nats_to_bits(h.value), nats_to_bits(h.err)};
}

// H = -int p log2 p over the density's domain.
inline double differential_entropy(const DensitySpec& spec, const quad::QuadTolerance& tol = {}) {
    return differential_entropy_detail(spec, tol).value;
}

// Entropy of the covariance-matched Gaussian of the SPDC joints, in closed
// form: far field log2(pi e sqrt(3) / P), near field
// log2(2 pi e sigma sqrt(a2/a1) P).
inline double gaussian_entropy_closed(Plane plane, const Params& prm, const quad::QuadTolerance& tol = {}) {
    const double p = prm.p();
    if (plane == Plane::far_field) return std::log2(std::numbers::pi * std::numbers::e * std::sqrt(3.0) / p);
    const ShapeConstants& c = shape_constants(tol);
    return std::log2(2.0 * std::numbers::pi * std::numbers::e * prm.sigma() * std::sqrt(c.a2_over_a1()) * p);
}

struct NegentropyValue {
    double value = 0.0;
    double h_actual = 0.0;
    double h_gaussian = 0.0;
    double err_estimate = 0.0;
};

// N = H[matched Gaussian] - H[p]. Joint densities are matched to their full
// covariance matrix; one-dimensional slices and marginals to their own mean
// and variance.
inline NegentropyValue negentropy(const DensitySpec& spec, const quad::QuadTolerance& tol = {}) {
    const EntropyNats h = detail::entropy_nats(spec, tol);
    double hg = 0.0;
    double hg_err = 0.0;
    if (spec.form().kind == Form::Kind::joint) {
        const JointMoments jm = joint_moments(spec, tol);
        const double det = jm.cov.det();
        hg = std::log(2.0 * std::numbers::pi * std::numbers::e) + 0.5 * std::log(det);
        const double ddet = 2.0 * jm.cov.var1 * jm.err.var1 + 2.0 * std::abs(jm.cov.cov) * jm.err.cov;
        hg_err = 0.5 * ddet / det;
    } else {
        const SliceMoments sm = slice_moments(spec, tol);
        hg = detail::gaussian_entropy_nats(sm.var);
        hg_err = 0.5 * sm.var_err / sm.var;
    }
    NegentropyValue n;
    n.h_actual = nats_to_bits(h.value);
    n.h_gaussian = nats_to_bits(hg);
    n.value = n.h_gaussian - n.h_actual;
    n.err_estimate = nats_to_bits(h.err + hg_err);
    return n;
}

struct NgReport {
    double p = 0.0;
    double n_ff_joint = 0.0;
    double n_nf_joint = 0.0;
    double ng_total = 0.0;
    double n_ff_cond = 0.0;
    double n_nf_cond = 0.0;
    double ng_cond = 0.0;
    double n_ff_marg = 0.0;
    double n_nf_marg = 0.0;
    double ng_marg = 0.0;
    double decomposition_residual = 0.0;

    friend bool operator==(const NgReport&, const NgReport&) = default;
};

inline NegentropyValue model_negentropy(Plane plane, const Model& model, const Form& form, const Params& prm,
                                        const quad::QuadTolerance& tol = {}) {
    return negentropy(make_density(plane, model, form, prm, tol), tol);
}

inline NgReport ng_report(const Params& prm, const quad::QuadTolerance& tol = {},
                          const Model& model = Model::spdc()) {
    NgReport r;
    r.p = prm.p();
    auto n = [&](Plane pl, const Form& f) { return model_negentropy(pl, model, f, prm, tol).value; };
    r.n_ff_joint = n(Plane::far_field, Form::joint());
    r.n_nf_joint = n(Plane::near_field, Form::joint());
    r.n_ff_cond = n(Plane::far_field, Form::conditional_at(0.0));
    r.n_nf_cond = n(Plane::near_field, Form::conditional_at(0.0));
    r.n_ff_marg = n(Plane::far_field, Form::marginal());
    r.n_nf_marg = n(Plane::near_field, Form::marginal());
    r.ng_total = r.n_ff_joint + r.n_nf_joint;
    r.ng_cond = r.n_ff_cond + r.n_nf_cond;
    r.ng_marg = r.n_ff_marg + r.n_nf_marg;
    r.decomposition_residual = r.ng_total - r.ng_cond - r.ng_marg;
    return r;
}

// Negentropy (bits) of the bare shape density K(s^2)/int K: the small-P
// limit of the far-field marginal (sinc^2) and the large-P limit of the
// near-field marginal (sint^2).
inline double shape_negentropy(Shape shape, const quad::QuadTolerance& tol = {}) {
    const ShapeMoments& m = shape_moments(shape, tol);
    const double h = std::log(m.m0) - m.log_integral / m.m0;
    return nats_to_bits(detail::gaussian_entropy_nats(m.m2 / m.m0 - std::pow(m.m1 / m.m0, 2)) - h);
}

struct MarginalLimits {
    double small_p_limit = 0.0;
    double large_p_limit = 0.0;
};

inline MarginalLimits marginal_negentropy_limits(const quad::QuadTolerance& tol = {}) {
    return {shape_negentropy(Shape::sinc2, tol), shape_negentropy(Shape::sint2, tol)};
}

// H[conditional of the covariance-matched Gaussian joint] - H[conditional of
// the SPDC joint], both at the same slice. Unlike the negentropy of the
// slice, the reference Gaussian here is not matched to the slice's own
// variance.
inline double joint_matched_conditional_gap(Plane plane, const Params& prm, const quad::QuadTolerance& tol = {},
                                            double slice = 0.0) {
    const DensitySpec joint = make_density(plane, Model::spdc(), Form::joint(), prm, tol);
    const DensitySpec gauss = gaussian_equivalent(joint, tol);
    const DensitySpec c_spdc = conditional_of(joint, slice, tol);
    const DensitySpec c_gauss = conditional_of(gauss, slice, tol);
    return differential_entropy(c_gauss, tol) - differential_entropy(c_spdc, tol);
}

}  // namespace spdcng
