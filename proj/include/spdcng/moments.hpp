#pragma once

// Second moments of the two-photon densities and the separability criteria
// built from them.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "spdcng/distributions.hpp"
#include "spdcng/quadrature.hpp"
#include "spdcng/shape_constants.hpp"
#include "spdcng/shape_integrals.hpp"

namespace spdcng {

struct Cov2 {
    double var1 = 0.0;
    double var2 = 0.0;
    double cov = 0.0;

    double det() const { return var1 * var2 - cov * cov; }
};

struct JointMoments {
    double mean1 = 0.0;
    double mean2 = 0.0;
    Cov2 cov;
    Cov2 err;
};

// Mean vector and covariance of a joint density. The integral is taken in
// the rotated coordinates u = xi1 + xi2, d = xi1 - xi2, where the density is
// a product of a Gaussian in u and the phase-matching shape in d.
inline JointMoments joint_moments(const DensitySpec& joint, const quad::QuadTolerance& tol = {}) {
    require_joint(joint, "joint_moments");
    const JointGeometry& g = joint.geometry();
    const double su = g.u_width;
    const auto gu = quad::integrate<std::array<double, 3>>(
        [su](double u) {
            const double e = std::exp(-0.5 * (u / su) * (u / su));
            return std::array<double, 3>{e, u * e, u * u * e};
        },
        quad::Domain::full_line().with_breakpoints({-su, 0.0, su}), tol, "sum-coordinate moments");
    const ShapeMoments& sm = shape_moments(g.shape, tol);

    const double eu = gu.value[1] / gu.value[0];
    const double vu = gu.value[2] / gu.value[0] - eu * eu;
    const double ds = g.d_scale;
    const double ed = ds * sm.m1 / sm.m0;
    const double vd = ds * ds * sm.m2 / sm.m0 - ed * ed;

    JointMoments out;
    out.mean1 = 0.5 * (eu + ed);
    out.mean2 = 0.5 * (eu - ed);
    out.cov.var1 = 0.25 * (vu + vd);
    out.cov.var2 = out.cov.var1;
    out.cov.cov = 0.25 * (vu - vd);
    const double evu = (gu.err_estimate[2] + vu * gu.err_estimate[0]) / gu.value[0];
    const double evd = ds * ds * (sm.m2_err + (sm.m2 / sm.m0) * sm.m0_err) / sm.m0;
    out.err.var1 = 0.25 * (evu + evd);
    out.err.var2 = out.err.var1;
    out.err.cov = out.err.var1;
    return out;
}

inline Cov2 covariance_numeric(const DensitySpec& joint, const quad::QuadTolerance& tol = {}) {
    return joint_moments(joint, tol).cov;
}

// Closed forms for the SPDC joints: far field (1/4)(1 +- 3/P^2), near field
// (1/4)(sigma^2 +- 4 (a2/a1) P^2).
inline Cov2 covariance_closed(Plane plane, const Params& prm, const quad::QuadTolerance& tol = {}) {
    const double p = prm.p();
    double vu = 0.0;
    double vd = 0.0;
    if (plane == Plane::far_field) {
        vu = 1.0;
        vd = 3.0 / (p * p);
    } else {
        const ShapeConstants& c = shape_constants(tol);
        vu = prm.sigma() * prm.sigma();
        vd = 4.0 * c.a2_over_a1() * p * p;
    }
    return {0.25 * (vu + vd), 0.25 * (vu + vd), 0.25 * (vu - vd)};
}

struct SliceMoments {
    double mean = 0.0;
    double var = 0.0;
    double var_err = 0.0;
};

// Mean and variance of a one-dimensional slice or marginal, in its physical
// coordinate.
inline SliceMoments slice_moments(const DensitySpec& spec, const quad::QuadTolerance& tol = {}) {
    const SliceProfile& pr = spec.profile();
    SliceMoments out;
    if (pr.kind == SliceProfile::Kind::product) {
        const auto r = shape_integral<3>(
            pr.shape, KernelKind::plain, Envelope{pr.center, pr.width},
            [](double s) { return std::array<double, 3>{1.0, s, s * s}; }, tol, "slice moments");
        const double z = r.value[0];
        const double m = r.value[1] / z;
        const double v = r.value[2] / z - m * m;
        out.mean = pr.offset + pr.scale * m;
        out.var = pr.scale * pr.scale * v;
        out.var_err = pr.scale * pr.scale * (r.err_estimate[2] + std::abs(r.value[2] / z) * r.err_estimate[0]) / z;
    } else {
        // Variance of a convolution: shape variance plus Gaussian variance.
        const ShapeMoments& sm = shape_moments(pr.shape, tol);
        const double m = sm.m1 / sm.m0;
        const double v = sm.m2 / sm.m0 - m * m + pr.width * pr.width;
        out.mean = pr.offset + pr.scale * m;
        out.var = pr.scale * pr.scale * v;
        out.var_err = pr.scale * pr.scale * (sm.m2_err + (sm.m2 / sm.m0) * sm.m0_err) / sm.m0;
    }
    return out;
}

struct ConditionalVariances {
    double var_q_cond = 0.0;
    double var_x_cond = 0.0;
    // var_q_cond * P^2 and var_x_cond / P^2: the variances in units of k_p/L
    // and L/k_p respectively.
    double var_q_norm = 0.0;
    double var_x_norm = 0.0;
};

inline ConditionalVariances make_conditional_variances(double vq, double vx, double p) {
    return {vq, vx, vq * p * p, vx / (p * p)};
}

// Conditional variances of the SPDC far-field momentum and near-field
// position distributions, with the partner photon fixed at the given values.
inline ConditionalVariances conditional_variances(const Params& prm, const quad::QuadTolerance& tol = {},
                                                  double q_slice = 0.0, double x_slice = 0.0) {
    const DensitySpec ff = make_density(Plane::far_field, Model::spdc(), Form::conditional_at(q_slice), prm, tol);
    const DensitySpec nf = make_density(Plane::near_field, Model::spdc(), Form::conditional_at(x_slice), prm, tol);
    return make_conditional_variances(slice_moments(ff, tol).var, slice_moments(nf, tol).var, prm.p());
}

// Origin-slice conditional variances of the Gaussian model, in closed form.
inline ConditionalVariances gaussian_conditional_variances(double alpha, const Params& prm) {
    if (!std::isfinite(alpha) || !(alpha > 0.0)) throw std::domain_error("alpha must be finite and > 0");
    const double p = prm.p();
    const double s2 = prm.sigma() * prm.sigma();
    const double r = alpha * p * p;
    return make_conditional_variances(1.0 / (1.0 + r), s2 * r / (s2 + r), p);
}

inline ConditionalVariances model_conditional_variances(const Model& model, const Params& prm,
                                                        const quad::QuadTolerance& tol = {}) {
    return model.is_spdc() ? conditional_variances(prm, tol) : gaussian_conditional_variances(model.alpha, prm);
}

inline double schmidt_number(double sigma_plus, double delta_minus) {
    if (!(sigma_plus > 0.0) || !(delta_minus > 0.0) || !std::isfinite(sigma_plus) || !std::isfinite(delta_minus)) {
        throw std::domain_error("schmidt_number: widths must be finite and > 0");
    }
    const double r = sigma_plus / delta_minus + delta_minus / sigma_plus;
    return 0.25 * r * r;
}

struct EprResult {
    double var_x_cond = 0.0;
    double var_q_cond = 0.0;
    double product = 0.0;
    bool entangled_flag = false;
    bool nongaussian_witness_flag = false;

    friend bool operator==(const EprResult&, const EprResult&) = default;
};

inline EprResult make_epr(double vx, double vq) {
    EprResult r;
    r.var_x_cond = vx;
    r.var_q_cond = vq;
    r.product = vx * vq;
    r.entangled_flag = r.product < 0.25;
    r.nongaussian_witness_flag = r.product > 0.25;
    return r;
}

inline EprResult epr_product(const Params& prm, const Model& model = Model::spdc(),
                             const quad::QuadTolerance& tol = {}) {
    const ConditionalVariances cv = model_conditional_variances(model, prm, tol);
    return make_epr(cv.var_x_cond, cv.var_q_cond);
}

inline EprResult epr_product(const Params& prm, const quad::QuadTolerance& tol) {
    return epr_product(prm, Model::spdc(), tol);
}

struct ManciniResult {
    double sum_momentum_var = 0.0;     // [Delta(q1 + q2)]^2
    double diff_position_var = 0.0;    // [Delta(x1 - x2)]^2
    double product = 0.0;
    bool violated = false;             // product < 1 certifies entanglement

    friend bool operator==(const ManciniResult&, const ManciniResult&) = default;
};

// Both variances come from the joint densities' factor widths: the far-field
// sum coordinate is a unit Gaussian, and the near-field difference variance
// is ds^2 times the shape's second-moment ratio.
inline ManciniResult mancini_product(const Params& prm, const Model& model = Model::spdc(),
                                     const quad::QuadTolerance& tol = {}) {
    const double p = prm.p();
    ManciniResult r;
    r.sum_momentum_var = 1.0;
    if (model.is_spdc()) {
        r.diff_position_var = 4.0 * shape_constants(tol).a2_over_a1() * p * p;
    } else {
        r.diff_position_var = model.alpha * p * p;
    }
    r.product = r.sum_momentum_var * r.diff_position_var;
    r.violated = r.product < 1.0;
    return r;
}

// P at which the SPDC Mancini product equals 1.
inline double mancini_boundary(const quad::QuadTolerance& tol = {}) {
    return std::sqrt(1.0 / (4.0 * shape_constants(tol).a2_over_a1()));
}

struct EprCrossings {
    double p_low = 0.0;
    double p_high = 0.0;
};

class BracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class F>
double bisect_then_newton(F&& g, double lo, double hi) {
    double glo = g(lo);
    const double ghi = g(hi);
    if (!(glo * ghi < 0.0)) {
        throw BracketError("EPR crossing: no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    const double x = 0.5 * (lo + hi);
    const double h = 1e-4;
    const double slope = (g(x + h) - g(x - h)) / (2.0 * h);
    const double step = g(x) / slope;
    // Keep the refinement inside the final bracket.
    if (std::isfinite(step) && std::abs(step) <= hi - lo) return x - step;
    return x;
}

}  // namespace detail

inline EprCrossings find_epr_crossings(const quad::QuadTolerance& tol = {}, double sigma = 1.0) {
    auto g = [&](double p) { return epr_product(Params::dimensionless(p, sigma), tol).product - 0.25; };
    return {detail::bisect_then_newton(g, 0.1, 1.0), detail::bisect_then_newton(g, 1.0, 5.0)};
}

}  // namespace spdcng
