#pragma once

// Two-photon transverse densities in dimensionless coordinates
// (x~ = x/w0 in the near field, q~ = w0 q in the far field).
//
// Every joint density has the form
//     p(xi1, xi2) = N * G(xi1 + xi2) * D(xi1 - xi2),
//     G(u) = exp(-u^2 / (2 su^2)),   D(d) = K((d / ds)^2)
// with K one of the shapes of specfun.hpp. Slices and marginals reduce to
// one-dimensional integrals of K against a Gaussian in the scaled variable
// s = d / ds, which is how they are evaluated here.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "spdcng/quadrature.hpp"
#include "spdcng/shape_constants.hpp"
#include "spdcng/shape_integrals.hpp"
#include "spdcng/specfun.hpp"

namespace spdcng {

// Physical description of the source, all lengths in meters.
struct PhysicalSetup {
    double crystal_length = 0.0;   // L
    double pump_wavenumber = 0.0;  // k_p, 1/m
    double beam_waist = 0.0;       // w0
    double plane_z = 0.0;          // z

    double diffraction_length() const { return pump_wavenumber * beam_waist * beam_waist / 2.0; }
};

class Params {
public:
    static Params dimensionless(double p, double sigma = 1.0) {
        if (!std::isfinite(p) || !(p > 0.0)) throw std::invalid_argument("Params: P must be finite and > 0");
        if (!std::isfinite(sigma) || !(sigma >= 1.0)) throw std::invalid_argument("Params: sigma must be finite and >= 1");
        Params out;
        out.p_ = p;
        out.sigma_ = sigma;
        return out;
    }

    static Params from_physical(const PhysicalSetup& ph) {
        for (double v : {ph.crystal_length, ph.pump_wavenumber, ph.beam_waist}) {
            if (!std::isfinite(v) || !(v > 0.0)) {
                throw std::invalid_argument("Params: L, k_p and w0 must be finite and > 0");
            }
        }
        if (!std::isfinite(ph.plane_z)) throw std::invalid_argument("Params: z must be finite");
        const double z0 = ph.diffraction_length();
        const double ratio = ph.plane_z / z0;
        Params out = dimensionless(std::sqrt(ph.crystal_length / (2.0 * z0)), std::sqrt(1.0 + ratio * ratio));
        out.physical_ = ph;
        return out;
    }

    double p() const { return p_; }
    double sigma() const { return sigma_; }
    const std::optional<PhysicalSetup>& physical() const { return physical_; }

    Params with_p(double p) const {
        Params out = dimensionless(p, sigma_);
        return out;
    }

private:
    double p_ = 1.0;
    double sigma_ = 1.0;
    std::optional<PhysicalSetup> physical_;
};

enum class Plane { far_field, near_field };

inline const char* plane_name(Plane p) { return p == Plane::far_field ? "far_field" : "near_field"; }

struct Model {
    enum class Kind { spdc, gaussian };
    Kind kind = Kind::spdc;
    double alpha = 0.0;

    static Model spdc() { return {}; }
    static Model gaussian(double alpha) {
        if (!std::isfinite(alpha) || !(alpha > 0.0)) throw std::invalid_argument("Model: alpha must be finite and > 0");
        return {Kind::gaussian, alpha};
    }
    bool is_spdc() const { return kind == Kind::spdc; }
};

struct Form {
    enum class Kind { joint, conditional_at, marginal };
    Kind kind = Kind::joint;
    double fixed = 0.0;

    static Form joint() { return {}; }
    static Form conditional_at(double v = 0.0) {
        if (!std::isfinite(v)) throw std::invalid_argument("Form: slice value must be finite");
        return {Kind::conditional_at, v};
    }
    static Form marginal() { return {Kind::marginal, 0.0}; }
    int arity() const { return kind == Kind::joint ? 2 : 1; }
};

class DegenerateSliceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Parameters of the factorized joint density.
struct JointGeometry {
    Shape shape = Shape::sinc2;
    double d_scale = 1.0;  // ds: difference coordinate d = ds * s
    double u_width = 1.0;  // su: standard deviation of the sum factor

    // Width of the Gaussian factor in the s variable once the other photon is
    // fixed or integrated out.
    double slice_width() const { return u_width / d_scale; }
};

inline JointGeometry joint_geometry(Plane plane, const Model& model, const Params& prm) {
    const double p = prm.p();
    JointGeometry g;
    if (plane == Plane::far_field) {
        g.u_width = 1.0;
        if (model.is_spdc()) {
            g.shape = Shape::sinc2;
            g.d_scale = 2.0 / p;
        } else {
            g.shape = Shape::gauss;
            g.d_scale = 1.0 / (std::sqrt(model.alpha) * p);
        }
    } else {
        g.u_width = prm.sigma();
        if (model.is_spdc()) {
            g.shape = Shape::sint2;
            g.d_scale = 2.0 * p;
        } else {
            g.shape = Shape::gauss;
            g.d_scale = std::sqrt(model.alpha) * p;
        }
    }
    return g;
}

// Above this slice width the Gaussian factor is integrated with the adaptive
// shape rule; below it a Gauss-Hermite rule in the Gaussian variable is both
// faster and more accurate.
inline constexpr double kHermiteWidth = 0.1;

// c(y) = int K(s^2) exp(-(s - y)^2 / (2 w^2)) ds: the conditional
// normalization at scaled slice y and, up to a constant, the marginal.
inline quad::QuadResult convolved_shape(Shape shape, double y, double w, const quad::QuadTolerance& tol) {
    if (!(w > 0.0) || !std::isfinite(w) || !std::isfinite(y)) {
        throw std::domain_error("convolved_shape: width must be finite and > 0");
    }
    if (w <= kHermiteWidth) {
        auto rule_sum = [&](int n, bool mean_only) {
            const quad::HermiteRule& r = quad::gauss_hermite(n);
            double acc = 0.0;
            for (std::size_t i = 0; i < r.nodes.size(); ++i) {
                const double s = y + std::numbers::sqrt2 * w * r.nodes[i];
                const double k = mean_only ? shape_tail(shape, s * s).mean : shape_value(shape, s);
                acc += r.weights[i] * k;
            }
            return std::numbers::sqrt2 * w * acc;
        };
        // Far out, Gaussian smoothing removes the chirp (relative size
        // exp(-8 y^2 w^2) < 1e-11) and only the slowly varying mean remains.
        const bool mean_only = shape_oscillates(shape) && std::abs(y) * w > 1.8 && std::abs(y) - 22.0 * w > 3.0;
        quad::QuadResult res;
        res.value = rule_sum(128, mean_only);
        const double coarse = rule_sum(96, mean_only);
        res.err_estimate = std::abs(res.value - coarse) + 1e-14 * std::abs(res.value);
        if (mean_only) res.err_estimate += 1e-11 * std::abs(res.value);
        res.evaluations = 224;
        return res;
    }
    return shape_integral_1(shape, KernelKind::plain, Envelope{y, w}, [](double) { return 1.0; }, tol,
                            "slice normalization");
}

// One-dimensional slice or marginal expressed in a reduced variable r, with
// the physical coordinate xi = offset + scale * r.
//   product:      q(r) = K(r^2) exp(-(r - center)^2 / (2 width^2))
//   convolution:  q(r) = int K(s^2) exp(-(s - r)^2 / (2 width^2)) ds
struct SliceProfile {
    enum class Kind { product, convolution };
    Kind kind = Kind::product;
    Shape shape = Shape::sinc2;
    double width = 1.0;
    double center = 0.0;
    double offset = 0.0;
    double scale = 1.0;
};

class DensitySpec {
public:
    Plane plane() const { return plane_; }
    const Model& model() const { return model_; }
    const Form& form() const { return form_; }
    const Params& params() const { return params_; }
    const JointGeometry& geometry() const { return geom_; }
    // Normalization constant multiplying the unnormalized kernel.
    double norm() const { return norm_; }
    int arity() const { return form_.arity(); }

    // Only valid for one-dimensional forms.
    const SliceProfile& profile() const {
        if (form_.kind == Form::Kind::joint) throw std::logic_error("profile: joint densities have no 1-D profile");
        return profile_;
    }

    double eval(double x1, double x2) const {
        if (arity() != 2) throw std::invalid_argument("eval: this density takes one coordinate");
        return norm_ * sum_factor(x1 + x2) * shape_value(geom_.shape, (x1 - x2) / geom_.d_scale);
    }

    double eval(double x) const {
        if (arity() != 1) throw std::invalid_argument("eval: this density takes two coordinates");
        if (form_.kind == Form::Kind::conditional_at) {
            const double c = form_.fixed;
            return norm_ * sum_factor(x + c) * shape_value(geom_.shape, (x - c) / geom_.d_scale);
        }
        const double y = (x - profile_.offset) / profile_.scale;
        return norm_ * convolved_shape(geom_.shape, y, geom_.slice_width(), tol_).value;
    }

    double eval(std::span<const double> point) const {
        if (static_cast<int>(point.size()) != arity()) {
            throw std::invalid_argument("eval: expected " + std::to_string(arity()) + " coordinate(s), got " +
                                        std::to_string(point.size()));
        }
        return arity() == 2 ? eval(point[0], point[1]) : eval(point[0]);
    }

    const quad::QuadTolerance& tolerance() const { return tol_; }

private:
    friend DensitySpec make_density(Plane, const Model&, const Form&, const Params&, const quad::QuadTolerance&);

    double sum_factor(double u) const {
        const double z = u / geom_.u_width;
        return std::exp(-0.5 * z * z);
    }

    Plane plane_ = Plane::far_field;
    Model model_;
    Form form_;
    Params params_ = Params::dimensionless(1.0);
    JointGeometry geom_;
    SliceProfile profile_;
    double norm_ = 0.0;
    quad::QuadTolerance tol_;
};

// Normalization of the joint density: the Jacobian of (xi1, xi2) -> (u, d)
// is 1/2, so 1/N = (1/2) * int G du * ds * int K ds.
inline double joint_normalization(const JointGeometry& g, const quad::QuadTolerance& tol) {
    const double su = g.u_width;
    const quad::QuadResult gi =
        quad::integrate_1d([su](double u) { return std::exp(-0.5 * (u / su) * (u / su)); }, quad::Domain::full_line(),
                           tol, "sum-factor normalization");
    const double k0 = shape_moments(g.shape, tol).m0;
    return 2.0 / (gi.value * g.d_scale * k0);
}

inline DensitySpec make_density(Plane plane, const Model& model, const Form& form, const Params& params,
                                const quad::QuadTolerance& tol = {}) {
    tol.validate();
    DensitySpec d;
    d.plane_ = plane;
    d.model_ = model;
    d.form_ = form;
    d.params_ = params;
    d.tol_ = tol;
    d.geom_ = joint_geometry(plane, model, params);
    const double n_joint = joint_normalization(d.geom_, tol);
    const double ds = d.geom_.d_scale;
    const double w = d.geom_.slice_width();
    switch (form.kind) {
        case Form::Kind::joint: d.norm_ = n_joint; break;
        case Form::Kind::conditional_at: {
            const double sc = -2.0 * form.fixed / ds;
            const double z = convolved_shape(d.geom_.shape, sc, w, tol).value;
            if (!(z > 1e-300)) {
                throw DegenerateSliceError("conditional: the marginal vanishes at the requested slice value");
            }
            d.norm_ = 1.0 / (ds * z);
            d.profile_ = {SliceProfile::Kind::product, d.geom_.shape, w, sc, form.fixed, ds};
            break;
        }
        case Form::Kind::marginal:
            d.norm_ = n_joint * ds;
            d.profile_ = {SliceProfile::Kind::convolution, d.geom_.shape, w, 0.0, 0.0, -0.5 * ds};
            break;
    }
    return d;
}

inline void require_joint(const DensitySpec& spec, const char* who) {
    if (spec.form().kind != Form::Kind::joint) throw std::invalid_argument(std::string(who) + ": expects a joint density");
}

inline DensitySpec marginal_of(const DensitySpec& joint, const quad::QuadTolerance& tol = {}) {
    require_joint(joint, "marginal_of");
    return make_density(joint.plane(), joint.model(), Form::marginal(), joint.params(), tol);
}

inline DensitySpec conditional_of(const DensitySpec& joint, double fixed_value = 0.0,
                                  const quad::QuadTolerance& tol = {}) {
    require_joint(joint, "conditional_of");
    return make_density(joint.plane(), joint.model(), Form::conditional_at(fixed_value), joint.params(), tol);
}

// Variance of the difference coordinate xi1 - xi2 of a joint density.
inline double difference_variance(const DensitySpec& joint, const quad::QuadTolerance& tol = {}) {
    require_joint(joint, "difference_variance");
    const JointGeometry& g = joint.geometry();
    const ShapeMoments& m = shape_moments(g.shape, tol);
    return g.d_scale * g.d_scale * m.m2 / m.m0;
}

// Gaussian joint density with the same (zero) mean and covariance matrix.
// The sum factor is already Gaussian, so only the difference width is matched.
inline DensitySpec gaussian_equivalent(const DensitySpec& joint, const quad::QuadTolerance& tol = {}) {
    require_joint(joint, "gaussian_equivalent");
    const double p = joint.params().p();
    const double vd = difference_variance(joint, tol);
    const double alpha = joint.plane() == Plane::far_field ? 1.0 / (p * p * vd) : vd / (p * p);
    return make_density(joint.plane(), Model::gaussian(alpha), Form::joint(), joint.params(), tol);
}

}  // namespace spdcng
