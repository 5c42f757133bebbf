#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "spdcng/distributions.hpp"
#include "spdcng/moments.hpp"
#include "spdcng/shape_constants.hpp"
#include "test_support.hpp"

using namespace spdcng;
using oracle::ld;

namespace {

// Origin-slice conditional variance by brute force:
//   p(xi) ~ exp(-xi^2 / (2 su^2)) K((xi / ds)^2),
// integrated in s = xi / ds on chirp-aligned panels out to 14 su.
template <class K>
double conditional_variance_oracle(K&& kernel, double su, double ds) {
    const ld s_max = 14.0L * su / ds;
    std::vector<ld> edges = oracle::chirp_edges(s_max);
    if (edges.size() < 200) edges = oracle::uniform_edges(0, s_max, 400);
    const ld w = su / ds;
    auto f0 = [&](ld s) { return std::exp(-s * s / (2 * w * w)) * kernel(s * s); };
    auto f2 = [&](ld s) { return s * s * f0(s); };
    const ld z = oracle::composite(f0, edges, 10);
    const ld m2 = oracle::composite(f2, edges, 10);
    return static_cast<double>(ds * ds * m2 / z);
}

double far_oracle(double p) {
    return conditional_variance_oracle([](ld t) { return std::pow(oracle::sinc_l(t), 2); }, 1.0, 2.0 / p);
}

double near_oracle(double p, double sigma) {
    return conditional_variance_oracle([](ld t) { return std::pow(oracle::sint(t), 2); }, sigma, 2.0 * p);
}

}  // namespace

TEST(Covariance, QuadratureMatchesClosedForms) {
    for (Plane plane : {Plane::far_field, Plane::near_field}) {
        for (double p : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            for (double sigma : {1.0, 2.0}) {
                const Params prm = Params::dimensionless(p, sigma);
                const Cov2 num = covariance_numeric(make_density(plane, Model::spdc(), Form::joint(), prm));
                const Cov2 cf = covariance_closed(plane, prm);
                EXPECT_NEAR(num.var1, cf.var1, 1e-5) << plane_name(plane) << " P=" << p;
                EXPECT_NEAR(num.var2, cf.var2, 1e-5);
                EXPECT_NEAR(num.cov, cf.cov, 1e-5);
                EXPECT_GT(num.var1, 0.0);
                EXPECT_GE(num.det(), 0.0);
            }
        }
    }
}

TEST(Covariance, ClosedFormExamples) {
    const Cov2 ff = covariance_closed(Plane::far_field, Params::dimensionless(2.0));
    EXPECT_DOUBLE_EQ(ff.var1, 0.4375);
    EXPECT_DOUBLE_EQ(ff.cov, 0.0625);
    const double r = shape_constants().a2_over_a1();
    const Cov2 nf = covariance_closed(Plane::near_field, Params::dimensionless(1.0));
    EXPECT_NEAR(nf.var1, 0.25 * (1.0 + 4.0 * r), 1e-15);
    EXPECT_NEAR(nf.cov, 0.25 * (1.0 - 4.0 * r), 1e-15);
    // Far field is independent of sigma.
    const Cov2 ff2 = covariance_closed(Plane::far_field, Params::dimensionless(2.0, 3.0));
    EXPECT_DOUBLE_EQ(ff2.var1, ff.var1);
}

TEST(Covariance, JointMeansVanish) {
    for (Plane plane : {Plane::far_field, Plane::near_field}) {
        const JointMoments jm =
            joint_moments(make_density(plane, Model::spdc(), Form::joint(), Params::dimensionless(0.7, 1.2)));
        EXPECT_NEAR(jm.mean1, 0.0, 1e-9);
        EXPECT_NEAR(jm.mean2, 0.0, 1e-9);
        EXPECT_LT(jm.err.var1, 1e-6);
    }
}

TEST(ConditionalVariance, AgreesWithBruteForce) {
    for (double p : {0.2, 0.7, 1.5, 4.0}) {
        const ConditionalVariances cv = conditional_variances(Params::dimensionless(p, 1.0));
        EXPECT_NEAR(cv.var_q_cond, far_oracle(p), 1e-7 * far_oracle(p)) << "P=" << p;
        EXPECT_NEAR(cv.var_x_cond, near_oracle(p, 1.0), 1e-7 * near_oracle(p, 1.0)) << "P=" << p;
    }
    const ConditionalVariances cv = conditional_variances(Params::dimensionless(0.6, 2.5));
    EXPECT_NEAR(cv.var_x_cond, near_oracle(0.6, 2.5), 1e-7 * near_oracle(0.6, 2.5));
}

TEST(ConditionalVariance, NormalizedUnits) {
    const double p = 0.8;
    const ConditionalVariances cv = conditional_variances(Params::dimensionless(p));
    EXPECT_DOUBLE_EQ(cv.var_q_norm, cv.var_q_cond * p * p);
    EXPECT_DOUBLE_EQ(cv.var_x_norm, cv.var_x_cond / (p * p));
}

TEST(ConditionalVariance, LimitingRegimes) {
    // Narrow phase matching: the far-field slice is the unit Gaussian, the
    // near-field one is the sint^2 shape with variance 4 (a2/a1) P^2.
    EXPECT_NEAR(conditional_variances(Params::dimensionless(0.05)).var_q_cond, 1.0, 1e-3);
    const double r = shape_constants().a2_over_a1();
    const double v_small = conditional_variances(Params::dimensionless(0.01)).var_x_norm;
    const double v_tiny = conditional_variances(Params::dimensionless(0.001)).var_x_norm;
    EXPECT_LT(std::abs(v_small / (4.0 * r) - 1.0), 0.03);
    EXPECT_LT(std::abs(v_tiny / (4.0 * r) - 1.0), 0.005);
    EXPECT_LT(std::abs(v_tiny - 4.0 * r), std::abs(v_small - 4.0 * r));

    // Broad phase matching: the far-field slice tends to the sinc^2 shape
    // (normalized variance 4 * 3/4 = 3), the near-field one to the pump.
    const double q10 = conditional_variances(Params::dimensionless(10.0)).var_q_norm;
    const double q50 = conditional_variances(Params::dimensionless(50.0)).var_q_norm;
    EXPECT_LT(std::abs(q50 - 3.0), std::abs(q10 - 3.0));
    EXPECT_LT(std::abs(q50 - 3.0), 0.1);
    EXPECT_NEAR(conditional_variances(Params::dimensionless(20.0, 1.5)).var_x_cond, 2.25, 0.02);
}

TEST(ConditionalVariance, GaussianModelClosedForm) {
    const ConditionalVariances g = gaussian_conditional_variances(1.0, Params::dimensionless(1.0));
    EXPECT_DOUBLE_EQ(g.var_q_cond, 0.5);
    EXPECT_DOUBLE_EQ(g.var_x_cond, 0.5);
    // Against quadrature of the model's own conditional slices.
    for (double alpha : {0.45, 0.72, 1.0}) {
        for (double p : {0.3, 1.7}) {
            const Params prm = Params::dimensionless(p, 1.6);
            const ConditionalVariances cf = gaussian_conditional_variances(alpha, prm);
            const Model m = Model::gaussian(alpha);
            const double vq = slice_moments(make_density(Plane::far_field, m, Form::conditional_at(0.0), prm)).var;
            const double vx = slice_moments(make_density(Plane::near_field, m, Form::conditional_at(0.0), prm)).var;
            EXPECT_NEAR(vq, cf.var_q_cond, 1e-9);
            EXPECT_NEAR(vx, cf.var_x_cond, 1e-9);
        }
    }
    EXPECT_THROW(gaussian_conditional_variances(0.0, Params::dimensionless(1.0)), std::domain_error);
}

TEST(SliceMoments, MarginalVarianceMatchesTheJoint) {
    for (Plane plane : {Plane::far_field, Plane::near_field}) {
        const Params prm = Params::dimensionless(0.9, 1.3);
        const DensitySpec joint = make_density(plane, Model::spdc(), Form::joint(), prm);
        const SliceMoments sm = slice_moments(marginal_of(joint));
        EXPECT_NEAR(sm.mean, 0.0, 1e-12);
        EXPECT_NEAR(sm.var, covariance_closed(plane, prm).var1, 1e-7);
    }
}

TEST(Schmidt, Examples) {
    EXPECT_DOUBLE_EQ(schmidt_number(2.0, 1.0), 25.0 / 16.0);
    EXPECT_DOUBLE_EQ(schmidt_number(1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(schmidt_number(3.0, 0.5), schmidt_number(0.5, 3.0));
    EXPECT_THROW(schmidt_number(0.0, 1.0), std::domain_error);
}

TEST(Epr, GaussianProductIsTheInverseSchmidtNumber) {
    for (double alpha : {0.45, 0.72, 1.0}) {
        for (int i = 0; i < 20; ++i) {
            const double p = 0.05 * std::pow(100.0, i / 19.0);
            const EprResult e = epr_product(Params::dimensionless(p), Model::gaussian(alpha));
            const double k = schmidt_number(1.0, std::sqrt(alpha) * p);
            EXPECT_LE(e.product, 0.25 + 1e-9);
            EXPECT_NEAR(e.product, 1.0 / (4.0 * k), 1e-9) << "alpha=" << alpha << " P=" << p;
            EXPECT_FALSE(e.nongaussian_witness_flag && e.product <= 0.25);
        }
    }
}

TEST(Epr, SpdcFlags) {
    const EprResult small = epr_product(Params::dimensionless(0.1));
    EXPECT_LT(small.product, 0.25);
    EXPECT_TRUE(small.entangled_flag);
    EXPECT_FALSE(small.nongaussian_witness_flag);
    const EprResult mid = epr_product(Params::dimensionless(1.0));
    EXPECT_GT(mid.product, 0.25);
    EXPECT_TRUE(mid.nongaussian_witness_flag);
    EXPECT_FALSE(mid.entangled_flag);
    EXPECT_EQ(make_epr(0.5, 0.5).product, 0.25);
    EXPECT_FALSE(make_epr(0.5, 0.5).entangled_flag);
    EXPECT_FALSE(make_epr(0.5, 0.5).nongaussian_witness_flag);
}

TEST(Epr, CrossingsBracketTheWitnessRegion) {
    const EprCrossings c = find_epr_crossings();
    ASSERT_LT(c.p_low, c.p_high);
    EXPECT_NEAR(epr_product(Params::dimensionless(c.p_low)).product, 0.25, 1e-6);
    EXPECT_NEAR(epr_product(Params::dimensionless(c.p_high)).product, 0.25, 1e-6);
    EXPECT_NEAR(c.p_low, 0.56, 0.02);
    EXPECT_NEAR(c.p_high, 2.58, 0.05);
    EXPECT_LT(epr_product(Params::dimensionless(0.9 * c.p_low)).product, 0.25);
    EXPECT_GT(epr_product(Params::dimensionless(1.1 * c.p_low)).product, 0.25);
    EXPECT_THROW(detail::bisect_then_newton([](double x) { return x * x + 1.0; }, 0.0, 1.0), BracketError);
}

TEST(Mancini, QuadraticScalingAndValues) {
    const double r = shape_constants().a2_over_a1();
    for (double p : {0.1, 0.37, 1.0, 2.2}) {
        const ManciniResult a = mancini_product(Params::dimensionless(p));
        const ManciniResult b = mancini_product(Params::dimensionless(2.0 * p));
        EXPECT_NEAR(b.product / a.product, 4.0, 1e-9);
        EXPECT_NEAR(a.product, 4.0 * r * p * p, 1e-12);
        EXPECT_EQ(a.sum_momentum_var, 1.0);
    }
    EXPECT_NEAR(mancini_product(Params::dimensionless(1.0)).product, 1.68746, 1e-5);
    EXPECT_NEAR(mancini_product(Params::dimensionless(0.5)).product, 1.68746 / 4.0, 1e-5);
    EXPECT_TRUE(mancini_product(Params::dimensionless(0.5)).violated);
    EXPECT_FALSE(mancini_product(Params::dimensionless(1.0)).violated);
    EXPECT_NEAR(mancini_product(Params::dimensionless(1.0), Model::gaussian(0.72)).product, 0.72, 1e-15);
}

TEST(Mancini, BoundaryIsTheUnitCrossing) {
    const double pb = mancini_boundary();
    EXPECT_NEAR(mancini_product(Params::dimensionless(pb)).product, 1.0, 1e-12);
    // Quadrature of the near-field joint gives the same difference variance.
    const DensitySpec nf = make_density(Plane::near_field, Model::spdc(), Form::joint(), Params::dimensionless(pb));
    const Cov2 c = covariance_numeric(nf);
    EXPECT_NEAR(2.0 * (c.var1 - c.cov), 1.0, 1e-6);
}
