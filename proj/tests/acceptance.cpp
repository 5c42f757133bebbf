// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Every tolerance below is the stated acceptance tolerance.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "density_checks.hpp"
#include "spdcng/cli.hpp"
#include "spdcng/spdcng.hpp"

using namespace spdcng;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    std::string misses;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            misses += " [MISS " + what + "]";
        }
    }
};

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

void criterion_1(Outcome& o) {
    const ShapeConstants& c = shape_constants();
    const double off_nf = near_field_entropy_offset(c);
    o.detail << "a1=" << fmt(c.a1) << " a2=" << fmt(c.a2) << " i_ff=" << fmt(c.i_ff) << " nf_offset=" << fmt(off_nf);
    o.check(within(c.a1, 1.4008, 0.001), "a1 = 1.4008 +- 0.001");
    o.check(within(c.a2, 0.5897, 0.001), "a2 = 0.5897 +- 0.001");
    o.check(within(c.i_ff, -0.364, 0.002), "i_ff = -0.364 +- 0.002");
    o.check(within(off_nf, 1.434, 0.002), "near-field entropy offset = 1.434 +- 0.002");
}

void criterion_2(Outcome& o) {
    double lo = 1e9, hi = -1e9;
    for (double p : {0.05, 0.3, 1.0, 2.0}) {
        const Params prm = Params::dimensionless(p);
        const double ff = model_negentropy(Plane::far_field, Model::spdc(), Form::joint(), prm).value;
        const double nf = model_negentropy(Plane::near_field, Model::spdc(), Form::joint(), prm).value;
        const double total = ff + nf;
        lo = std::min(lo, total);
        hi = std::max(hi, total);
        o.check(within(ff, 0.15, 0.01), "N_ff joint at P=" + fmt(p));
        o.check(within(nf, 0.22, 0.01), "N_nf joint at P=" + fmt(p));
        o.check(within(total, 0.37, 0.01), "ng_total at P=" + fmt(p));
        if (p == 1.0) o.detail << "N_ff=" << fmt(ff) << " N_nf=" << fmt(nf) << " ng_total=" << fmt(total);
    }
    o.detail << " spread=" << fmt(hi - lo, 3);
    o.check(hi - lo < 0.005, "spread < 0.005");
}

void criterion_3(Outcome& o) {
    const EprCrossings c = find_epr_crossings();
    o.detail << "P_low=" << fmt(c.p_low) << " P_high=" << fmt(c.p_high);
    o.check(within(c.p_low, 0.56, 0.02), "P_low = 0.56 +- 0.02");
    o.check(within(c.p_high, 2.58, 0.05), "P_high = 2.58 +- 0.05");
}

void criterion_4(Outcome& o) {
    double worst_bound = -1.0, worst_k = 0.0;
    for (double alpha : {0.45, 0.72, 1.0}) {
        for (int i = 0; i < 20; ++i) {
            const double p = 0.05 * std::pow(100.0, i / 19.0);
            const EprResult e = epr_product(Params::dimensionless(p), Model::gaussian(alpha));
            const double k = schmidt_number(1.0, std::sqrt(alpha) * p);
            worst_bound = std::max(worst_bound, e.product);
            worst_k = std::max(worst_k, std::abs(e.product - 1.0 / (4.0 * k)));
        }
    }
    o.detail << "max product=" << fmt(worst_bound, 12) << " max |product - 1/(4K)|=" << fmt(worst_k, 3);
    o.check(worst_bound <= 0.25 + 1e-9, "product <= 0.25 + 1e-9");
    o.check(worst_k <= 1e-9, "product = 1/(4K) within 1e-9");
}

std::array<double, 4> eigen_moduli(const TwoModeCov& v) {
    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) m(i, j) = v.m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
    omega(0, 1) = omega(2, 3) = 1.0;
    omega(1, 0) = omega(3, 2) = -1.0;
    const Eigen::Matrix4cd a = std::complex<double>(0.0, 1.0) * (omega * m).cast<std::complex<double>>();
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(a);
    std::array<double, 4> out{};
    for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(i)] = std::abs(es.eigenvalues()(i));
    std::sort(out.begin(), out.end());
    return out;
}

void criterion_5(Outcome& o) {
    const SymplecticSpectrum s = symplectic_spectrum(two_mode_cov(Params::dimensionless(1.0)));
    const double mu = purity(s);
    const double db_lo = delta_b(Params::dimensionless(0.1));
    const double db_hi = delta_b(Params::dimensionless(3.0));
    double worst = 0.0;
    for (double p : {0.1, 1.0, 3.0}) {
        const TwoModeCov v = two_mode_cov(Params::dimensionless(p));
        const SymplecticSpectrum a = symplectic_spectrum(v);
        const std::array<double, 4> e = eigen_moduli(v);
        worst = std::max({worst, std::abs(e[0] - a.nu_plus), std::abs(e[1] - a.nu_plus), std::abs(e[2] - a.nu_minus),
                          std::abs(e[3] - a.nu_minus)});
    }
    o.detail << "mu=" << fmt(mu) << " delta_B=" << fmt(db_lo) << " nats |dB(0.1)-dB(3)|=" << fmt(std::abs(db_lo - db_hi), 3)
             << " spectrum gap=" << fmt(worst, 3);
    o.check(within(mu, 0.44, 0.01), "mu = 0.44 +- 0.01");
    o.check(within(db_lo, 1.08, 0.01), "delta_B = 1.08 +- 0.01 nats");
    o.check(std::abs(db_lo - db_hi) <= 1e-6, "delta_B identical at P=0.1 and P=3 within 1e-6");
    o.check(worst <= 1e-9, "numerical and analytic spectra within 1e-9");
}

void criterion_6(Outcome& o) {
    const std::array<std::pair<double, double>, 3> targets{{{0.01, 0.154}, {3.0, 0.175}, {12.0, 0.224}}};
    for (auto [p, target] : targets) {
        const NgReport r = ng_report(Params::dimensionless(p));
        o.detail << "ng_marg(" << fmt(p) << ")=" << fmt(r.ng_marg) << ' ';
        o.check(within(r.ng_marg, target, 0.005), "ng_marg(" + fmt(p) + ") = " + fmt(target) + " +- 0.005");
    }
}

void criterion_7(Outcome& o) {
    const NgReport small = ng_report(Params::dimensionless(0.01));
    const NgReport mid = ng_report(Params::dimensionless(2.0));
    o.detail << "residual(0.01)=" << fmt(small.decomposition_residual)
             << " residual(2)=" << fmt(mid.decomposition_residual);
    o.check(std::abs(small.decomposition_residual) < 0.01, "|residual| < 0.01 at P=0.01");
    o.check(std::abs(mid.decomposition_residual) > 0.05, "|residual| > 0.05 at P=2");
}

void criterion_8(Outcome& o) {
    double worst = 0.0;
    for (Plane plane : {Plane::far_field, Plane::near_field}) {
        for (double p : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            const Params prm = Params::dimensionless(p);
            const Cov2 num = covariance_numeric(make_density(plane, Model::spdc(), Form::joint(), prm));
            const Cov2 cf = covariance_closed(plane, prm);
            worst = std::max({worst, std::abs(num.var1 - cf.var1), std::abs(num.var2 - cf.var2),
                              std::abs(num.cov - cf.cov)});
        }
    }
    const double ratio = shape_constants().sinc_moment_ratio;
    o.detail << "max |Cov2 numeric - closed|=" << fmt(worst, 3) << " sinc ratio=" << fmt(ratio, 10);
    o.check(worst <= 1e-5, "Cov2 within 1e-5");
    o.check(within(ratio, 0.75, 1e-6), "sinc second-moment ratio = 3/4 +- 1e-6");
}

void criterion_9(Outcome& o) {
    // Normalization.
    double worst_norm = 0.0;
    for (Plane plane : {Plane::far_field, Plane::near_field}) {
        for (const Model& model : {Model::spdc(), Model::gaussian(0.72)}) {
            for (double p : {0.3, 2.0}) {
                const Params prm = Params::dimensionless(p, 1.5);
                worst_norm = std::max(worst_norm, std::abs(checks::integrate_joint_density(
                                                               make_density(plane, model, Form::joint(), prm)) - 1.0));
                for (const Form& f : {Form::conditional_at(0.0), Form::conditional_at(0.6), Form::marginal()}) {
                    worst_norm = std::max(worst_norm,
                                          std::abs(checks::integrate_1d_density(make_density(plane, model, f, prm)) - 1.0));
                }
            }
        }
    }
    o.check(worst_norm <= 1e-6, "normalization within 1e-6");

    // Joint = conditional x marginal, and exchange symmetry.
    double worst_factor = 0.0;
    bool symmetric = true;
    for (Plane plane : {Plane::far_field, Plane::near_field}) {
        for (double p : {0.3, 1.0, 3.0}) {
            const DensitySpec joint = make_density(plane, Model::spdc(), Form::joint(), Params::dimensionless(p, 1.4));
            const DensitySpec marg = marginal_of(joint);
            for (double v : {-1.3, -0.4, 0.0, 0.6, 1.7}) {
                const DensitySpec cond = conditional_of(joint, v);
                for (double x : {-1.1, -0.2, 0.0, 0.5, 2.0}) {
                    const double rhs = joint.eval(x, v);
                    worst_factor = std::max(worst_factor, std::abs(cond.eval(x) * marg.eval(v) - rhs) / rhs);
                    symmetric = symmetric && joint.eval(x, v) == joint.eval(v, x);
                }
            }
        }
    }
    o.check(worst_factor <= 1e-9, "joint = conditional x marginal within 1e-9 relative");
    o.check(symmetric, "exchange symmetry");

    // Non-negativity.
    double min_n = 1e9;
    for (Plane plane : {Plane::far_field, Plane::near_field}) {
        for (double p : {0.02, 0.3, 1.0, 5.0}) {
            for (const Form& f : {Form::joint(), Form::conditional_at(0.0), Form::marginal()}) {
                min_n = std::min(min_n, model_negentropy(plane, Model::spdc(), f, Params::dimensionless(p, 1.3)).value);
            }
        }
    }
    o.check(min_n >= -1e-6, "negentropy non-negative");

    // Scale invariance: near-field slices depend only on sigma/P.
    double worst_scale = 0.0;
    for (const Form& f : {Form::conditional_at(0.0), Form::marginal()}) {
        const double n0 = model_negentropy(Plane::near_field, Model::spdc(), f, Params::dimensionless(0.2, 10.0)).value;
        for (auto [p, sigma] : {std::pair{0.02, 1.0}, std::pair{0.6, 30.0}, std::pair{2.0, 100.0}}) {
            const double n = model_negentropy(Plane::near_field, Model::spdc(), f, Params::dimensionless(p, sigma)).value;
            worst_scale = std::max(worst_scale, std::abs(n - n0));
        }
    }
    o.check(worst_scale <= 1e-6, "scale invariance within 1e-6");

    // Gaussian-model densities.
    double worst_gauss = 0.0;
    for (Plane plane : {Plane::far_field, Plane::near_field}) {
        for (double alpha : {0.45, 0.72, 1.0}) {
            for (double p : {0.05, 1.0, 3.0}) {
                for (const Form& f : {Form::joint(), Form::conditional_at(0.0), Form::conditional_at(0.8), Form::marginal()}) {
                    worst_gauss = std::max(
                        worst_gauss,
                        std::abs(model_negentropy(plane, Model::gaussian(alpha), f, Params::dimensionless(p, 1.7)).value));
                }
            }
        }
    }
    o.check(worst_gauss <= 1e-5, "Gaussian-model negentropy within 1e-5 of zero");

    // Additivity on a product density.
    const Params one = Params::dimensionless(1.0);
    const DensitySpec a = make_density(Plane::far_field, Model::spdc(), Form::marginal(), one);
    const DensitySpec b = make_density(Plane::near_field, Model::spdc(), Form::conditional_at(0.0), one);
    const double add_gap = std::abs(checks::product_negentropy(a, b) - negentropy(a).value - negentropy(b).value);
    o.check(add_gap <= 1e-4, "additivity within 1e-4");

    // ng_marg < ng_total on the default sweep grid (60 log points on [0.01, 3]).
    cli::SweepConfig grid;
    grid.quantities = {cli::Quantity::ng_total, cli::Quantity::ng_marg};
    const cli::SweepTable t = cli::run_sweep(grid, cli::resolve_threads(std::nullopt));
    bool ordered = t.failures() == 0;
    for (const cli::SweepRow& r : t.rows) ordered = ordered && r.values[2] < r.values[0];
    o.check(ordered, "ng_marg < ng_total on the full grid");

    o.detail << "norm=" << fmt(worst_norm, 3) << " factor=" << fmt(worst_factor, 3) << " min N=" << fmt(min_n, 3)
             << " scale=" << fmt(worst_scale, 3) << " gauss=" << fmt(worst_gauss, 3) << " additivity=" << fmt(add_gap, 3)
             << " grid rows=" << t.rows.size();
}

void criterion_10(Outcome& o) {
    const double r = shape_constants().a2_over_a1();
    double worst_formula = 0.0, worst_scaling = 0.0;
    for (double p : {0.1, 0.37, 1.0, 2.2}) {
        const double m1 = mancini_product(Params::dimensionless(p)).product;
        const double m2 = mancini_product(Params::dimensionless(2.0 * p)).product;
        worst_formula = std::max(worst_formula, std::abs(m1 - 4.0 * r * p * p));
        worst_scaling = std::max(worst_scaling, std::abs(m2 / m1 - 4.0));
    }
    const double pb = mancini_boundary();
    o.detail << "boundary P=" << fmt(pb) << " scaling gap=" << fmt(worst_scaling, 3);
    o.check(worst_formula <= 1e-9, "product = 4 (A2/A1) P^2");
    o.check(worst_scaling <= 1e-9, "quadratic scaling within 1e-9");
    o.check(within(pb, 0.771, 0.001), "boundary P = 0.771 +- 0.001");
}

std::string capture(const std::string& cmd, int& status) {
    std::string out;
    FILE* f = popen(cmd.c_str(), "r");
    if (!f) {
        status = -1;
        return out;
    }
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) out.append(buf.data(), n);
    status = pclose(f);
    return out;
}

void criterion_11(Outcome& o) {
    const std::string base = std::string("\"") + SPDC_NG_EXE +
                             "\" sweep -q epr -q mancini -q ng_total -q ng_marg -q delta_b --alpha 0.45 --alpha 0.72 "
                             "--p-min 0.05 --p-max 3 --steps 8 --log";
    int s1 = 0, s2 = 0, s3 = 0;
    const std::string a = capture(base + " --threads 1", s1);
    const std::string b = capture(base + " --threads 1", s2);
    const std::string c = capture(base + " --threads 4", s3);
    o.detail << "bytes=" << a.size() << " exit=" << s1 << "," << s2 << "," << s3;
    o.check(s1 == 0 && s2 == 0 && s3 == 0, "sweep exits with 0");
    o.check(!a.empty() && a == b, "repeated runs byte-identical");
    o.check(a == c, "thread count does not change output");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"constants", criterion_1},
        {"joint negentropies", criterion_2},
        {"EPR crossings", criterion_3},
        {"Gaussian EPR bound", criterion_4},
        {"delta_B pipeline", criterion_5},
        {"marginal limits", criterion_6},
        {"decomposition", criterion_7},
        {"closed form vs quadrature", criterion_8},
        {"property suite", criterion_9},
        {"Mancini", criterion_10},
        {"determinism", criterion_11},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1) << " (" << criteria[i].first << "): "
                  << o.detail.str() << o.misses << "  [" << fmt(secs, 3) << " s]" << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
