#pragma once

// Brute-force checks on library densities shared by the unit tests and the
// acceptance binary: normalization integrals with chirp-aligned breakpoints
// and a tensor-grid entropy for product densities.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "spdcng/distributions.hpp"
#include "spdcng/entropy.hpp"
#include "spdcng/moments.hpp"
#include "spdcng/quadrature.hpp"
#include "test_support.hpp"

namespace checks {

using spdcng::DensitySpec;
using spdcng::SliceProfile;
using spdcng::quad::Domain;
using spdcng::quad::QuadTolerance;

inline QuadTolerance tolerance(double abs_tol, double rel_tol, int max_sub) {
    QuadTolerance t;
    t.abs_tol = abs_tol;
    t.rel_tol = rel_tol;
    t.max_subdivisions = max_sub;
    return t;
}

// Cycle boundaries of the chirp K(r^2) for |r| <= r_max, symmetric about 0.
inline std::vector<double> chirp_points(double r_max) {
    std::vector<double> out{0.0};
    for (long k = 1;; ++k) {
        const double r = std::sqrt(k * std::numbers::pi / 2.0);
        if (r > r_max) break;
        out.push_back(r);
        out.push_back(-r);
    }
    return out;
}

// Breakpoints for a one-dimensional density in its physical coordinate.
inline std::vector<double> physical_breakpoints(const DensitySpec& d) {
    const SliceProfile& pr = d.profile();
    std::vector<double> r;
    if (pr.kind == SliceProfile::Kind::product) {
        r = chirp_points(std::min(std::abs(pr.center) + 12.0 * pr.width, 200.0));
        for (int k = -12; k <= 12; ++k) r.push_back(pr.center + k * pr.width);
    } else {
        r = chirp_points(std::min(3.0 / pr.width + 5.0, 200.0));
        for (int k = -12; k <= 12; ++k) r.push_back(k * pr.width);
    }
    std::vector<double> x;
    x.reserve(r.size());
    for (double v : r) x.push_back(pr.offset + pr.scale * v);
    return x;
}

// int x^power p(x) dx over the real line.
inline double integrate_1d_density(const DensitySpec& d, double power = 0.0) {
    auto f = [&](double x) { return (power == 0.0 ? 1.0 : std::pow(x, power)) * d.eval(x); };
    return spdcng::quad::integrate_1d(f, Domain::full_line().with_breakpoints(physical_breakpoints(d)),
                                      tolerance(1e-11, 1e-10, 400000))
        .value;
}

// Rotated 2-D quadrature of a joint density; v = (x1 - x2)/sqrt(2), so the
// reduced difference variable is s = sqrt(2) v / ds.
template <class F>
double integrate_joint(const DensitySpec& d, F&& integrand, double tol = 1e-8) {
    const double ds = d.geometry().d_scale;
    std::vector<double> vb;
    for (double s : chirp_points(60.0)) vb.push_back(ds * s / std::numbers::sqrt2);
    return spdcng::quad::integrate_2d(integrand, Domain::full_line(), Domain::full_line().with_breakpoints(vb),
                                      tolerance(tol, tol, 40000), spdcng::quad::Coordinates::rotated)
        .value;
}

inline double integrate_joint_density(const DensitySpec& d) {
    return integrate_joint(d, [&](double x, double y) { return d.eval(x, y); });
}

// -int p log2 p of a joint density. The integrand has log kinks at every
// zero of p, so it is integrated to a looser tolerance.
inline double joint_entropy_bruteforce(const DensitySpec& d) {
    return integrate_joint(d, [&](double x, double y) {
        const double v = d.eval(x, y);
        return v > 1e-300 ? -v * std::log2(v) : 0.0;
    }, 1e-6);
}

struct Grid {
    std::vector<double> x;
    std::vector<double> w;
};

// Gauss-Legendre nodes on chirp-aligned panels in the reduced variable out
// to chirp_to, then geometric panels out to r_max, mapped to the physical
// axis.
inline Grid physical_grid(const SliceProfile& pr, double chirp_to, double r_max) {
    std::vector<oracle::ld> edges = oracle::chirp_edges(chirp_to);
    for (oracle::ld r = edges.back() * 1.15L; r < r_max; r *= 1.15L) edges.push_back(r);
    edges.push_back(r_max);
    std::vector<oracle::ld> full;
    for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
        if (*it > 0) full.push_back(-*it);
    }
    full.insert(full.end(), edges.begin(), edges.end());
    const oracle::LegendreRule& rule = oracle::legendre(10);
    Grid g;
    for (std::size_t i = 0; i + 1 < full.size(); ++i) {
        const double c = static_cast<double>((full[i] + full[i + 1]) / 2);
        const double h = static_cast<double>((full[i + 1] - full[i]) / 2);
        for (std::size_t k = 0; k < rule.x.size(); ++k) {
            g.x.push_back(pr.offset + pr.scale * (c + h * static_cast<double>(rule.x[k])));
            g.w.push_back(std::abs(pr.scale) * h * static_cast<double>(rule.w[k]));
        }
    }
    return g;
}

// Negentropy (bits) of the product density a(x) b(y), with the entropy from
// a tensor grid and the matched Gaussian from the factors' variances.
inline double product_negentropy(const DensitySpec& a, const DensitySpec& b) {
    const Grid ga = physical_grid(a.profile(), 12.0, 2000.0);
    const Grid gb = physical_grid(b.profile(), 12.0, 2000.0);
    std::vector<double> pa(ga.x.size()), pb(gb.x.size());
    for (std::size_t i = 0; i < pa.size(); ++i) pa[i] = a.eval(ga.x[i]);
    for (std::size_t j = 0; j < pb.size(); ++j) pb[j] = b.eval(gb.x[j]);
    double h = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        for (std::size_t j = 0; j < pb.size(); ++j) {
            const double v = pa[i] * pb[j];
            if (v > 1e-300) h -= ga.w[i] * gb.w[j] * v * std::log2(v);
        }
    }
    const double va = spdcng::slice_moments(a).var;
    const double vb = spdcng::slice_moments(b).var;
    const double hg = std::log2(2.0 * std::numbers::pi * std::numbers::e) + 0.5 * std::log2(va * vb);
    return hg - h;
}

}  // namespace checks
