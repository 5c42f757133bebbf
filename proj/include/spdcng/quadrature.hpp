#pragma once

// Adaptive Gauss-Kronrod integration over finite and unbounded intervals.
//
// The integrand may return a double or a std::array<double, N>; vector
// integrands share one panel layout, and refinement continues until every
// controlled component meets its own tolerance.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace spdcng::quad {

struct QuadTolerance {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_subdivisions = 2000;
    // Envelope level below which oscillatory or Gaussian tails are dropped.
    double tail_cutoff = 1e-12;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || !(tail_cutoff > 0.0) ||
            !std::isfinite(abs_tol) || !std::isfinite(rel_tol) || !std::isfinite(tail_cutoff)) {
            throw std::invalid_argument("QuadTolerance: tolerances must be finite and > 0");
        }
        if (max_subdivisions < 10) {
            throw std::invalid_argument("QuadTolerance: max_subdivisions must be >= 10");
        }
    }

    double allowed(double magnitude) const { return std::max(abs_tol, rel_tol * std::abs(magnitude)); }

    friend bool operator==(const QuadTolerance&, const QuadTolerance&) = default;
    friend auto operator<=>(const QuadTolerance&, const QuadTolerance&) = default;
};

template <class V>
struct BasicResult {
    V value{};
    V err_estimate{};
    long evaluations = 0;
    int subdivisions = 0;
};
using QuadResult = BasicResult<double>;

namespace detail {

inline std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(std::string label, double partial, double estimate, const std::string& why)
        : std::runtime_error("quadrature failed for '" + label + "': " + why +
                             " (partial value " + detail::short_number(partial) + ", error estimate " +
                             detail::short_number(estimate) + ")"),
          label_(std::move(label)),
          partial_(partial),
          estimate_(estimate) {}

    const std::string& label() const noexcept { return label_; }
    double partial_value() const noexcept { return partial_; }
    double partial_estimate() const noexcept { return estimate_; }

private:
    std::string label_;
    double partial_;
    double estimate_;
};

class Domain {
public:
    enum class Kind { finite, half_line, full_line };
    // Direction of a half line: [a, +inf) or (-inf, a].
    enum class Side { upper, lower };

    static Domain finite(double a, double b) {
        if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
            throw std::invalid_argument("Domain::finite requires finite a < b");
        }
        Domain d;
        d.kind_ = Kind::finite;
        d.a_ = a;
        d.b_ = b;
        return d;
    }
    static Domain half_line(double a, Side side = Side::upper) {
        if (!std::isfinite(a)) throw std::invalid_argument("Domain::half_line requires a finite endpoint");
        Domain d;
        d.kind_ = Kind::half_line;
        d.a_ = a;
        d.side_ = side;
        return d;
    }
    static Domain full_line() {
        Domain d;
        d.kind_ = Kind::full_line;
        return d;
    }

    // Interior points where the integrand has kinks, peaks or cycle
    // boundaries. Points outside the domain are ignored.
    Domain with_breakpoints(std::vector<double> pts) const {
        Domain d = *this;
        d.breaks_ = std::move(pts);
        return d;
    }

    Kind kind() const noexcept { return kind_; }
    Side side() const noexcept { return side_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    const std::vector<double>& breakpoints() const noexcept { return breaks_; }

    bool contains_interior(double x) const {
        switch (kind_) {
            case Kind::finite: return x > a_ && x < b_;
            case Kind::half_line: return side_ == Side::upper ? x > a_ : x < a_;
            case Kind::full_line: return std::isfinite(x);
        }
        return false;
    }

private:
    Kind kind_ = Kind::finite;
    Side side_ = Side::upper;
    double a_ = 0.0;
    double b_ = 1.0;
    std::vector<double> breaks_;
};

namespace detail {

// Componentwise helpers so that one adaptive driver serves scalar and
// vector-valued integrands.
inline double vzero(double) { return 0.0; }
template <std::size_t N>
std::array<double, N> vzero(const std::array<double, N>&) { return {}; }

inline std::size_t vsize(double) { return 1; }
template <std::size_t N>
std::size_t vsize(const std::array<double, N>&) { return N; }

inline double& vref(double& v, std::size_t) { return v; }
inline double vget(const double& v, std::size_t) { return v; }
template <std::size_t N>
double& vref(std::array<double, N>& v, std::size_t i) { return v[i]; }
template <std::size_t N>
double vget(const std::array<double, N>& v, std::size_t i) { return v[i]; }

template <class V>
bool all_finite(const V& v) {
    for (std::size_t i = 0; i < vsize(v); ++i) {
        if (!std::isfinite(vget(v, i))) return false;
    }
    return true;
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208976180593, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <class V>
struct Panel {
    double a = 0.0;
    double b = 0.0;
    V value{};
    V err{};
    bool splittable = true;
};

// One Gauss-Kronrod application with the QUADPACK error heuristic applied to
// each component.
template <class V, class F>
Panel<V> gk21(F& f, double a, double b, const char* label) {
    const double centr = 0.5 * (a + b);
    const double hlgth = 0.5 * (b - a);
    V fc = f(centr);
    if (!all_finite(fc)) throw QuadratureError(label, 0.0, 0.0, "non-finite integrand value");
    std::array<V, 10> f1;
    std::array<V, 10> f2;
    for (int j = 0; j < 10; ++j) {
        const double dx = hlgth * kXgk[static_cast<std::size_t>(j)];
        f1[static_cast<std::size_t>(j)] = f(centr - dx);
        f2[static_cast<std::size_t>(j)] = f(centr + dx);
        if (!all_finite(f1[static_cast<std::size_t>(j)]) || !all_finite(f2[static_cast<std::size_t>(j)])) {
            throw QuadratureError(label, 0.0, 0.0, "non-finite integrand value");
        }
    }
    Panel<V> out;
    out.a = a;
    out.b = b;
    out.value = vzero(fc);
    out.err = vzero(fc);
    constexpr double epmach = std::numeric_limits<double>::epsilon();
    constexpr double uflow = std::numeric_limits<double>::min();
    for (std::size_t c = 0; c < vsize(fc); ++c) {
        const double fcen = vget(fc, c);
        double resk = kWgk[10] * fcen;
        double resabs = std::abs(resk);
        double resg = 0.0;
        for (std::size_t j = 0; j < 10; ++j) {
            const double v1 = vget(f1[j], c);
            const double v2 = vget(f2[j], c);
            resk += kWgk[j] * (v1 + v2);
            resabs += kWgk[j] * (std::abs(v1) + std::abs(v2));
            if (j % 2 == 1) resg += kWg[j / 2] * (v1 + v2);
        }
        const double reskh = 0.5 * resk;
        double resasc = kWgk[10] * std::abs(fcen - reskh);
        for (std::size_t j = 0; j < 10; ++j) {
            resasc += kWgk[j] * (std::abs(vget(f1[j], c) - reskh) + std::abs(vget(f2[j], c) - reskh));
        }
        const double result = resk * hlgth;
        resabs *= std::abs(hlgth);
        resasc *= std::abs(hlgth);
        double abserr = std::abs((resk - resg) * hlgth);
        if (resasc != 0.0 && abserr != 0.0) {
            abserr = resasc * std::min(1.0, std::pow(200.0 * abserr / resasc, 1.5));
        }
        if (resabs > uflow / (50.0 * epmach)) abserr = std::max(epmach * 50.0 * resabs, abserr);
        vref(out.value, c) = result;
        vref(out.err, c) = abserr;
    }
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    out.splittable = (b - a) > 64.0 * epmach * scale;
    return out;
}

// Maps used for unbounded kinds. Each returns x(t) and dx/dt.
struct FullLineMap {
    static double x(double t) { return t / (1.0 - t * t); }
    static double dx(double t) {
        const double d = 1.0 - t * t;
        return (1.0 + t * t) / (d * d);
    }
    static double inverse(double x) {
        if (x == 0.0) return 0.0;
        return (std::sqrt(1.0 + 4.0 * x * x) - 1.0) / (2.0 * x);
    }
};
struct HalfLineMap {
    // x = a + s*t/(1-t), t in [0,1); s = +1 for [a,inf), -1 for (-inf,a].
    static double x(double a, double s, double t) { return a + s * t / (1.0 - t); }
    static double dx(double t) {
        const double d = 1.0 - t;
        return 1.0 / (d * d);
    }
    static double inverse(double a, double s, double x) {
        const double r = s * (x - a);
        return r / (1.0 + r);
    }
};

}  // namespace detail

// Error control for vector integrands: by default every component must meet
// its tolerance. `controlled` limits the check to the leading components so
// that auxiliary components (for instance, accumulated inner error bounds)
// are integrated on the same panels without driving refinement.
struct Control {
    std::size_t controlled = std::numeric_limits<std::size_t>::max();
};

// Globally adaptive bisection over an initial panel set.
//
// max_subdivisions counts bisections performed beyond the initial panels; the
// initial layout itself is part of the problem description.
template <class V, class F>
BasicResult<V> integrate_panels(F&& f, const std::vector<double>& edges, const QuadTolerance& tol,
                                const char* label = "integrand", Control ctl = {}) {
    tol.validate();
    if (edges.size() < 2) throw std::invalid_argument("integrate_panels: need at least two edges");
    using P = detail::Panel<V>;
    std::vector<P> panels;
    panels.reserve(edges.size() - 1 + 2 * static_cast<std::size_t>(tol.max_subdivisions));
    long evals = 0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (!(edges[i] < edges[i + 1])) continue;
        panels.push_back(detail::gk21<V>(f, edges[i], edges[i + 1], label));
        evals += 21;
    }
    if (panels.empty()) throw std::invalid_argument("integrate_panels: empty interval");

    const std::size_t ncomp = detail::vsize(panels.front().value);
    const std::size_t nctl = std::min(ctl.controlled, ncomp);

    auto totals = [&](V& val, V& err) {
        val = detail::vzero(panels.front().value);
        err = val;
        // Sorted-by-position summation keeps results reproducible.
        for (const P& p : panels) {
            for (std::size_t c = 0; c < ncomp; ++c) {
                detail::vref(val, c) += detail::vget(p.value, c);
                detail::vref(err, c) += detail::vget(p.err, c);
            }
        }
    };
    auto converged = [&](const V& val, const V& err) {
        for (std::size_t c = 0; c < nctl; ++c) {
            if (detail::vget(err, c) > tol.allowed(detail::vget(val, c))) return false;
        }
        return true;
    };
    // Priority of a panel: its worst error relative to the global allowance.
    auto priority = [&](const P& p, const V& val) {
        if (!p.splittable) return -1.0;
        double k = 0.0;
        for (std::size_t c = 0; c < nctl; ++c) {
            k = std::max(k, detail::vget(p.err, c) / tol.allowed(detail::vget(val, c)));
        }
        return k;
    };

    V val;
    V err;
    totals(val, err);
    int splits = 0;
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry> heap;
    for (std::size_t i = 0; i < panels.size(); ++i) heap.emplace(priority(panels[i], val), i);

    while (!converged(val, err)) {
        if (splits >= tol.max_subdivisions || heap.empty() || heap.top().first <= 0.0) {
            const std::string why = splits >= tol.max_subdivisions
                                        ? "subdivision budget exhausted"
                                        : "no panel can be refined further (roundoff limit)";
            throw QuadratureError(label, detail::vget(val, 0), detail::vget(err, 0), why);
        }
        const std::size_t idx = heap.top().second;
        heap.pop();
        const P old = panels[idx];
        const double mid = 0.5 * (old.a + old.b);
        P left = detail::gk21<V>(f, old.a, mid, label);
        P right = detail::gk21<V>(f, mid, old.b, label);
        evals += 42;
        ++splits;
        for (std::size_t c = 0; c < ncomp; ++c) {
            detail::vref(val, c) += detail::vget(left.value, c) + detail::vget(right.value, c) -
                                    detail::vget(old.value, c);
            detail::vref(err, c) += detail::vget(left.err, c) + detail::vget(right.err, c) -
                                    detail::vget(old.err, c);
        }
        panels[idx] = left;
        panels.push_back(right);
        heap.emplace(priority(left, val), idx);
        heap.emplace(priority(right, val), panels.size() - 1);
        // Incremental updates drift; refresh the sums periodically.
        if (splits % 256 == 0) totals(val, err);
    }
    std::sort(panels.begin(), panels.end(), [](const P& x, const P& y) { return x.a < y.a; });
    BasicResult<V> out;
    totals(out.value, out.err_estimate);
    out.evaluations = evals;
    out.subdivisions = splits;
    return out;
}

namespace detail {

inline std::vector<double> finite_edges(double a, double b, const std::vector<double>& breaks) {
    std::vector<double> e{a, b};
    for (double x : breaks) {
        if (x > a && x < b) e.push_back(x);
    }
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return e;
}

}  // namespace detail

// Integrate over a Domain. Unbounded kinds go through the algebraic maps;
// breakpoints are carried into the mapped variable.
template <class V = double, class F>
BasicResult<V> integrate(F&& f, const Domain& dom, const QuadTolerance& tol,
                         const char* label = "integrand", Control ctl = {}) {
    using K = Domain::Kind;
    switch (dom.kind()) {
        case K::finite: {
            auto edges = detail::finite_edges(dom.a(), dom.b(), dom.breakpoints());
            return integrate_panels<V>(f, edges, tol, label, ctl);
        }
        case K::half_line: {
            const double a = dom.a();
            const double s = dom.side() == Domain::Side::upper ? 1.0 : -1.0;
            std::vector<double> tb;
            for (double x : dom.breakpoints()) {
                if (dom.contains_interior(x)) tb.push_back(detail::HalfLineMap::inverse(a, s, x));
            }
            auto edges = detail::finite_edges(0.0, 1.0, tb);
            auto g = [&](double t) -> V {
                V out = detail::vzero(V{});
                if (t >= 1.0) return out;
                const double x = detail::HalfLineMap::x(a, s, t);
                if (!std::isfinite(x)) return out;
                const double jac = detail::HalfLineMap::dx(t);
                V fx = f(x);
                for (std::size_t c = 0; c < detail::vsize(fx); ++c) detail::vref(out, c) = detail::vget(fx, c) * jac;
                return out;
            };
            return integrate_panels<V>(g, edges, tol, label, ctl);
        }
        case K::full_line: {
            std::vector<double> tb;
            for (double x : dom.breakpoints()) {
                if (std::isfinite(x)) tb.push_back(detail::FullLineMap::inverse(x));
            }
            auto edges = detail::finite_edges(-1.0, 1.0, tb);
            auto g = [&](double t) -> V {
                V out = detail::vzero(V{});
                if (std::abs(t) >= 1.0) return out;
                const double x = detail::FullLineMap::x(t);
                if (!std::isfinite(x)) return out;
                const double jac = detail::FullLineMap::dx(t);
                V fx = f(x);
                for (std::size_t c = 0; c < detail::vsize(fx); ++c) detail::vref(out, c) = detail::vget(fx, c) * jac;
                return out;
            };
            return integrate_panels<V>(g, edges, tol, label, ctl);
        }
    }
    throw std::logic_error("unreachable domain kind");
}

template <class F>
QuadResult integrate_1d(F&& f, const Domain& dom, const QuadTolerance& tol = {},
                        const char* label = "integrand") {
    return integrate<double>(std::forward<F>(f), dom, tol, label);
}

enum class Coordinates { direct, rotated };

// Iterated 2-D integration. In rotated mode the domains refer to
// u = (x+y)/sqrt(2) and v = (x-y)/sqrt(2); the map is orthogonal so the
// Jacobian is exactly 1, and f still receives (x, y).
template <class F>
QuadResult integrate_2d(F&& f, const Domain& dx, const Domain& dy, const QuadTolerance& tol = {},
                        Coordinates coords = Coordinates::direct, const char* label = "integrand") {
    QuadTolerance inner_tol = tol;
    inner_tol.abs_tol = tol.abs_tol * 0.1;
    inner_tol.rel_tol = tol.rel_tol * 0.1;
    constexpr double r2 = 0.70710678118654752440;
    auto outer = [&](double a) -> std::array<double, 2> {
        auto inner = [&](double b) {
            if (coords == Coordinates::rotated) return f(r2 * (a + b), r2 * (a - b));
            return f(a, b);
        };
        const QuadResult r = integrate<double>(inner, dy, inner_tol, label);
        return {r.value, r.err_estimate};
    };
    const auto res = integrate<std::array<double, 2>>(outer, dx, tol, label, Control{1});
    QuadResult out;
    out.value = res.value[0];
    out.err_estimate = res.err_estimate[0] + std::abs(res.value[1]);
    out.evaluations = res.evaluations;
    out.subdivisions = res.subdivisions;
    return out;
}

// Product of two independent 1-D integrals with first-order error
// propagation; the factorized form of a separable 2-D integrand.
inline QuadResult combine_product(const QuadResult& g, const QuadResult& h) {
    QuadResult out;
    out.value = g.value * h.value;
    out.err_estimate = std::abs(g.value) * h.err_estimate + std::abs(h.value) * g.err_estimate +
                       g.err_estimate * h.err_estimate;
    out.evaluations = g.evaluations + h.evaluations;
    out.subdivisions = g.subdivisions + h.subdivisions;
    return out;
}

template <class G, class H>
QuadResult integrate_separable(G&& g, H&& h, const Domain& du, const Domain& dv,
                               const QuadTolerance& tol = {}, const char* label = "integrand") {
    return combine_product(integrate_1d(std::forward<G>(g), du, tol, label),
                           integrate_1d(std::forward<H>(h), dv, tol, label));
}

// Gauss-Hermite nodes and weights for the weight exp(-x^2), computed by
// Newton iteration on the orthonormal recurrence and memoized per order.
struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline const HermiteRule& gauss_hermite(int n) {
    if (n < 1 || n > 400) throw std::invalid_argument("gauss_hermite: order must lie in [1, 400]");
    static std::mutex mu;
    static std::map<int, HermiteRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    HermiteRule rule;
    rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
    rule.weights.assign(static_cast<std::size_t>(n), 0.0);
    const double pim4 = 0.7511255444649425;  // pi^(-1/4)
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * rule.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * rule.nodes[1];
        } else {
            z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i - 2)];
        }
        double pp = 0.0;
        bool ok = false;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) {
                ok = true;
                break;
            }
        }
        if (!ok) throw std::runtime_error("gauss_hermite: Newton iteration did not converge");
        rule.nodes[static_cast<std::size_t>(i)] = z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = -z;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = 2.0 / (pp * pp);
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

}  // namespace spdcng::quad
