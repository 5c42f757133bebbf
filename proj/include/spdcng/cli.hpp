#pragma once

// Command-line front end: single-point reports, P sweeps, figure datasets
// and a constants dump, emitted as CSV or JSON.
//
// Exit codes: 0 success, 1 usage error, 2 computation failure, 3 partial
// sweep failure (at least one row failed, at least one succeeded).

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "spdcng/distributions.hpp"
#include "spdcng/entropy.hpp"
#include "spdcng/gstate.hpp"
#include "spdcng/moments.hpp"
#include "spdcng/quadrature.hpp"
#include "spdcng/shape_constants.hpp"
#include "spdcng/specfun.hpp"

namespace spdcng::cli {

using json = nlohmann::json;

inline constexpr const char* kCsvMagic = "# spdc-ng v1";

enum ExitCode : int { kOk = 0, kUsage = 1, kComputation = 2, kPartial = 3 };

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A failure while computing one named output quantity.
class ComputationError : public std::runtime_error {
public:
    ComputationError(std::string quantity, const std::string& why)
        : std::runtime_error(quantity + ": " + why), quantity_(std::move(quantity)) {}
    const std::string& quantity() const { return quantity_; }

private:
    std::string quantity_;
};

template <class F>
auto named(const std::string& quantity, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ComputationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ComputationError(quantity, e.what());
    }
}

// ---------------------------------------------------------------------------
// Number formatting

// Shortest decimal string that parses back to the same double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_number(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw std::invalid_argument("not a number: " + s);
    return v;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class Quantity {
    epr,
    mancini,
    ng_total,
    ng_cond,
    ng_marg,
    negentropy_ff_cond,
    negentropy_nf_cond,
    negentropy_ff_marg,
    negentropy_nf_marg,
    var_q_norm,
    var_x_norm,
    delta_b,
};

inline const std::map<std::string, Quantity>& quantity_table() {
    static const std::map<std::string, Quantity> t{
        {"epr", Quantity::epr},
        {"mancini", Quantity::mancini},
        {"ng_total", Quantity::ng_total},
        {"ng_cond", Quantity::ng_cond},
        {"ng_marg", Quantity::ng_marg},
        {"negentropy_ff_cond", Quantity::negentropy_ff_cond},
        {"negentropy_nf_cond", Quantity::negentropy_nf_cond},
        {"negentropy_ff_marg", Quantity::negentropy_ff_marg},
        {"negentropy_nf_marg", Quantity::negentropy_nf_marg},
        {"var_q_norm", Quantity::var_q_norm},
        {"var_x_norm", Quantity::var_x_norm},
        {"delta_b", Quantity::delta_b},
    };
    return t;
}

inline std::string quantity_name(Quantity q) {
    for (const auto& [k, v] : quantity_table()) {
        if (v == q) return k;
    }
    return "?";
}

inline Quantity parse_quantity(const std::string& s) {
    const auto it = quantity_table().find(s);
    if (it == quantity_table().end()) throw UsageError("unknown quantity '" + s + "'");
    return it->second;
}

// Quantities with a Gaussian-model column per alpha.
inline bool has_alpha_columns(Quantity q) {
    return q == Quantity::epr || q == Quantity::mancini || q == Quantity::var_q_norm || q == Quantity::var_x_norm;
}

enum class Spacing { linear, log };

struct SweepConfig {
    std::vector<Quantity> quantities;
    double p_min = 0.01;
    double p_max = 3.0;
    int steps = 60;
    Spacing spacing = Spacing::log;
    double sigma = 1.0;
    std::vector<double> alpha_set;
    quad::QuadTolerance tol;

    void validate() const {
        if (quantities.empty()) throw UsageError("sweep: at least one --quantity is required");
        if (!(p_min > 0.0) || !(p_max > p_min) || !std::isfinite(p_max)) {
            throw UsageError("sweep: need 0 < p_min < p_max");
        }
        if (steps < 2) throw UsageError("sweep: steps must be >= 2");
        if (!(sigma >= 1.0) || !std::isfinite(sigma)) throw UsageError("sweep: sigma must be >= 1");
        for (double a : alpha_set) {
            if (!(a > 0.0) || !std::isfinite(a)) throw UsageError("sweep: alpha values must be > 0");
        }
        try {
            tol.validate();
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }

    std::vector<double> grid() const {
        std::vector<double> g(static_cast<std::size_t>(steps));
        for (int i = 0; i < steps; ++i) {
            const double t = static_cast<double>(i) / (steps - 1);
            g[static_cast<std::size_t>(i)] = spacing == Spacing::log
                                                 ? std::exp(std::log(p_min) + t * (std::log(p_max) - std::log(p_min)))
                                                 : p_min + t * (p_max - p_min);
        }
        g.front() = p_min;
        g.back() = p_max;
        return g;
    }
};

inline std::string alpha_suffix(double a) { return "_gauss_a" + format_number(a); }

inline std::vector<std::string> sweep_columns(const SweepConfig& cfg) {
    std::vector<std::string> cols{"p"};
    for (Quantity q : cfg.quantities) {
        const std::string n = quantity_name(q);
        cols.push_back(n);
        cols.push_back(n + "_err");
        if (has_alpha_columns(q)) {
            for (double a : cfg.alpha_set) cols.push_back(n + alpha_suffix(a));
        }
    }
    cols.push_back("status");
    return cols;
}

namespace detail {

// Lazily computed pieces shared by several quantities at one grid point.
class PointCache {
public:
    PointCache(const Params& prm, const quad::QuadTolerance& tol) : prm_(prm), tol_(tol) {}

    const NegentropyValue& negentropy(Plane plane, Form::Kind kind) {
        auto& slot = neg_[plane == Plane::far_field ? 0 : 1][static_cast<int>(kind)];
        if (!slot) {
            const Form f = kind == Form::Kind::joint           ? Form::joint()
                           : kind == Form::Kind::conditional_at ? Form::conditional_at(0.0)
                                                                : Form::marginal();
            slot = spdcng::negentropy(make_density(plane, Model::spdc(), f, prm_, tol_), tol_);
        }
        return *slot;
    }

    const SliceMoments& conditional(Plane plane) {
        auto& slot = cond_[plane == Plane::far_field ? 0 : 1];
        if (!slot) slot = slice_moments(make_density(plane, Model::spdc(), Form::conditional_at(0.0), prm_, tol_), tol_);
        return *slot;
    }

    const Params& params() const { return prm_; }
    const quad::QuadTolerance& tol() const { return tol_; }

private:
    Params prm_;
    quad::QuadTolerance tol_;
    std::optional<NegentropyValue> neg_[2][3];
    std::optional<SliceMoments> cond_[2];
};

// Relative error estimate of a2 / a1.
inline double ratio_rel_err(const ShapeConstants& c) { return c.err.a2 / c.a2 + c.err.a1 / c.a1; }

struct ValueErr {
    double value = 0.0;
    double err = 0.0;
};

inline ValueErr neg_sum(PointCache& pc, Form::Kind kind) {
    const NegentropyValue& a = pc.negentropy(Plane::far_field, kind);
    const NegentropyValue& b = pc.negentropy(Plane::near_field, kind);
    return {a.value + b.value, a.err_estimate + b.err_estimate};
}

inline ValueErr delta_b_with_err(const Params& prm, const quad::QuadTolerance& tol) {
    const SymplecticSpectrum s = symplectic_spectrum(two_mode_cov(prm, tol));
    const double v = von_neumann_entropy(s);
    const ShapeConstants& c = shape_constants(tol);
    const double r = c.a2_over_a1();
    // nu_minus^2 = 3 a2/a1; f'(nu) = ln((nu + 1/2) / (nu - 1/2)).
    const double dnu = 1.5 / s.nu_minus * r * ratio_rel_err(c);
    const double slope = std::log((s.nu_minus + 0.5) / (s.nu_minus - 0.5));
    return {v, std::abs(slope) * dnu};
}

}  // namespace detail

// One grid point: the numeric cells for every column except p and status.
inline std::vector<double> evaluate_point(const SweepConfig& cfg, double p) {
    const Params prm = Params::dimensionless(p, cfg.sigma);
    detail::PointCache pc(prm, cfg.tol);
    std::vector<double> out;
    auto push = [&out](detail::ValueErr ve) {
        out.push_back(ve.value);
        out.push_back(ve.err);
    };
    for (Quantity q : cfg.quantities) {
        const std::string name = quantity_name(q);
        named(name, [&] {
            switch (q) {
                case Quantity::epr: {
                    const SliceMoments& fq = pc.conditional(Plane::far_field);
                    const SliceMoments& nx = pc.conditional(Plane::near_field);
                    push({fq.var * nx.var, fq.var_err * nx.var + nx.var_err * fq.var});
                    for (double a : cfg.alpha_set) out.push_back(epr_product(prm, Model::gaussian(a)).product);
                    break;
                }
                case Quantity::mancini: {
                    const ManciniResult m = mancini_product(prm, Model::spdc(), cfg.tol);
                    push({m.product, m.product * detail::ratio_rel_err(shape_constants(cfg.tol))});
                    for (double a : cfg.alpha_set) out.push_back(mancini_product(prm, Model::gaussian(a)).product);
                    break;
                }
                case Quantity::ng_total: push(detail::neg_sum(pc, Form::Kind::joint)); break;
                case Quantity::ng_cond: push(detail::neg_sum(pc, Form::Kind::conditional_at)); break;
                case Quantity::ng_marg: push(detail::neg_sum(pc, Form::Kind::marginal)); break;
                case Quantity::negentropy_ff_cond:
                case Quantity::negentropy_nf_cond:
                case Quantity::negentropy_ff_marg:
                case Quantity::negentropy_nf_marg: {
                    const Plane pl = (q == Quantity::negentropy_ff_cond || q == Quantity::negentropy_ff_marg)
                                         ? Plane::far_field
                                         : Plane::near_field;
                    const Form::Kind k = (q == Quantity::negentropy_ff_cond || q == Quantity::negentropy_nf_cond)
                                             ? Form::Kind::conditional_at
                                             : Form::Kind::marginal;
                    const NegentropyValue& n = pc.negentropy(pl, k);
                    push({n.value, n.err_estimate});
                    break;
                }
                case Quantity::var_q_norm: {
                    const SliceMoments& fq = pc.conditional(Plane::far_field);
                    push({fq.var * p * p, fq.var_err * p * p});
                    for (double a : cfg.alpha_set) {
                        out.push_back(gaussian_conditional_variances(a, prm).var_q_norm);
                    }
                    break;
                }
                case Quantity::var_x_norm: {
                    const SliceMoments& nx = pc.conditional(Plane::near_field);
                    push({nx.var / (p * p), nx.var_err / (p * p)});
                    for (double a : cfg.alpha_set) {
                        out.push_back(gaussian_conditional_variances(a, prm).var_x_norm);
                    }
                    break;
                }
                case Quantity::delta_b: push(detail::delta_b_with_err(prm, cfg.tol)); break;
            }
        });
    }
    return out;
}

struct SweepRow {
    double p = 0.0;
    std::vector<double> values;
    bool ok = true;
    std::string error;
};

struct SweepTable {
    std::vector<std::string> columns;
    std::vector<SweepRow> rows;

    std::size_t failures() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok; }));
    }
};

// Evaluate rows concurrently; each worker writes only its own slots so the
// ordering (and therefore the output) does not depend on scheduling.
inline std::vector<SweepRow> parallel_rows(const std::vector<double>& ps, std::size_t width, unsigned threads,
                                           const std::function<std::vector<double>(double)>& row_fn) {
    std::vector<SweepRow> rows(ps.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < ps.size(); i = next++) {
            SweepRow& r = rows[i];
            r.p = ps[i];
            try {
                r.values = row_fn(ps[i]);
            } catch (const std::exception& e) {
                r.ok = false;
                r.error = e.what();
                r.values.assign(width, std::numeric_limits<double>::quiet_NaN());
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(ps.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    return rows;
}

inline SweepTable run_sweep(const SweepConfig& cfg, unsigned threads) {
    cfg.validate();
    // Build the shared constants once before fanning out.
    named("shape_constants", [&] { return shape_constants(cfg.tol); });
    SweepTable t;
    t.columns = sweep_columns(cfg);
    const std::size_t width = t.columns.size() - 2;
    t.rows = parallel_rows(cfg.grid(), width, threads, [&](double p) { return evaluate_point(cfg, p); });
    return t;
}

// All rows fine: 0. Every row failed: 2. Some rows failed: 3.
inline int sweep_exit_code(const SweepTable& t) {
    const std::size_t bad = t.failures();
    if (bad == 0) return kOk;
    return bad == t.rows.size() ? kComputation : kPartial;
}

inline void write_csv(std::ostream& os, const SweepTable& t) {
    os << kCsvMagic << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const SweepRow& r : t.rows) {
        os << format_number(r.p);
        for (double v : r.values) os << ',' << format_number(v);
        os << ',' << (r.ok ? "ok" : "error") << '\n';
    }
}

inline json sweep_json(const SweepTable& t) {
    json rows = json::array();
    for (const SweepRow& r : t.rows) {
        json o;
        o["p"] = r.p;
        for (std::size_t i = 0; i < r.values.size(); ++i) {
            const double v = r.values[i];
            o[t.columns[i + 1]] = std::isfinite(v) ? json(v) : json(nullptr);
        }
        o["status"] = r.ok ? "ok" : "error";
        if (!r.ok) o["error"] = r.error;
        rows.push_back(std::move(o));
    }
    return json{{"schema", "spdc-ng v1"}, {"columns", t.columns}, {"rows", rows}};
}

// ---------------------------------------------------------------------------
// Report

struct Report {
    double p = 0.0;
    double sigma = 1.0;
    NgReport ng;
    EprResult epr;
    ManciniResult mancini;
    double nu_plus = 0.0;
    double nu_minus = 0.0;
    double mu = 0.0;
    double delta_b = 0.0;       // nats
    double delta_b_bits = 0.0;  // bits

    friend bool operator==(const Report&, const Report&) = default;
};

inline Report compute_report(const Params& prm, const quad::QuadTolerance& tol = {}) {
    Report r;
    r.p = prm.p();
    r.sigma = prm.sigma();
    named("shape_constants", [&] { return shape_constants(tol); });
    detail::PointCache pc(prm, tol);
    auto neg = [&](const char* name, Plane pl, Form::Kind k) {
        return named(name, [&] { return pc.negentropy(pl, k).value; });
    };
    r.ng.p = r.p;
    r.ng.n_ff_joint = neg("n_ff_joint", Plane::far_field, Form::Kind::joint);
    r.ng.n_nf_joint = neg("n_nf_joint", Plane::near_field, Form::Kind::joint);
    r.ng.n_ff_cond = neg("n_ff_cond", Plane::far_field, Form::Kind::conditional_at);
    r.ng.n_nf_cond = neg("n_nf_cond", Plane::near_field, Form::Kind::conditional_at);
    r.ng.n_ff_marg = neg("n_ff_marg", Plane::far_field, Form::Kind::marginal);
    r.ng.n_nf_marg = neg("n_nf_marg", Plane::near_field, Form::Kind::marginal);
    r.ng.ng_total = r.ng.n_ff_joint + r.ng.n_nf_joint;
    r.ng.ng_cond = r.ng.n_ff_cond + r.ng.n_nf_cond;
    r.ng.ng_marg = r.ng.n_ff_marg + r.ng.n_nf_marg;
    r.ng.decomposition_residual = r.ng.ng_total - r.ng.ng_cond - r.ng.ng_marg;
    r.epr = named("epr", [&] {
        return make_epr(pc.conditional(Plane::near_field).var, pc.conditional(Plane::far_field).var);
    });
    r.mancini = named("mancini", [&] { return mancini_product(prm, Model::spdc(), tol); });
    const SymplecticSpectrum s = named("symplectic_spectrum", [&] { return symplectic_spectrum(two_mode_cov(prm, tol)); });
    r.nu_plus = s.nu_plus;
    r.nu_minus = s.nu_minus;
    r.mu = purity(s);
    r.delta_b = von_neumann_entropy(s, EntropyBase::nats);
    r.delta_b_bits = von_neumann_entropy(s, EntropyBase::bits);
    return r;
}

inline json units_record() {
    json u;
    for (const char* k : {"n_ff_joint", "n_nf_joint", "ng_total", "n_ff_cond", "n_nf_cond", "ng_cond", "n_ff_marg",
                          "n_nf_marg", "ng_marg", "decomposition_residual", "delta_b_bits"}) {
        u[k] = "bits";
    }
    u["delta_b"] = "nats";
    for (const char* k : {"p", "sigma", "epr", "mancini", "nu_plus", "nu_minus", "mu"}) u[k] = "dimensionless";
    return u;
}

inline json to_json(const Report& r) {
    json j;
    j["schema"] = "spdc-ng v1";
    j["p"] = r.p;
    j["sigma"] = r.sigma;
    j["n_ff_joint"] = r.ng.n_ff_joint;
    j["n_nf_joint"] = r.ng.n_nf_joint;
    j["ng_total"] = r.ng.ng_total;
    j["n_ff_cond"] = r.ng.n_ff_cond;
    j["n_nf_cond"] = r.ng.n_nf_cond;
    j["ng_cond"] = r.ng.ng_cond;
    j["n_ff_marg"] = r.ng.n_ff_marg;
    j["n_nf_marg"] = r.ng.n_nf_marg;
    j["ng_marg"] = r.ng.ng_marg;
    j["decomposition_residual"] = r.ng.decomposition_residual;
    j["epr"] = {{"var_x_cond", r.epr.var_x_cond},
                {"var_q_cond", r.epr.var_q_cond},
                {"product", r.epr.product},
                {"entangled_flag", r.epr.entangled_flag},
                {"nongaussian_witness_flag", r.epr.nongaussian_witness_flag}};
    j["mancini"] = {{"sum_momentum_var", r.mancini.sum_momentum_var},
                    {"diff_position_var", r.mancini.diff_position_var},
                    {"product", r.mancini.product},
                    {"violated", r.mancini.violated}};
    j["nu_plus"] = r.nu_plus;
    j["nu_minus"] = r.nu_minus;
    j["mu"] = r.mu;
    j["delta_b"] = r.delta_b;
    j["delta_b_bits"] = r.delta_b_bits;
    j["units"] = units_record();
    return j;
}

inline Report report_from_json(const json& j) {
    Report r;
    r.p = j.at("p").get<double>();
    r.sigma = j.at("sigma").get<double>();
    r.ng.p = r.p;
    r.ng.n_ff_joint = j.at("n_ff_joint").get<double>();
    r.ng.n_nf_joint = j.at("n_nf_joint").get<double>();
    r.ng.ng_total = j.at("ng_total").get<double>();
    r.ng.n_ff_cond = j.at("n_ff_cond").get<double>();
    r.ng.n_nf_cond = j.at("n_nf_cond").get<double>();
    r.ng.ng_cond = j.at("ng_cond").get<double>();
    r.ng.n_ff_marg = j.at("n_ff_marg").get<double>();
    r.ng.n_nf_marg = j.at("n_nf_marg").get<double>();
    r.ng.ng_marg = j.at("ng_marg").get<double>();
    r.ng.decomposition_residual = j.at("decomposition_residual").get<double>();
    const json& e = j.at("epr");
    r.epr.var_x_cond = e.at("var_x_cond").get<double>();
    r.epr.var_q_cond = e.at("var_q_cond").get<double>();
    r.epr.product = e.at("product").get<double>();
    r.epr.entangled_flag = e.at("entangled_flag").get<bool>();
    r.epr.nongaussian_witness_flag = e.at("nongaussian_witness_flag").get<bool>();
    const json& m = j.at("mancini");
    r.mancini.sum_momentum_var = m.at("sum_momentum_var").get<double>();
    r.mancini.diff_position_var = m.at("diff_position_var").get<double>();
    r.mancini.product = m.at("product").get<double>();
    r.mancini.violated = m.at("violated").get<bool>();
    r.nu_plus = j.at("nu_plus").get<double>();
    r.nu_minus = j.at("nu_minus").get<double>();
    r.mu = j.at("mu").get<double>();
    r.delta_b = j.at("delta_b").get<double>();
    r.delta_b_bits = j.at("delta_b_bits").get<double>();
    return r;
}

inline void write_report_csv(std::ostream& os, const Report& r) {
    const std::vector<std::pair<const char*, double>> cells{
        {"p", r.p},
        {"sigma", r.sigma},
        {"n_ff_joint", r.ng.n_ff_joint},
        {"n_nf_joint", r.ng.n_nf_joint},
        {"ng_total", r.ng.ng_total},
        {"n_ff_cond", r.ng.n_ff_cond},
        {"n_nf_cond", r.ng.n_nf_cond},
        {"ng_cond", r.ng.ng_cond},
        {"n_ff_marg", r.ng.n_ff_marg},
        {"n_nf_marg", r.ng.n_nf_marg},
        {"ng_marg", r.ng.ng_marg},
        {"decomposition_residual", r.ng.decomposition_residual},
        {"var_x_cond", r.epr.var_x_cond},
        {"var_q_cond", r.epr.var_q_cond},
        {"epr_product", r.epr.product},
        {"entangled_flag", r.epr.entangled_flag ? 1.0 : 0.0},
        {"nongaussian_witness_flag", r.epr.nongaussian_witness_flag ? 1.0 : 0.0},
        {"mancini", r.mancini.product},
        {"mancini_violated", r.mancini.violated ? 1.0 : 0.0},
        {"nu_plus", r.nu_plus},
        {"nu_minus", r.nu_minus},
        {"mu", r.mu},
        {"delta_b", r.delta_b},
        {"delta_b_bits", r.delta_b_bits},
    };
    os << kCsvMagic << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i].first;
    os << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << format_number(cells[i].second);
    os << '\n';
}

// ---------------------------------------------------------------------------
// Constants

struct ConstantRow {
    std::string name;
    double value = 0.0;
    double err = 0.0;
};

inline std::vector<ConstantRow> constants_rows(const quad::QuadTolerance& tol) {
    const ShapeConstants& c = named("shape_constants", [&]() -> const ShapeConstants& { return shape_constants(tol); });
    const MarginalLimits lim = named("marginal_negentropy_limits", [&] { return marginal_negentropy_limits(tol); });
    const TwoModeCov v = two_mode_cov(Params::dimensionless(1.0), tol);
    const SymplecticSpectrum s = symplectic_spectrum(v);
    const double rr = detail::ratio_rel_err(c);
    return {
        {"a1", c.a1, c.err.a1},
        {"a2", c.a2, c.err.a2},
        {"i_ff", c.i_ff, c.err.i_ff},
        {"i_nf", c.i_nf, c.err.i_nf},
        {"sinc_moment_ratio", c.sinc_moment_ratio, c.err.sinc_moment_ratio},
        {"b1", c.b1, c.err.b1},
        {"b2", c.b2, c.err.b2},
        {"far_field_entropy_offset", far_field_entropy_offset(c), 0.0},
        {"near_field_entropy_offset", near_field_entropy_offset(c), 0.0},
        {"alpha_1_over_e", matching_alpha(std::exp(-1.0)), 0.0},
        {"alpha_1_over_e2", matching_alpha(std::exp(-2.0)), 0.0},
        {"marginal_limit_small_p", lim.small_p_limit, 0.0},
        {"marginal_limit_large_p", lim.large_p_limit, 0.0},
        {"nu_minus", s.nu_minus, 0.5 * s.nu_minus * rr},
        {"det_v", v.det(), v.det() * rr},
        {"mu", purity(s), 0.5 * purity(s) * rr},
        {"mancini_boundary", mancini_boundary(tol), 0.5 * mancini_boundary(tol) * rr},
    };
}

// ---------------------------------------------------------------------------
// Figures

enum class FigureId { f1a, f1b, f1c, f1d, f1e, f1f, f2, f3a, f3b, f3c, f3d, mancini, supp_ngm };

inline const std::map<std::string, FigureId>& figure_table() {
    static const std::map<std::string, FigureId> t{
        {"1a", FigureId::f1a}, {"1b", FigureId::f1b}, {"1c", FigureId::f1c}, {"1d", FigureId::f1d},
        {"1e", FigureId::f1e}, {"1f", FigureId::f1f}, {"2", FigureId::f2},   {"3a", FigureId::f3a},
        {"3b", FigureId::f3b}, {"3c", FigureId::f3c}, {"3d", FigureId::f3d}, {"mancini", FigureId::mancini},
        {"supp_ngm", FigureId::supp_ngm},
    };
    return t;
}

inline FigureId parse_figure(const std::string& s) {
    const auto it = figure_table().find(s);
    if (it == figure_table().end()) throw UsageError("unknown figure id '" + s + "'");
    return it->second;
}

inline bool is_cross_section(FigureId f) {
    return f == FigureId::f1a || f == FigureId::f1b || f == FigureId::f1c || f == FigureId::f1d;
}

// Preset sweeps behind the P-dependent figures.
inline SweepConfig figure_sweep(FigureId f, double sigma, const quad::QuadTolerance& tol) {
    SweepConfig c;
    c.sigma = sigma;
    c.tol = tol;
    c.spacing = Spacing::log;
    c.steps = 60;
    const std::vector<double> alphas{0.45, 0.72, 1.0};
    switch (f) {
        case FigureId::f1e: c.quantities = {Quantity::var_q_norm}; c.alpha_set = alphas; break;
        case FigureId::f1f: c.quantities = {Quantity::var_x_norm}; c.alpha_set = alphas; break;
        case FigureId::f2: c.quantities = {Quantity::epr}; c.alpha_set = alphas; break;
        case FigureId::mancini: c.quantities = {Quantity::mancini}; c.alpha_set = alphas; break;
        case FigureId::f3a: c.quantities = {Quantity::negentropy_ff_cond, Quantity::negentropy_nf_cond}; break;
        case FigureId::f3b: c.quantities = {Quantity::negentropy_ff_marg, Quantity::negentropy_nf_marg}; break;
        case FigureId::f3c: c.quantities = {Quantity::ng_cond}; break;
        case FigureId::f3d: c.quantities = {Quantity::ng_marg}; break;
        case FigureId::supp_ngm: c.quantities = {Quantity::ng_marg}; break;
        default: throw UsageError("figure is not a sweep");
    }
    if (f == FigureId::f1e || f == FigureId::f1f || f == FigureId::f2 || f == FigureId::mancini) {
        c.p_min = 0.1;
        c.p_max = 5.0;
    } else if (f == FigureId::supp_ngm) {
        c.p_min = 1.0;
        c.p_max = 15.0;
        c.steps = 40;
    } else {
        c.p_min = 0.01;
        c.p_max = 3.0;
    }
    return c;
}

// Conditional density cross-sections at the origin slice: SPDC and the
// Gaussian models for alpha in {0.45, 0.72}. Panels a and c are far field,
// b and d near field; the default P is 0.1 for a-b and 2 for c-d.
inline SweepTable figure_cross_section(FigureId f, std::optional<double> p_opt, double sigma,
                                       const quad::QuadTolerance& tol, int points = 401) {
    const bool far = f == FigureId::f1a || f == FigureId::f1c;
    const double p = p_opt.value_or((f == FigureId::f1a || f == FigureId::f1b) ? 0.1 : 2.0);
    const Params prm = Params::dimensionless(p, sigma);
    const Plane plane = far ? Plane::far_field : Plane::near_field;
    const std::vector<double> alphas{0.45, 0.72};
    std::vector<DensitySpec> specs;
    specs.push_back(named("spdc conditional", [&] {
        return make_density(plane, Model::spdc(), Form::conditional_at(0.0), prm, tol);
    }));
    for (double a : alphas) specs.push_back(make_density(plane, Model::gaussian(a), Form::conditional_at(0.0), prm, tol));
    // Six standard deviations of the 1/e^2-matched Gaussian conditional.
    const ConditionalVariances g = gaussian_conditional_variances(0.72, prm);
    const double half = 6.0 * std::sqrt(far ? g.var_q_cond : g.var_x_cond);
    SweepTable t;
    t.columns = {far ? "q" : "x", "spdc"};
    for (double a : alphas) t.columns.push_back("gauss_a" + format_number(a));
    for (int i = 0; i < points; ++i) {
        SweepRow r;
        r.p = -half + 2.0 * half * i / (points - 1);
        for (const DensitySpec& s : specs) r.values.push_back(s.eval(r.p));
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline void write_cross_section_csv(std::ostream& os, const SweepTable& t) {
    os << kCsvMagic << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const SweepRow& r : t.rows) {
        os << format_number(r.p);
        for (double v : r.values) os << ',' << format_number(v);
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Entry point

inline unsigned resolve_threads(std::optional<int> flag) {
    if (flag) {
        if (*flag < 1) throw UsageError("--threads must be >= 1");
        return static_cast<unsigned>(*flag);
    }
    if (const char* env = std::getenv("SPDC_NG_THREADS"); env && *env) {
        int n = 0;
        const std::string s(env);
        const auto r = std::from_chars(s.data(), s.data() + s.size(), n);
        if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || n < 1) {
            throw UsageError("SPDC_NG_THREADS must be a positive integer");
        }
        return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

struct CommonOptions {
    std::string out;
    std::string format = "csv";
    double abs_tol = quad::QuadTolerance{}.abs_tol;
    double rel_tol = quad::QuadTolerance{}.rel_tol;
    std::optional<int> threads;

    quad::QuadTolerance tolerance() const {
        quad::QuadTolerance t;
        t.abs_tol = abs_tol;
        t.rel_tol = rel_tol;
        try {
            t.validate();
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        return t;
    }
};

inline void add_common(CLI::App* sub, CommonOptions& o, bool with_threads) {
    sub->add_option("--out", o.out, "Output path (default: stdout)");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--abs-tol", o.abs_tol, "Absolute quadrature tolerance");
    sub->add_option("--rel-tol", o.rel_tol, "Relative quadrature tolerance");
    if (with_threads) sub->add_option("--threads", o.threads, "Worker threads (fallback: SPDC_NG_THREADS)");
}

// Writes to --out (binary mode, so line endings stay LF) or to `fallback`.
inline void emit(const std::string& path, std::ostream& fallback, const std::string& text) {
    if (path.empty() || path == "-") {
        fallback << text;
        fallback.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw UsageError("cannot open output file '" + path + "'");
    f << text;
    if (!f) throw UsageError("failed writing output file '" + path + "'");
}

inline Params make_params(double p, double sigma) {
    try {
        return Params::dimensionless(p, sigma);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatial two-photon SPDC densities, entanglement criteria and non-Gaussianity measures", "spdc_ng"};
    app.require_subcommand(1);

    detail::CommonOptions rep_o, swp_o, fig_o, con_o;

    double rep_p = 1.0, rep_sigma = 1.0;
    auto* rep = app.add_subcommand("report", "All scalar outputs at one P");
    rep->add_option("--p", rep_p, "Geometry parameter P")->required();
    rep->add_option("--sigma", rep_sigma, "Near-field broadening sigma");
    detail::add_common(rep, rep_o, false);

    std::vector<std::string> swp_q;
    double swp_pmin = 0.01, swp_pmax = 3.0, swp_sigma = 1.0;
    int swp_steps = 60;
    bool swp_log = false;
    std::vector<double> swp_alpha;
    auto* swp = app.add_subcommand("sweep", "Evaluate quantities over a P grid");
    swp->add_option("--quantity,-q", swp_q, "Quantity to sweep (repeatable)")->required();
    swp->add_option("--p-min", swp_pmin, "Lower end of the P grid");
    swp->add_option("--p-max", swp_pmax, "Upper end of the P grid");
    swp->add_option("--steps", swp_steps, "Number of grid points");
    swp->add_flag("--log", swp_log, "Logarithmic spacing (default linear)");
    swp->add_option("--sigma", swp_sigma, "Near-field broadening sigma");
    swp->add_option("--alpha", swp_alpha, "Gaussian-model alpha (repeatable)");
    detail::add_common(swp, swp_o, true);

    std::string fig_id;
    std::optional<double> fig_p;
    double fig_sigma = 1.0;
    auto* fig = app.add_subcommand("figure", "Dataset behind one figure");
    fig->add_option("id", fig_id, "Figure id: 1a-1f, 2, 3a-3d, mancini, supp_ngm")->required();
    fig->add_option("--p", fig_p, "P for the cross-section panels 1a-1d");
    fig->add_option("--sigma", fig_sigma, "Near-field broadening sigma");
    detail::add_common(fig, fig_o, true);

    auto* con = app.add_subcommand("constants", "Shape constants and derived scalars");
    detail::add_common(con, con_o, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (rep->parsed()) {
            const quad::QuadTolerance tol = rep_o.tolerance();
            const Report r = compute_report(detail::make_params(rep_p, rep_sigma), tol);
            std::ostringstream os;
            if (rep_o.format == "json") {
                os << to_json(r).dump(2) << '\n';
            } else {
                write_report_csv(os, r);
            }
            detail::emit(rep_o.out, out, os.str());
            return kOk;
        }
        if (swp->parsed()) {
            SweepConfig cfg;
            for (const std::string& q : swp_q) cfg.quantities.push_back(parse_quantity(q));
            cfg.p_min = swp_pmin;
            cfg.p_max = swp_pmax;
            cfg.steps = swp_steps;
            cfg.spacing = swp_log ? Spacing::log : Spacing::linear;
            cfg.sigma = swp_sigma;
            cfg.alpha_set = swp_alpha;
            cfg.tol = swp_o.tolerance();
            const unsigned threads = resolve_threads(swp_o.threads);
            const SweepTable t = run_sweep(cfg, threads);
            std::ostringstream os;
            if (swp_o.format == "json") {
                os << sweep_json(t).dump(2) << '\n';
            } else {
                write_csv(os, t);
            }
            detail::emit(swp_o.out, out, os.str());
            for (const SweepRow& r : t.rows) {
                if (!r.ok) err << "sweep: P=" << format_number(r.p) << " failed: " << r.error << '\n';
            }
            return sweep_exit_code(t);
        }
        if (fig->parsed()) {
            const FigureId id = parse_figure(fig_id);
            const quad::QuadTolerance tol = fig_o.tolerance();
            if (fig_sigma < 1.0 || !std::isfinite(fig_sigma)) throw UsageError("--sigma must be >= 1");
            if (fig_p && !(*fig_p > 0.0)) throw UsageError("--p must be > 0");
            if (fig_o.format == "json") throw UsageError("figure datasets are emitted as csv only");
            std::ostringstream os;
            if (is_cross_section(id)) {
                write_cross_section_csv(os, figure_cross_section(id, fig_p, fig_sigma, tol));
                detail::emit(fig_o.out, out, os.str());
                return kOk;
            }
            if (fig_p) throw UsageError("--p applies only to figures 1a-1d");
            const SweepTable t = run_sweep(figure_sweep(id, fig_sigma, tol), resolve_threads(fig_o.threads));
            write_csv(os, t);
            detail::emit(fig_o.out, out, os.str());
            return sweep_exit_code(t);
        }
        if (con->parsed()) {
            const std::vector<ConstantRow> rows = constants_rows(con_o.tolerance());
            std::ostringstream os;
            if (con_o.format == "json") {
                json j;
                j["schema"] = "spdc-ng v1";
                for (const ConstantRow& r : rows) j[r.name] = {{"value", r.value}, {"err_estimate", r.err}};
                os << j.dump(2) << '\n';
            } else {
                os << kCsvMagic << '\n' << "name,value,err_estimate\n";
                for (const ConstantRow& r : rows) {
                    os << r.name << ',' << format_number(r.value) << ',' << format_number(r.err) << '\n';
                }
            }
            detail::emit(con_o.out, out, os.str());
            return kOk;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ComputationError& e) {
        err << "computation failed in " << e.what() << '\n';
        return kComputation;
    } catch (const std::exception& e) {
        err << "computation failed: " << e.what() << '\n';
        return kComputation;
    }
    return kUsage;
}

}  // namespace spdcng::cli
