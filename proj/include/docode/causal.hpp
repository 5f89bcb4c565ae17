#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "docode/errors.hpp"

namespace docode {

/// Covariate matrix: one row per unit. Zero columns is legal and means
/// "no observed common causes".
using Matrix = std::vector<std::vector<double>>;

// ---------------------------------------------------------------------------
// Structural causal model
// ---------------------------------------------------------------------------

/// Canonical graph over a treatment T, an outcome Y, observed covariates Z
/// and exogenous disturbances: Z -> T, Z -> Y, T -> Y, u_t -> T, u_y -> Y.
struct Scm {
    struct Edge {
        std::string from, to;
        bool operator==(const Edge&) const = default;
    };

    std::string treatment;
    std::string outcome;
    std::vector<std::string> covariates;
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    std::optional<std::string> fixed_value;  // set by do_surgery

    bool operator==(const Scm&) const = default;
};

namespace detail {

inline void check_acyclic(const Scm& scm) {
    std::map<std::string, std::vector<std::string>> adj;
    std::map<std::string, int> indeg;
    for (const auto& n : scm.nodes) indeg[n] = 0;
    for (const auto& e : scm.edges) {
        adj[e.from].push_back(e.to);
        ++indeg[e.to];
    }
    std::vector<std::string> queue;
    for (const auto& [n, d] : indeg) {
        if (d == 0) queue.push_back(n);
    }
    std::size_t seen = 0;
    while (!queue.empty()) {
        const std::string n = queue.back();
        queue.pop_back();
        ++seen;
        for (const auto& m : adj[n]) {
            if (--indeg[m] == 0) queue.push_back(m);
        }
    }
    if (seen != indeg.size()) throw CycleError("SCM contains a directed cycle");
}

} // namespace detail

/// Builds the canonical SCM and validates it. extra_edges lets callers add
/// structure; anything that closes a cycle is rejected.
inline Scm build_scm(std::string treatment, std::string outcome,
                     std::vector<std::string> covariates,
                     std::vector<Scm::Edge> extra_edges = {}) {
    if (treatment.empty()) throw MissingNodeError("SCM: missing treatment node");
    if (outcome.empty()) throw MissingNodeError("SCM: missing outcome node");
    Scm scm;
    scm.treatment = std::move(treatment);
    scm.outcome = std::move(outcome);
    scm.covariates = std::move(covariates);
    scm.nodes = {scm.treatment, scm.outcome};
    for (const auto& z : scm.covariates) scm.nodes.push_back(z);
    scm.nodes.push_back("u_t");
    scm.nodes.push_back("u_y");

    scm.edges.push_back({scm.treatment, scm.outcome});
    for (const auto& z : scm.covariates) {
        scm.edges.push_back({z, scm.treatment});
        scm.edges.push_back({z, scm.outcome});
    }
    scm.edges.push_back({"u_t", scm.treatment});
    scm.edges.push_back({"u_y", scm.outcome});

    std::set<std::string> known(scm.nodes.begin(), scm.nodes.end());
    for (auto& e : extra_edges) {
        if (!known.count(e.from)) throw MissingNodeError("SCM: unknown edge source \"" + e.from + "\"");
        if (!known.count(e.to)) throw MissingNodeError("SCM: unknown edge target \"" + e.to + "\"");
        scm.edges.push_back(std::move(e));
    }
    detail::check_acyclic(scm);
    return scm;
}

/// From a JSON document {"treatment": "...", "outcome": "...",
/// "covariates": [...], "edges": [["from","to"], ...]}.
inline Scm build_scm(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("SCM: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("SCM: expected a JSON object");
    if (!doc.contains("treatment") || !doc["treatment"].is_string()) {
        throw MissingNodeError("SCM: missing treatment node");
    }
    if (!doc.contains("outcome") || !doc["outcome"].is_string()) {
        throw MissingNodeError("SCM: missing outcome node");
    }
    std::vector<std::string> covs;
    if (doc.contains("covariates")) {
        for (const auto& z : doc["covariates"]) {
            if (!z.is_string()) throw ParseError("SCM: non-string covariate");
            covs.push_back(z.get<std::string>());
        }
    }
    std::vector<Scm::Edge> extra;
    if (doc.contains("edges")) {
        for (const auto& e : doc["edges"]) {
            if (!e.is_array() || e.size() != 2) throw ParseError("SCM: edge must be [from, to]");
            extra.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
        }
    }
    return build_scm(doc["treatment"].get<std::string>(), doc["outcome"].get<std::string>(),
                     std::move(covs), std::move(extra));
}

/// Fixes the treatment at a value: removes every inbound edge of T.
/// Idempotent; covariate-to-outcome edges survive.
inline Scm do_surgery(const Scm& scm, std::string_view treatment_value) {
    Scm out = scm;
    out.fixed_value = std::string{treatment_value};
    std::erase_if(out.edges, [&](const Scm::Edge& e) { return e.to == out.treatment; });
    return out;
}

struct Estimand {
    enum class Kind { backdoor_adjustment, naive_difference };
    std::vector<std::string> adjustment_set;
    Kind kind = Kind::naive_difference;

    bool operator==(const Estimand&) const = default;
};

inline std::string_view estimand_kind_name(Estimand::Kind k) {
    return k == Estimand::Kind::backdoor_adjustment ? "backdoor_adjustment" : "naive_difference";
}

/// Backdoor identification for the canonical shape: the declared covariates
/// block every backdoor path, so they form the adjustment set. Depends only
/// on the pre-surgery structure.
inline Estimand identify(const Scm& scm) {
    Estimand est;
    est.adjustment_set = scm.covariates;
    est.kind = scm.covariates.empty() ? Estimand::Kind::naive_difference
                                      : Estimand::Kind::backdoor_adjustment;
    return est;
}

// ---------------------------------------------------------------------------
// Small dense linear algebra (normal equations scale: a handful of columns)
// ---------------------------------------------------------------------------

namespace detail {

/// Gauss-Jordan inverse with partial pivoting.
inline Matrix invert(Matrix a) {
    const std::size_t n = a.size();
    Matrix inv(n, std::vector<double>(n, 0.0));
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        inv[i][i] = 1.0;
        for (double v : a[i]) scale = std::max(scale, std::abs(v));
    }
    if (scale == 0.0) throw RankDeficiencyError("singular matrix (all zeros)");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-12 * scale) {
            throw RankDeficiencyError("rank-deficient design matrix at column " +
                                      std::to_string(col));
        }
        std::swap(a[pivot], a[col]);
        std::swap(inv[pivot], inv[col]);
        const double d = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

struct OlsFit {
    std::vector<double> beta;
    Matrix xtx_inverse;
    double rss = 0;
    double tss = 0;
};

/// Ordinary least squares through the normal equations.
inline OlsFit ols(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.size();
    const std::size_t k = x.empty() ? 0 : x[0].size();
    Matrix xtx(k, std::vector<double>(k, 0.0));
    std::vector<double> xty(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < k; ++a) {
            xty[a] += x[i][a] * y[i];
            for (std::size_t b = a; b < k; ++b) xtx[a][b] += x[i][a] * x[i][b];
        }
    }
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < a; ++b) xtx[a][b] = xtx[b][a];
    }
    OlsFit fit;
    fit.xtx_inverse = invert(std::move(xtx));
    fit.beta.assign(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) fit.beta[a] += fit.xtx_inverse[a][b] * xty[b];
    }
    double ymean = 0.0;
    for (std::size_t i = 0; i < n; ++i) ymean += y[i];
    ymean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double pred = 0.0;
        for (std::size_t a = 0; a < k; ++a) pred += x[i][a] * fit.beta[a];
        fit.rss += (y[i] - pred) * (y[i] - pred);
        fit.tss += (y[i] - ymean) * (y[i] - ymean);
    }
    return fit;
}

inline void check_finite(const Matrix& z, std::string_view what) {
    for (const auto& row : z) {
        for (double v : row) {
            if (!std::isfinite(v)) throw NonFiniteError(std::string{what} + ": non-finite value");
        }
    }
}

inline void check_finite(std::span<const double> v, std::string_view what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw NonFiniteError(std::string{what} + ": non-finite value");
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

struct CausalEstimate {
    enum class Method { psm, linear_regression, stratified };
    double ate = 0;
    Method method = Method::psm;
    std::size_t n = 0;
    std::map<std::string, double> diagnostics;
};

inline std::string_view method_name(CausalEstimate::Method m) {
    switch (m) {
        case CausalEstimate::Method::psm: return "psm";
        case CausalEstimate::Method::linear_regression: return "linear_regression";
        case CausalEstimate::Method::stratified: return "stratified";
    }
    return "psm";
}

/// Fitted P(T=1 | Z) per unit. Regularized logistic regression on
/// standardized covariates: gradient ascent with backtracking, L2 penalty
/// 1e-4 on the non-intercept weights, at most 500 iterations, convergence
/// when no parameter moves more than 1e-8.
inline std::vector<double> logistic_propensity(const Matrix& z, const std::vector<int>& t) {
    const std::size_t n = t.size();
    if (z.size() != n) throw LengthMismatchError("logistic_propensity: Z rows != |T|");
    if (n < 2) throw LengthMismatchError("logistic_propensity: need at least 2 units");
    detail::check_finite(z, "logistic_propensity");
    const auto treated = static_cast<std::size_t>(std::count(t.begin(), t.end(), 1));
    if (treated == 0 || treated == n) {
        throw SingleArmError("logistic_propensity: both arms must be present");
    }

    const std::size_t d = z.empty() ? 0 : z[0].size();
    // column standardization; constant columns become all-zero
    std::vector<double> mu(d, 0.0), sd(d, 0.0);
    for (const auto& row : z) {
        for (std::size_t j = 0; j < d; ++j) mu[j] += row[j];
    }
    for (std::size_t j = 0; j < d; ++j) mu[j] /= static_cast<double>(n);
    for (const auto& row : z) {
        for (std::size_t j = 0; j < d; ++j) sd[j] += (row[j] - mu[j]) * (row[j] - mu[j]);
    }
    for (std::size_t j = 0; j < d; ++j) {
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
        if (sd[j] == 0.0) sd[j] = 1.0;
    }
    Matrix x(n, std::vector<double>(d + 1, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) x[i][j + 1] = (z[i][j] - mu[j]) / sd[j];
    }

    constexpr double kPenalty = 1e-4;
    constexpr int kMaxIterations = 500;
    constexpr double kTolerance = 1e-8;

    std::vector<double> beta(d + 1, 0.0);
    auto objective = [&](const std::vector<double>& b) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t j = 0; j <= d; ++j) eta += x[i][j] * b[j];
            // log(1 + e^eta) computed stably
            const double soft = eta > 30 ? eta : std::log1p(std::exp(eta));
            ll += static_cast<double>(t[i]) * eta - soft;
        }
        ll /= static_cast<double>(n);
        for (std::size_t j = 1; j <= d; ++j) ll -= 0.5 * kPenalty * b[j] * b[j];
        return ll;
    };

    double current = objective(beta);
    double step = 1.0;
    std::vector<double> grad(d + 1), candidate(d + 1);
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t j = 0; j <= d; ++j) eta += x[i][j] * beta[j];
            const double p = 1.0 / (1.0 + std::exp(-eta));
            const double resid = static_cast<double>(t[i]) - p;
            for (std::size_t j = 0; j <= d; ++j) grad[j] += x[i][j] * resid;
        }
        for (std::size_t j = 0; j <= d; ++j) grad[j] /= static_cast<double>(n);
        for (std::size_t j = 1; j <= d; ++j) grad[j] -= kPenalty * beta[j];

        double trial = step;
        double next = current;
        while (true) {
            for (std::size_t j = 0; j <= d; ++j) candidate[j] = beta[j] + trial * grad[j];
            next = objective(candidate);
            if (next >= current || trial < 1e-14) break;
            trial *= 0.5;
        }
        double max_move = 0.0;
        for (std::size_t j = 0; j <= d; ++j) {
            max_move = std::max(max_move, std::abs(candidate[j] - beta[j]));
        }
        beta.swap(candidate);
        current = next;
        step = std::min(trial * 2.0, 64.0);
        if (max_move < kTolerance) break;
    }

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j <= d; ++j) eta += x[i][j] * beta[j];
        scores[i] = std::clamp(1.0 / (1.0 + std::exp(-eta)), 1e-12, 1.0 - 1e-12);
    }
    return scores;
}

struct PsmOptions {
    /// Caliper width as a multiple of SD(logit propensity); 0 disables the
    /// caliper and keeps every unit.
    double caliper_scale = 0.2;
};

/// 1-nearest-neighbor matching with replacement on the propensity score.
/// Exactly tied neighbors are averaged, which keeps the estimator
/// deterministic and makes it collapse to the stratified adjustment formula
/// on discrete covariates. Units with no opposite-arm neighbor inside the
/// caliper are dropped (and counted in diagnostics).
inline CausalEstimate ate_psm(const Matrix& z, const std::vector<int>& t,
                              std::span<const double> y, const PsmOptions& opts = {}) {
    const std::size_t n = t.size();
    if (y.size() != n || z.size() != n) {
        throw LengthMismatchError("ate_psm: Z, T, Y sizes disagree");
    }
    detail::check_finite(y, "ate_psm");
    const std::vector<double> ps = logistic_propensity(z, t);

    std::vector<double> logit(n);
    double logit_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        logit[i] = std::log(ps[i] / (1.0 - ps[i]));
        logit_mean += logit[i];
    }
    logit_mean /= static_cast<double>(n);
    double logit_var = 0.0;
    for (double v : logit) logit_var += (v - logit_mean) * (v - logit_mean);
    double caliper = std::numeric_limits<double>::infinity();
    if (opts.caliper_scale > 0) {
        caliper = opts.caliper_scale * std::sqrt(logit_var / static_cast<double>(n));
    }

    std::vector<std::size_t> treated, control;
    for (std::size_t i = 0; i < n; ++i) (t[i] == 1 ? treated : control).push_back(i);

    double total = 0.0;
    std::size_t kept = 0;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pool = t[i] == 1 ? control : treated;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j : pool) best = std::min(best, std::abs(ps[j] - ps[i]));
        double counterfactual = 0.0;
        double ties = 0.0;
        double best_logit_gap = std::numeric_limits<double>::infinity();
        for (std::size_t j : pool) {
            if (std::abs(ps[j] - ps[i]) == best) {
                counterfactual += y[j];
                ties += 1.0;
                best_logit_gap = std::min(best_logit_gap, std::abs(logit[j] - logit[i]));
            }
        }
        if (best_logit_gap > caliper) {
            ++dropped;
            continue;
        }
        counterfactual /= ties;
        total += t[i] == 1 ? y[i] - counterfactual : counterfactual - y[i];
        ++kept;
    }
    if (kept == 0) throw Error("ate_psm: caliper excluded every unit");

    CausalEstimate est;
    est.method = CausalEstimate::Method::psm;
    est.ate = total / static_cast<double>(kept);
    est.n = kept;
    est.diagnostics["n_treated"] = static_cast<double>(treated.size());
    est.diagnostics["n_control"] = static_cast<double>(control.size());
    est.diagnostics["n_dropped"] = static_cast<double>(dropped);
    est.diagnostics["caliper"] = std::isfinite(caliper) ? caliper : 0.0;
    double ps_lo = 1.0, ps_hi = 0.0;
    for (double p : ps) { ps_lo = std::min(ps_lo, p); ps_hi = std::max(ps_hi, p); }
    est.diagnostics["ps_min"] = ps_lo;
    est.diagnostics["ps_max"] = ps_hi;
    return est;
}

/// ATE for dose treatments: the coefficient of T in OLS of Y on [1, T, Z].
inline CausalEstimate ate_linear(std::span<const double> t, std::span<const double> y,
                                 const Matrix& z = {}) {
    const std::size_t n = t.size();
    if (y.size() != n) throw LengthMismatchError("ate_linear: |T| != |Y|");
    if (n < 2) throw LengthMismatchError("ate_linear: need at least 2 units");
    if (!z.empty() && z.size() != n) throw LengthMismatchError("ate_linear: Z rows != |T|");
    detail::check_finite(t, "ate_linear");
    detail::check_finite(y, "ate_linear");
    if (!z.empty()) detail::check_finite(z, "ate_linear");

    double tmean = 0.0;
    for (double v : t) tmean += v;
    tmean /= static_cast<double>(n);
    double tvar = 0.0;
    for (double v : t) tvar += (v - tmean) * (v - tmean);
    if (tvar == 0.0) throw ZeroVarianceError("ate_linear: treatment has zero variance");

    const std::size_t d = z.empty() ? 0 : z[0].size();
    Matrix x(n, std::vector<double>(d + 2, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        x[i][1] = t[i];
        for (std::size_t j = 0; j < d; ++j) x[i][j + 2] = z[i][j];
    }
    const detail::OlsFit fit = detail::ols(x, y);

    CausalEstimate est;
    est.method = CausalEstimate::Method::linear_regression;
    est.ate = fit.beta[1];
    est.n = n;
    const std::size_t k = d + 2;
    const double sigma2 = n > k ? fit.rss / static_cast<double>(n - k) : 0.0;
    est.diagnostics["r_squared"] = fit.tss > 0 ? 1.0 - fit.rss / fit.tss : 0.0;
    est.diagnostics["se_t"] = std::sqrt(sigma2 * fit.xtx_inverse[1][1]);
    est.diagnostics["intercept"] = fit.beta[0];
    return est;
}

/// Exact finite-sample evaluation of the adjustment formula over one
/// discrete covariate: sum over strata of the within-stratum arm difference
/// weighted by the stratum frequency. Brute-force oracle for ate_psm.
inline CausalEstimate ate_stratified(const std::vector<int>& strata, const std::vector<int>& t,
                                     std::span<const double> y) {
    const std::size_t n = t.size();
    if (strata.size() != n || y.size() != n) {
        throw LengthMismatchError("ate_stratified: sizes disagree");
    }
    if (n == 0) throw LengthMismatchError("ate_stratified: empty input");
    detail::check_finite(y, "ate_stratified");

    struct Cell {
        double sum = 0;
        std::size_t count = 0;
    };
    std::map<int, std::array<Cell, 2>> cells;
    for (std::size_t i = 0; i < n; ++i) {
        auto& cell = cells[strata[i]][t[i] == 1 ? 1 : 0];
        cell.sum += y[i];
        cell.count += 1;
    }
    double ate = 0.0;
    for (const auto& [s, arms] : cells) {
        for (int arm = 0; arm < 2; ++arm) {
            if (arms[arm].count == 0) {
                throw EmptyCellError("ate_stratified: empty cell (stratum " + std::to_string(s) +
                                     ", arm " + std::to_string(arm) + ")");
            }
        }
        const double diff = arms[1].sum / static_cast<double>(arms[1].count) -
                            arms[0].sum / static_cast<double>(arms[0].count);
        const double weight =
            static_cast<double>(arms[0].count + arms[1].count) / static_cast<double>(n);
        ate += diff * weight;
    }

    CausalEstimate est;
    est.method = CausalEstimate::Method::stratified;
    est.ate = ate;
    est.n = n;
    est.diagnostics["n_strata"] = static_cast<double>(cells.size());
    return est;
}

/// Quantile bins for feeding a continuous covariate to ate_stratified.
inline std::vector<int> quantile_strata(std::span<const double> values, int k) {
    if (k < 1) throw Error("quantile_strata: k must be >= 1");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cuts;
    for (int j = 1; j < k; ++j) {
        cuts.push_back(sorted[sorted.size() * static_cast<std::size_t>(j) / static_cast<std::size_t>(k)]);
    }
    std::vector<int> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        int s = 0;
        for (double c : cuts) {
            if (values[i] >= c) ++s;
        }
        out[i] = s;
    }
    return out;
}

/// Unadjusted difference of arm means; the "naive" estimate a confounded
/// design inflates.
inline double difference_in_means(const std::vector<int>& t, std::span<const double> y) {
    double s1 = 0, s0 = 0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] == 1) { s1 += y[i]; ++n1; }
        else { s0 += y[i]; ++n0; }
    }
    if (n1 == 0 || n0 == 0) throw SingleArmError("difference_in_means: single-arm input");
    return s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0);
}

} // namespace docode
