#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "docode/causal.hpp"
#include "docode/errors.hpp"
#include "docode/rng.hpp"
#include "docode/stats.hpp"

namespace docode {

/// Inputs a refutation can perturb and re-estimate from. T is stored as
/// doubles; binary arms are encoded 0/1.
struct EstimationData {
    Matrix z;
    std::vector<double> t;
    std::vector<double> y;
    bool binary = true;
};

using Estimator = std::function<double(const EstimationData&)>;

inline std::vector<int> binary_arms(const std::vector<double>& t) {
    std::vector<int> arms(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) arms[i] = t[i] > 0.5 ? 1 : 0;
    return arms;
}

inline Estimator make_psm_estimator(PsmOptions opts = {}) {
    return [opts](const EstimationData& d) {
        return ate_psm(d.z, binary_arms(d.t), d.y, opts).ate;
    };
}

inline Estimator make_linear_estimator() {
    return [](const EstimationData& d) { return ate_linear(d.t, d.y, d.z).ate; };
}

/// R1: append an independent standard-normal covariate and re-estimate.
inline double refute_random_common_cause(const EstimationData& data, const Estimator& estimator,
                                         std::uint64_t seed) {
    EstimationData perturbed = data;
    Rng rng(seed);
    if (perturbed.z.size() != data.t.size()) perturbed.z.assign(data.t.size(), {});
    for (auto& row : perturbed.z) row.push_back(rng.normal());
    return estimator(perturbed);
}

/// R2: simulate a latent confounder u ~ N(0,1) that shifts the treatment
/// propensity on the logit scale by effect_on_t * u (binary arms flip toward
/// the shift with probability 2*sigmoid(|shift|) - 1; doses move additively)
/// and shifts the outcome by effect_on_y * u. Re-estimates without adding u
/// to the covariates.
inline double refute_unobserved_common_cause(const EstimationData& data,
                                             const Estimator& estimator, double effect_on_t,
                                             double effect_on_y, std::uint64_t seed) {
    if (!std::isfinite(effect_on_t) || !std::isfinite(effect_on_y)) {
        throw NonFiniteError("refute_unobserved_common_cause: non-finite effect strength");
    }
    EstimationData perturbed = data;
    Rng rng(seed);
    for (std::size_t i = 0; i < data.t.size(); ++i) {
        const double u = rng.normal();
        const double v = rng.uniform();
        if (data.binary) {
            const double shift = effect_on_t * u;
            const double flip = 2.0 / (1.0 + std::exp(-std::abs(shift))) - 1.0;
            if (v < flip) perturbed.t[i] = shift > 0 ? 1.0 : 0.0;
        } else {
            perturbed.t[i] = data.t[i] + effect_on_t * u;
        }
        perturbed.y[i] = data.y[i] + effect_on_y * u;
    }
    return estimator(perturbed);
}

/// R3: uniformly permute the treatment column (its marginal distribution is
/// preserved exactly) and re-estimate.
inline double refute_placebo(const EstimationData& data, const Estimator& estimator,
                             std::uint64_t seed) {
    EstimationData perturbed = data;
    Rng rng(seed);
    rng.shuffle(perturbed.t);
    return estimator(perturbed);
}

/// R4: re-estimate on a uniform subsample without replacement.
inline double refute_subset(const EstimationData& data, const Estimator& estimator,
                            double keep_fraction, std::uint64_t seed) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
        throw Error("refute_subset: keep_fraction must be in (0, 1]");
    }
    const auto n = data.t.size();
    const auto k = static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(n)));
    if (k < 2) {
        throw SubsetTooSmallError("refute_subset: subset of " + std::to_string(k) +
                                  " units cannot be estimated");
    }
    Rng rng(seed);
    auto keep = rng.sample_without_replacement(n, k);
    std::sort(keep.begin(), keep.end());

    EstimationData subset;
    subset.binary = data.binary;
    subset.z.reserve(k);
    subset.t.reserve(k);
    subset.y.reserve(k);
    for (std::size_t idx : keep) {
        if (!data.z.empty()) subset.z.push_back(data.z[idx]);
        subset.t.push_back(data.t[idx]);
        subset.y.push_back(data.y[idx]);
    }
    if (subset.z.empty()) subset.z.assign(k, {});
    try {
        return estimator(subset);
    } catch (const SingleArmError&) {
        throw SubsetTooSmallError("refute_subset: subsample lost one arm entirely");
    }
}

struct RefutationTolerances {
    double r1_relative = 0.1;
    double r1_absolute = 0.01;
    double r2_factor = 2.0;     // |new| within this factor of |original|, same sign
    double r2_absolute = 0.02;  // both-near-zero escape hatch
    double r3_sd_scale = 0.05;  // of SD(Y)
    double r3_absolute = 0.02;
    double r4_relative = 0.15;
    double r4_absolute = 0.02;
};

struct RefutationOptions {
    std::uint64_t seed = 0;
    double keep_fraction = 0.8;
    double effect_on_t = 0.2;
    double effect_on_y = 0.2;
    RefutationTolerances tolerances;
};

struct RefutationReport {
    double original_ate = 0;
    double r1_random_cause = 0;
    double r2_unobserved_cause = 0;
    double r3_placebo = 0;
    double r4_subset = 0;
    bool r1_pass = false;
    bool r2_pass = false;
    bool r3_pass = false;
    bool r4_pass = false;
    double sd_y = 0;
    std::uint64_t seed = 0;
    RefutationTolerances tolerances;

    bool all_pass() const { return r1_pass && r2_pass && r3_pass && r4_pass; }
};

/// Runs all four refutations with per-method derived seeds (seed + method
/// index) and applies the pass rules.
inline RefutationReport run_refutations(const EstimationData& data, const Estimator& estimator,
                                        double original_ate, const RefutationOptions& opts = {}) {
    RefutationReport rep;
    rep.original_ate = original_ate;
    rep.seed = opts.seed;
    rep.tolerances = opts.tolerances;
    rep.sd_y = stddev_of(data.y);

    const auto& tol = opts.tolerances;
    rep.r1_random_cause = refute_random_common_cause(data, estimator, opts.seed + 1);
    rep.r1_pass = std::abs(rep.r1_random_cause - original_ate) <=
                  std::max(tol.r1_relative * std::abs(original_ate), tol.r1_absolute);

    rep.r2_unobserved_cause = refute_unobserved_common_cause(
        data, estimator, opts.effect_on_t, opts.effect_on_y, opts.seed + 2);
    {
        const double a = std::abs(original_ate);
        const double b = std::abs(rep.r2_unobserved_cause);
        const bool same_sign = original_ate * rep.r2_unobserved_cause > 0;
        rep.r2_pass = (a <= tol.r2_absolute && b <= tol.r2_absolute) ||
                      (same_sign && b <= tol.r2_factor * a && b >= a / tol.r2_factor);
    }

    rep.r3_placebo = refute_placebo(data, estimator, opts.seed + 3);
    rep.r3_pass = std::abs(rep.r3_placebo) <=
                  std::max(tol.r3_sd_scale * rep.sd_y, tol.r3_absolute);

    rep.r4_subset = refute_subset(data, estimator, opts.keep_fraction, opts.seed + 4);
    rep.r4_pass = std::abs(rep.r4_subset - original_ate) <=
                  std::max(tol.r4_relative * std::abs(original_ate), tol.r4_absolute);
    return rep;
}

struct SpuriousThresholds {
    double assoc_min = 0.3;
    double ate_min = 0.05;
};

struct SpuriousVerdict {
    enum class Kind { causal, spurious, no_effect };
    double association = 0;
    double ate = 0;
    Kind verdict = Kind::no_effect;
    SpuriousThresholds thresholds;
};

inline std::string_view verdict_name(SpuriousVerdict::Kind k) {
    switch (k) {
        case SpuriousVerdict::Kind::causal: return "causal";
        case SpuriousVerdict::Kind::spurious: return "spurious";
        case SpuriousVerdict::Kind::no_effect: return "no_effect";
    }
    return "no_effect";
}

/// Confounding-bias detector: a strong association whose interventional
/// effect vanishes is flagged spurious.
inline SpuriousVerdict detect_spurious(double association, double ate,
                                       SpuriousThresholds thresholds = {}) {
    if (!std::isfinite(association) || !std::isfinite(ate)) {
        throw NonFiniteError("detect_spurious: non-finite input");
    }
    SpuriousVerdict v;
    v.association = association;
    v.ate = ate;
    v.thresholds = thresholds;
    const bool strong_assoc = std::abs(association) >= thresholds.assoc_min;
    const bool strong_ate = std::abs(ate) >= thresholds.ate_min;
    if (strong_assoc && !strong_ate) v.verdict = SpuriousVerdict::Kind::spurious;
    else if (strong_assoc && strong_ate) v.verdict = SpuriousVerdict::Kind::causal;
    else v.verdict = SpuriousVerdict::Kind::no_effect;
    return v;
}

} // namespace docode
