#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "docode/refutation.hpp"
#include "docode/rng.hpp"

using namespace docode;

namespace {

EstimationData confounded(std::size_t n, std::uint64_t seed, double effect = 2.0) {
    EstimationData d;
    d.binary = true;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.normal();
        const double t = z + rng.normal() > 0 ? 1.0 : 0.0;
        d.z.push_back({z});
        d.t.push_back(t);
        d.y.push_back(effect * t + 3.0 * z + rng.normal());
    }
    return d;
}

} // namespace

TEST_CASE("appending a zero-variance covariate leaves the estimate unchanged") {
    const EstimationData d = confounded(1500, 21);
    const double base = ate_psm(d.z, binary_arms(d.t), d.y).ate;
    Matrix with_constant = d.z;
    for (auto& row : with_constant) row.push_back(5.0);
    CHECK(ate_psm(with_constant, binary_arms(d.t), d.y).ate == base);  // exact
}

TEST_CASE("random common cause stays close to the original estimate") {
    const EstimationData d = confounded(3000, 22);
    const Estimator est = make_psm_estimator();
    const double base = est(d);
    const double r1 = refute_random_common_cause(d, est, 77);
    CHECK(std::abs(r1 - base) <= std::max(0.1 * std::abs(base), 0.01));
    // deterministic per seed
    CHECK(refute_random_common_cause(d, est, 77) == r1);
    CHECK(refute_random_common_cause(d, est, 78) != r1);
}

TEST_CASE("unobserved common cause with zero strengths is a null perturbation") {
    const EstimationData d = confounded(1000, 23);
    const Estimator est = make_psm_estimator();
    const double base = est(d);
    CHECK(refute_unobserved_common_cause(d, est, 0.0, 0.0, 5) == base);
    CHECK_THROWS_AS(
        refute_unobserved_common_cause(d, est, std::nan(""), 0.2, 5), NonFiniteError);
}

TEST_CASE("unobserved common cause shifts but does not flip a strong effect") {
    EstimationData d;
    d.binary = true;
    Rng rng(24);
    for (int i = 0; i < 3000; ++i) {
        const double t = rng.uniform() < 0.5 ? 1.0 : 0.0;
        d.z.push_back({rng.normal()});
        d.t.push_back(t);
        d.y.push_back(2.0 * t + 0.1 * rng.normal());
    }
    const Estimator est = make_psm_estimator();
    const double base = est(d);
    const double r2 = refute_unobserved_common_cause(d, est, 0.5, 0.5, 9);
    CHECK(r2 * base > 0);
    CHECK(std::abs(r2) < 2.0 * std::abs(base));
    CHECK(std::abs(r2) > 0.5 * std::abs(base));
}

TEST_CASE("placebo preserves the treatment multiset and tends to zero") {
    const EstimationData d = confounded(4000, 25);

    // estimator that just counts treated units: permutation must not change it
    const Estimator count_treated = [](const EstimationData& data) {
        double s = 0;
        for (double t : data.t) s += t;
        return s;
    };
    CHECK(refute_placebo(d, count_treated, 3) == count_treated(d));

    const Estimator est = make_psm_estimator();
    const double r3 = refute_placebo(d, est, 3);
    CHECK(std::abs(r3) <= 0.05 * stddev_of(d.y));

    SECTION("constant outcome gives exactly zero") {
        EstimationData flat = d;
        std::fill(flat.y.begin(), flat.y.end(), 1.0);
        CHECK(refute_placebo(flat, est, 3) == 0.0);
    }
}

TEST_CASE("subset refutation") {
    const EstimationData d = confounded(3000, 26);
    const Estimator est = make_psm_estimator();
    const double base = est(d);

    SECTION("keep everything reproduces the estimate") {
        CHECK(refute_subset(d, est, 1.0, 11) == base);
    }
    SECTION("keep 0.8 stays within 15%") {
        const double r4 = refute_subset(d, est, 0.8, 11);
        CHECK(std::abs(r4 - base) <= 0.15 * std::abs(base));
    }
    SECTION("tiny subsets are rejected") {
        EstimationData small = confounded(100, 27);
        CHECK_THROWS_AS(refute_subset(small, est, 0.0001, 11), SubsetTooSmallError);
        CHECK_THROWS_AS(refute_subset(small, est, 1.5, 11), Error);
    }
}

TEST_CASE("run_refutations aggregates verdicts deterministically") {
    const EstimationData d = confounded(3000, 28);
    const Estimator est = make_psm_estimator();
    const double base = est(d);
    RefutationOptions opts;
    opts.seed = 404;
    const RefutationReport rep = run_refutations(d, est, base, opts);
    CHECK(rep.original_ate == base);
    CHECK(rep.seed == 404);
    CHECK(rep.r1_pass);
    CHECK(rep.r3_pass);
    CHECK(rep.r4_pass);
    CHECK(rep.sd_y == Catch::Approx(stddev_of(d.y)));

    const RefutationReport again = run_refutations(d, est, base, opts);
    CHECK(again.r1_random_cause == rep.r1_random_cause);
    CHECK(again.r2_unobserved_cause == rep.r2_unobserved_cause);
    CHECK(again.r3_placebo == rep.r3_placebo);
    CHECK(again.r4_subset == rep.r4_subset);
}

TEST_CASE("detect_spurious applies the threshold rules") {
    // strong association, negligible effect
    const SpuriousVerdict a = detect_spurious(0.67, -0.0002);
    CHECK(a.verdict == SpuriousVerdict::Kind::spurious);

    // strong association and a real effect
    const SpuriousVerdict b = detect_spurious(0.598, 0.8713);
    CHECK(b.verdict == SpuriousVerdict::Kind::causal);

    // both negligible
    const SpuriousVerdict c = detect_spurious(0.01, 0.001);
    CHECK(c.verdict == SpuriousVerdict::Kind::no_effect);

    // weak association never counts as causal, whatever the effect
    CHECK(detect_spurious(0.1, 0.5).verdict == SpuriousVerdict::Kind::no_effect);

    CHECK_THROWS_AS(detect_spurious(std::nan(""), 0.0), NonFiniteError);

    SECTION("custom thresholds are honored and echoed") {
        const SpuriousVerdict v = detect_spurious(0.2, 0.01, {0.15, 0.02});
        CHECK(v.verdict == SpuriousVerdict::Kind::spurious);
        CHECK(v.thresholds.assoc_min == 0.15);
    }
}
