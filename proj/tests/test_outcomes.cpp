#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "docode/outcomes.hpp"
#include "docode/rng.hpp"

using namespace docode;

TEST_CASE("cross_entropy on reference values") {
    const std::vector<double> perfect = {1.0, 1.0, 1.0};
    CHECK(cross_entropy(perfect).value == 0.0);

    // -(ln 0.5 + ln 0.25) = 3 ln 2
    const std::vector<double> two = {0.5, 0.25};
    CHECK(cross_entropy(two, CeMode::sum).value == Catch::Approx(3.0 * std::log(2.0)).epsilon(1e-12));

    // mean of -(ln 0.5 + ln 0.5) / 2 = ln 2
    const std::vector<double> halves = {0.5, 0.5};
    CHECK(cross_entropy(halves, CeMode::mean).value ==
          Catch::Approx(std::log(2.0)).epsilon(1e-12));

    // base-2: -(log2 0.5 + log2 0.25) = 3
    CHECK(cross_entropy(two, CeMode::sum, LogBase::two).value == Catch::Approx(3.0).epsilon(1e-12));

    CHECK_THROWS_AS(cross_entropy(std::vector<double>{}), EmptySequenceError);
}

TEST_CASE("cross_entropy clamps zero probabilities") {
    const std::vector<double> with_zero = {0.0};
    const double v = cross_entropy(with_zero).value;
    CHECK(v == Catch::Approx(-std::log(1e-12)));
    CHECK(std::isfinite(v));
}

TEST_CASE("cross_entropy is strictly monotone in each probability") {
    Rng rng(11);
    std::vector<double> ntp;
    for (int i = 0; i < 10; ++i) ntp.push_back(0.1 + 0.85 * rng.uniform());
    const double base = cross_entropy(ntp).value;
    for (std::size_t i = 0; i < ntp.size(); ++i) {
        auto lowered = ntp;
        lowered[i] *= 0.5;
        CHECK(cross_entropy(lowered).value > base);
    }
}

TEST_CASE("sum-mode cross_entropy decomposes over concatenation") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < 1 + rng.below(6); ++i) a.push_back(0.05 + 0.9 * rng.uniform());
        for (std::size_t i = 0; i < 1 + rng.below(6); ++i) b.push_back(0.05 + 0.9 * rng.uniform());
        std::vector<double> ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        CHECK(cross_entropy(ab).value ==
              Catch::Approx(cross_entropy(a).value + cross_entropy(b).value).epsilon(1e-13));
    }
}

namespace {

PredictionRecord record_with(std::vector<std::string> tokens, std::vector<double> ntp) {
    PredictionRecord r;
    r.id = "r";
    r.pair_id = "p";
    r.arm = Arm::control;
    r.tokens = std::move(tokens);
    r.ntp = std::move(ntp);
    return r;
}

} // namespace

TEST_CASE("ntp_by_category averages probabilities per mapped category") {
    const Taxonomy tax = default_taxonomy();
    const auto local = ntp_by_category(record_with({"if", "(", ")"}, {0.2, 0.4, 0.6}), tax);
    REQUIRE(local.mean_ntp.size() == 2);
    CHECK(local.mean_ntp.at("conditionals") == Catch::Approx(0.2));
    CHECK(local.mean_ntp.at("blocks") == Catch::Approx(0.5));
    CHECK(local.counts.at("blocks") == 2);

    const auto none = ntp_by_category(record_with({"foo", "bar"}, {0.1, 0.9}), tax);
    CHECK(none.mean_ntp.empty());

    const auto single = ntp_by_category(record_with({"+", "-", "*"}, {0.3, 0.6, 0.9}), tax);
    REQUIRE(single.mean_ntp.size() == 1);
    CHECK(single.mean_ntp.at("operators") == Catch::Approx(0.6));
}

TEST_CASE("category means stay inside the range of their positions") {
    const Taxonomy tax = default_taxonomy();
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::string> tokens = {"if", "{", "}", "for", "=", "x"};
        rng.shuffle(tokens);
        std::vector<double> ntp;
        for (std::size_t i = 0; i < tokens.size(); ++i) ntp.push_back(rng.uniform());
        const auto local = ntp_by_category(record_with(tokens, ntp), tax);
        double lo = 1.0, hi = 0.0;
        for (double p : ntp) { lo = std::min(lo, p); hi = std::max(hi, p); }
        for (const auto& [cat, m] : local.mean_ntp) {
            CHECK(m >= lo);
            CHECK(m <= hi);
        }
    }
}

TEST_CASE("normalized_ccp rescales the best category to one") {
    const std::map<CategoryId, double> means = {{"a", 0.5}, {"b", 0.25}};
    const auto ccp = normalized_ccp(means);
    CHECK(ccp.at("a") == 1.0);
    CHECK(ccp.at("b") == Catch::Approx(0.5));

    const auto single = normalized_ccp({{"a", 0.3}});
    CHECK(single.at("a") == 1.0);

    CHECK_THROWS_AS(normalized_ccp({}), EmptyMapError);
    CHECK_THROWS_AS(normalized_ccp({{"a", 0.0}, {"b", 0.0}}), ZeroMaxError);
}

TEST_CASE("normalized_ccp preserves argmax and ordering") {
    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        std::map<CategoryId, double> means;
        for (int c = 0; c < 6; ++c) {
            means["cat" + std::to_string(c)] = 0.01 + rng.uniform();
        }
        const auto ccp = normalized_ccp(means);
        for (const auto& [x, vx] : means) {
            for (const auto& [y, vy] : means) {
                if (vx < vy) CHECK(ccp.at(x) < ccp.at(y));
            }
        }
    }
}
