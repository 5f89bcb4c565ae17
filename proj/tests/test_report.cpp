#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "docode/report.hpp"

using namespace docode;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CausalReport sample_report() {
    CausalReport rep;
    rep.testbed = "demo";
    rep.association.kind = AssociationResult::Kind::js_distance;
    rep.association.value = 0.67;
    rep.association.n = 40;
    rep.association.seed = 7;
    rep.association.bootstrap_n = 1000;
    rep.association.bins = 30;
    rep.estimand.kind = Estimand::Kind::backdoor_adjustment;
    rep.estimand.adjustment_set = {"subwords"};
    rep.estimate.ate = -0.0002;
    rep.estimate.method = CausalEstimate::Method::psm;
    rep.estimate.n = 40;
    rep.estimate.diagnostics["n_treated"] = 20;
    rep.refutations.original_ate = -0.0002;
    rep.refutations.r1_random_cause = -0.0003;
    rep.refutations.r2_unobserved_cause = -0.0001;
    rep.refutations.r3_placebo = 0.0001;
    rep.refutations.r4_subset = -0.0002;
    rep.refutations.r1_pass = rep.refutations.r2_pass = true;
    rep.refutations.r3_pass = rep.refutations.r4_pass = true;
    rep.refutations.sd_y = 1.2;
    rep.refutations.seed = 7;
    rep.spurious = detect_spurious(0.67, -0.0002);
    rep.explanations.push_back(
        render_explanation("blocks", -0.0005, "FixedCode", "BuggyCode", -0.0005));
    rep.provenance = {{"seed", 7}};
    return rep;
}

} // namespace

TEST_CASE("format_number uses four significant digits with mixed notation") {
    CHECK(format_number(0.0005) == "0.0005");
    CHECK(format_number(-0.0005) == "-0.0005");
    CHECK(format_number(0.8713) == "0.8713");
    CHECK(format_number(-2.33e-05) == "-2.33e-05");
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(123456.0) == "1.235e+05");
}

TEST_CASE("render_explanation fills the template") {
    const Explanation worse =
        render_explanation("blocks", -0.0005, "FixedCode", "BuggyCode", -0.0005);
    CHECK(worse.text ==
          "blocks performed worse by 0.0005, due to a change in model application from "
          "FixedCode to BuggyCode, with a causal analysis ATE of -0.0005");

    const Explanation better = render_explanation("global", 0.87, "Clone1", "Clone2", 0.8713);
    CHECK(better.text ==
          "global performed better by 0.87, due to a change in model application from "
          "Clone1 to Clone2, with a causal analysis ATE of 0.8713");

    const Explanation flat = render_explanation("loops", 0.0, "A", "B", 0.0);
    CHECK(flat.text ==
          "loops was unaffected, due to a change in model application from A to B, "
          "with a causal analysis ATE of 0");

    CHECK_THROWS_AS(render_explanation("x", std::nan(""), "A", "B", 0.0), NonFiniteError);
}

TEST_CASE("rendered text matches the template skeleton with slots blanked") {
    const Explanation e = render_explanation("oop", -0.123, "Fixed", "Buggy", -0.125);
    std::string text = e.text;
    // blank the slots back out
    auto blank = [&](const std::string& value) {
        const auto pos = text.find(value);
        REQUIRE(pos != std::string::npos);
        text = text.substr(0, pos) + "_" + text.substr(pos + value.size());
    };
    blank("oop");
    blank("0.123");
    blank("Fixed");
    blank("Buggy");
    blank("-0.125");
    CHECK(text ==
          "_ performed worse by _, due to a change in model application from _ to _, "
          "with a causal analysis ATE of _");
}

TEST_CASE("emit_report json round-trips and sorts keys") {
    const CausalReport rep = sample_report();
    const std::string doc = emit_report(rep, ReportFormat::json);
    const auto parsed = nlohmann::json::parse(doc);
    CHECK(parsed["testbed"] == "demo");
    CHECK(parsed["association"]["value"] == 0.67);
    CHECK(parsed["spurious"]["verdict"] == "spurious");
    CHECK(parsed["explanations"][0]["concept"] == "blocks");

    // determinism
    CHECK(emit_report(rep, ReportFormat::json) == doc);

    // sorted keys at the top level
    std::vector<std::string> keys;
    for (auto it = parsed.begin(); it != parsed.end(); ++it) keys.push_back(it.key());
    CHECK(std::is_sorted(keys.begin(), keys.end()));
}

TEST_CASE("markdown report flags spurious verdicts and keeps table order") {
    const CausalReport rep = sample_report();
    const std::string md = emit_report(rep, ReportFormat::markdown);
    CHECK(md.find("spurious correlation") != std::string::npos);

    const auto assoc = md.find("| Association");
    const auto ate = md.find("| Causal Eff. ATE");
    const auto r1 = md.find("| Random Comm. Cause");
    const auto r2 = md.find("| Unobserved Comm. Cause");
    const auto r3 = md.find("| Placebo");
    const auto r4 = md.find("| Remove Subset");
    REQUIRE(assoc != std::string::npos);
    CHECK(assoc < ate);
    CHECK(ate < r1);
    CHECK(r1 < r2);
    CHECK(r2 < r3);
    CHECK(r3 < r4);

    CHECK(emit_report(rep, ReportFormat::markdown) == md);
}

TEST_CASE("plot emitters write csv files and refuse empty series") {
    const auto dir = std::filesystem::temp_directory_path() / "docode_report_test";
    std::filesystem::create_directories(dir);

    SECTION("two bootstrap distributions make a two-column csv") {
        emit_plot_csv({{"a", {1.0, 2.0, 3.0}}, {"b", {4.0, 5.0, 6.0}}}, dir / "two.csv");
        const std::string text = slurp(dir / "two.csv");
        CHECK(text == "a,b\n1,4\n2,5\n3,6\n");
    }
    SECTION("scatter rows carry the arm label") {
        emit_scatter_csv({1.0, 2.0}, {3.0, 4.0}, {"treatment", "control"}, dir / "sc.csv");
        CHECK(slurp(dir / "sc.csv") == "x,y,arm\n1,3,treatment\n2,4,control\n");
    }
    SECTION("empty series are refused before any write") {
        CHECK_THROWS_AS(emit_plot_csv({{"a", {}}}, dir / "no.csv"), IoError);
        CHECK_THROWS_AS(emit_plot_csv({}, dir / "no.csv"), IoError);
        CHECK_THROWS_AS(emit_scatter_csv({}, {}, {}, dir / "no.csv"), IoError);
        CHECK(!std::filesystem::exists(dir / "no.csv"));
    }
    SECTION("svg plots render") {
        emit_histogram_svg({1.0, 2.0, 2.5}, {4.0, 5.0}, 8, dir / "h.svg");
        emit_scatter_svg({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}, dir / "s.svg");
        CHECK(slurp(dir / "h.svg").find("<svg") == 0);
        CHECK(slurp(dir / "s.svg").find("<line") != std::string::npos);
    }
}
