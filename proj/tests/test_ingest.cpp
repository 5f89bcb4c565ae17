#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "docode/ingest.hpp"
#include "docode/rng.hpp"

using namespace docode;

namespace {

std::string line(const std::string& id, const std::string& pair, const std::string& arm,
                 const std::string& tokens, const std::string& ntp,
                 const std::string& extra = "") {
    return R"({"id":")" + id + R"(","pair_id":")" + pair + R"(","arm":")" + arm +
           R"(","tokens":)" + tokens + R"(,"ntp":)" + ntp + extra + "}\n";
}

// independent full-matrix oracle for edit distance
std::size_t dp_oracle(const std::string& a, const std::string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                            std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
        }
    }
    return d[a.size()][b.size()];
}

std::string random_string(Rng& rng, std::size_t max_len) {
    std::string s;
    const std::size_t len = rng.below(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) s.push_back(static_cast<char>('a' + rng.below(3)));
    return s;
}

} // namespace

TEST_CASE("parse_prediction_log reads well-formed binary records") {
    const std::string log = line("r1", "p1", "treatment", R"x(["if","(",")"])x", "[0.2,0.4,0.6]") +
                            line("r2", "p1", "control", R"x(["if","(",")"])x", "[0.3,0.5,0.7]",
                                 R"(,"source":"int x;")");
    const Testbed tb = parse_prediction_log(log, InterventionKind::binary, "demo");
    REQUIRE(tb.records.size() == 2);
    CHECK(tb.records[0].arm == Arm::treatment);
    CHECK(tb.records[0].tokens.size() == 3);
    CHECK(tb.records[1].source == "int x;");
    CHECK(tb.name == "demo");
}

TEST_CASE("parse errors carry line numbers") {
    SECTION("token/ntp misalignment") {
        const std::string log = line("r1", "p1", "treatment", R"(["a","b","c"])", "[0.1,0.2]");
        try {
            parse_prediction_log(log, InterventionKind::binary);
            FAIL("expected AlignmentError");
        } catch (const AlignmentError& e) {
            CHECK(std::string{e.what()}.find("line 1") != std::string::npos);
            CHECK(std::string{e.what()}.find("3 tokens vs 2") != std::string::npos);
        }
    }
    SECTION("probability out of range") {
        const std::string log =
            "\n" + line("r1", "p1", "control", R"(["a"])", "[1.2]");
        try {
            parse_prediction_log(log, InterventionKind::binary);
            FAIL("expected ProbabilityRangeError");
        } catch (const ProbabilityRangeError& e) {
            CHECK(std::string{e.what()}.find("line 2") != std::string::npos);
        }
    }
    SECTION("unknown or missing arm") {
        CHECK_THROWS_AS(parse_prediction_log(line("r1", "p1", "buggy", R"(["a"])", "[0.5]"),
                                             InterventionKind::binary),
                        ArmError);
        CHECK_THROWS_AS(
            parse_prediction_log(R"({"id":"r1","pair_id":"p1","tokens":["a"],"ntp":[0.5]})",
                                 InterventionKind::binary),
            ArmError);
    }
    SECTION("continuous records need a dose or a source") {
        CHECK_THROWS_AS(
            parse_prediction_log(R"({"id":"r1","pair_id":"p1","tokens":["a"],"ntp":[0.5]})",
                                 InterventionKind::continuous),
            ArmError);
        CHECK_NOTHROW(parse_prediction_log(
            R"({"id":"r1","pair_id":"p1","dose":3,"tokens":["a"],"ntp":[0.5]})",
            InterventionKind::continuous));
    }
    SECTION("malformed json") {
        CHECK_THROWS_AS(parse_prediction_log("{oops", InterventionKind::binary), ParseError);
        CHECK_THROWS_AS(
            parse_prediction_log(R"({"id":"r1","pair_id":"p","arm":"control","tokens":[],"ntp":[]})",
                                 InterventionKind::binary),
            ParseError);
    }
}

TEST_CASE("testbeds round-trip through serialization") {
    const std::string log =
        line("r1", "p1", "treatment", R"x(["if","(",")"])x", "[0.25,0.5,0.125]") +
        line("r2", "p1", "control", R"x(["if","(",")"])x", "[0.3,0.55,0.75]",
             R"(,"source":"int x = 1;\nreturn x;")");
    const Testbed tb = parse_prediction_log(log, InterventionKind::binary, "rt");
    const Testbed again = parse_prediction_log(serialize_testbed(tb), InterventionKind::binary, "rt");
    CHECK(tb == again);
}

TEST_CASE("pair_records pairs opposite arms by pair_id") {
    const std::string log = line("r1", "p2", "treatment", R"(["a"])", "[0.5]") +
                            line("r2", "p2", "control", R"(["a"])", "[0.5]") +
                            line("r3", "p1", "control", R"(["a"])", "[0.5]") +
                            line("r4", "p1", "treatment", R"(["a"])", "[0.5]");
    const Testbed tb = parse_prediction_log(log, InterventionKind::binary);
    const auto pairs = pair_records(tb);
    REQUIRE(pairs.size() == 2);
    // sorted by pair_id; first element of each pair is the treatment record
    CHECK(tb.records[pairs[0].first].id == "r4");
    CHECK(tb.records[pairs[0].second].id == "r3");
    CHECK(tb.records[pairs[1].first].id == "r1");
}

TEST_CASE("pair_records rejects dangling and duplicated pair ids") {
    const std::string log = line("r1", "m1", "treatment", R"(["a"])", "[0.5]") +
                            line("r2", "m1", "control", R"(["a"])", "[0.5]") +
                            line("r3", "m1", "control", R"(["a"])", "[0.5]");
    const Testbed tb = parse_prediction_log(log, InterventionKind::binary);
    try {
        pair_records(tb);
        FAIL("expected UnpairedError");
    } catch (const UnpairedError& e) {
        CHECK(std::string{e.what()}.find("m1") != std::string::npos);
    }

    Testbed continuous;
    continuous.kind = InterventionKind::continuous;
    CHECK_THROWS_AS(pair_records(continuous), KindError);
}

TEST_CASE("levenshtein on reference pairs") {
    CHECK(levenshtein("kitten", "sitting") == 3);
    CHECK(levenshtein("abc", "abc") == 0);
    CHECK(levenshtein("", "abc") == 3);
    CHECK(levenshtein("abc", "") == 3);
    CHECK(levenshtein("", "") == 0);
    CHECK(levenshtein_seq(std::vector<std::string>{"int", "x"},
                          std::vector<std::string>{"int", "y"}) == 1);
}

TEST_CASE("levenshtein satisfies the metric axioms") {
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const std::string a = random_string(rng, 12);
        const std::string b = random_string(rng, 12);
        const std::string c = random_string(rng, 12);
        const auto dab = levenshtein(a, b);
        CHECK(dab == dp_oracle(a, b));
        CHECK(dab == levenshtein(b, a));
        CHECK(levenshtein(a, a) == 0);
        CHECK(levenshtein(a, c) <= dab + levenshtein(b, c));
    }
}

TEST_CASE("dose_clone_pairs attaches edit distances per pair") {
    const std::string log =
        R"({"id":"a1","pair_id":"c1","tokens":["int"],"ntp":[0.5],"source":"int abc = 1;"})" "\n"
        R"({"id":"a2","pair_id":"c1","tokens":["int"],"ntp":[0.5],"source":"int xyz = 1;"})" "\n"
        R"({"id":"b1","pair_id":"c2","tokens":["int"],"ntp":[0.5],"source":"int q;"})" "\n"
        R"({"id":"b2","pair_id":"c2","tokens":["int"],"ntp":[0.5],"source":"int q;"})" "\n";
    const Testbed tb = parse_prediction_log(log, InterventionKind::continuous);
    const Testbed dosed = dose_clone_pairs(tb);
    CHECK(dosed.kind == InterventionKind::continuous);
    // one renamed identifier of length 3 -> 3 character edits (checked
    // against the DP oracle above)
    CHECK(dosed.records[0].dose == 3.0);
    CHECK(dosed.records[1].dose == 3.0);
    CHECK(dosed.records[2].dose == 0.0);
    CHECK(dosed.records[3].dose == 0.0);

    const Testbed normalized = dose_clone_pairs(tb, {EditGranularity::character, true});
    CHECK(*normalized.records[0].dose == Catch::Approx(3.0 / 12.0));

    const Testbed by_token = dose_clone_pairs(tb, {EditGranularity::token, false});
    CHECK(by_token.records[0].dose == 0.0);  // identical token fields
}

TEST_CASE("dose_clone_pairs requires sources and exact pairs") {
    const std::string no_source =
        R"({"id":"a1","pair_id":"c1","dose":1,"tokens":["int"],"ntp":[0.5]})" "\n"
        R"({"id":"a2","pair_id":"c1","dose":1,"tokens":["int"],"ntp":[0.5],"source":"x"})" "\n";
    const Testbed tb = parse_prediction_log(no_source, InterventionKind::continuous);
    CHECK_THROWS_AS(dose_clone_pairs(tb), MissingSourceError);

    const std::string triple =
        R"({"id":"a1","pair_id":"c1","tokens":["a"],"ntp":[0.5],"source":"x"})" "\n"
        R"({"id":"a2","pair_id":"c1","tokens":["a"],"ntp":[0.5],"source":"x"})" "\n"
        R"({"id":"a3","pair_id":"c1","tokens":["a"],"ntp":[0.5],"source":"x"})" "\n";
    CHECK_THROWS_AS(dose_clone_pairs(parse_prediction_log(triple, InterventionKind::continuous)),
                    UnpairedError);
}
