#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "docode/errors.hpp"

namespace docode {

enum class InterventionKind { binary, continuous, discrete };
enum class Arm { treatment, control };

inline std::string_view kind_name(InterventionKind k) {
    switch (k) {
        case InterventionKind::binary: return "binary";
        case InterventionKind::continuous: return "continuous";
        case InterventionKind::discrete: return "discrete";
    }
    return "binary";
}

inline InterventionKind parse_kind(std::string_view s) {
    if (s == "binary") return InterventionKind::binary;
    if (s == "continuous") return InterventionKind::continuous;
    if (s == "discrete") return InterventionKind::discrete;
    throw KindError("unknown intervention kind \"" + std::string{s} + "\"");
}

inline std::string_view arm_name(Arm a) {
    return a == Arm::treatment ? "treatment" : "control";
}

/// One scored method: surface tokens aligned position-by-position with the
/// probability the model assigned to each ground-truth token.
struct PredictionRecord {
    std::string id;
    std::string pair_id;
    std::optional<Arm> arm;       // binary testbeds
    std::optional<double> dose;   // continuous / discrete testbeds
    std::vector<std::string> tokens;
    std::vector<double> ntp;
    std::optional<std::string> source;

    bool operator==(const PredictionRecord&) const = default;
};

struct Testbed {
    std::string name;
    InterventionKind kind = InterventionKind::binary;
    std::vector<PredictionRecord> records;

    bool operator==(const Testbed&) const = default;
};

namespace detail {

inline PredictionRecord parse_record_line(const std::string& line, std::size_t line_no,
                                          InterventionKind kind) {
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + e.what());
    }
    if (!obj.is_object()) throw ParseError(where + "expected a JSON object");

    PredictionRecord rec;
    if (!obj.contains("id") || !obj["id"].is_string()) throw ParseError(where + "missing string \"id\"");
    rec.id = obj["id"].get<std::string>();
    if (!obj.contains("pair_id") || !obj["pair_id"].is_string()) {
        throw ParseError(where + "missing string \"pair_id\"");
    }
    rec.pair_id = obj["pair_id"].get<std::string>();

    if (!obj.contains("tokens") || !obj["tokens"].is_array() || obj["tokens"].empty()) {
        throw ParseError(where + "missing non-empty \"tokens\" array");
    }
    for (const auto& t : obj["tokens"]) {
        if (!t.is_string()) throw ParseError(where + "non-string entry in \"tokens\"");
        rec.tokens.push_back(t.get<std::string>());
    }
    if (!obj.contains("ntp") || !obj["ntp"].is_array()) {
        throw ParseError(where + "missing \"ntp\" array");
    }
    for (const auto& p : obj["ntp"]) {
        if (!p.is_number()) throw ParseError(where + "non-numeric entry in \"ntp\"");
        rec.ntp.push_back(p.get<double>());
    }
    if (rec.tokens.size() != rec.ntp.size()) {
        throw AlignmentError(where + std::to_string(rec.tokens.size()) + " tokens vs " +
                             std::to_string(rec.ntp.size()) + " ntp values");
    }
    for (double p : rec.ntp) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ProbabilityRangeError(where + "ntp value " + std::to_string(p) +
                                        " outside [0, 1]");
        }
    }

    if (obj.contains("arm")) {
        if (!obj["arm"].is_string()) throw ArmError(where + "\"arm\" must be a string");
        const std::string a = obj["arm"].get<std::string>();
        if (a == "treatment") rec.arm = Arm::treatment;
        else if (a == "control") rec.arm = Arm::control;
        else throw ArmError(where + "unknown arm \"" + a + "\"");
    }
    if (obj.contains("dose")) {
        if (!obj["dose"].is_number()) throw ArmError(where + "\"dose\" must be a number");
        rec.dose = obj["dose"].get<double>();
        if (!std::isfinite(*rec.dose)) throw ArmError(where + "non-finite dose");
    }
    if (obj.contains("source")) {
        if (!obj["source"].is_string()) throw ParseError(where + "\"source\" must be a string");
        rec.source = obj["source"].get<std::string>();
    }

    if (kind == InterventionKind::binary) {
        if (!rec.arm) throw ArmError(where + "binary testbed record lacks \"arm\"");
    } else {
        if (!rec.dose && !rec.source) {
            throw ArmError(where + std::string{kind_name(kind)} +
                           " testbed record lacks both \"dose\" and \"source\"");
        }
    }
    return rec;
}

} // namespace detail

/// Parses a JSONL prediction log, one record per line. Blank lines are
/// skipped; every error message carries the 1-based line number.
inline Testbed parse_prediction_log(std::istream& in, InterventionKind kind,
                                    std::string name = {}) {
    Testbed tb;
    tb.name = std::move(name);
    tb.kind = kind;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        tb.records.push_back(detail::parse_record_line(line, line_no, kind));
    }
    return tb;
}

inline Testbed parse_prediction_log(const std::string& text, InterventionKind kind,
                                    std::string name = {}) {
    std::istringstream in(text);
    return parse_prediction_log(in, kind, std::move(name));
}

/// Canonical JSONL form; parsing it back yields an identical testbed.
inline std::string serialize_testbed(const Testbed& tb) {
    std::string out;
    for (const auto& r : tb.records) {
        nlohmann::ordered_json obj;
        obj["id"] = r.id;
        obj["pair_id"] = r.pair_id;
        if (r.arm) obj["arm"] = std::string{arm_name(*r.arm)};
        if (r.dose) obj["dose"] = *r.dose;
        obj["tokens"] = r.tokens;
        obj["ntp"] = r.ntp;
        if (r.source) obj["source"] = *r.source;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

/// Treatment/control index pairs, one per pair_id, ordered by pair_id.
/// Every pair_id must occur exactly twice with opposite arms.
inline std::vector<std::pair<std::size_t, std::size_t>> pair_records(const Testbed& tb) {
    if (tb.kind != InterventionKind::binary) {
        throw KindError("pair_records requires a binary testbed, got " +
                        std::string{kind_name(tb.kind)});
    }
    struct Slot {
        std::optional<std::size_t> treatment;
        std::optional<std::size_t> control;
        bool broken = false;
    };
    std::map<std::string, Slot> groups;
    for (std::size_t i = 0; i < tb.records.size(); ++i) {
        const auto& r = tb.records[i];
        if (!r.arm) throw ArmError("record \"" + r.id + "\" lacks an arm");
        Slot& s = groups[r.pair_id];
        auto& slot = (*r.arm == Arm::treatment) ? s.treatment : s.control;
        if (slot) s.broken = true;
        else slot = i;
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::string dangling;
    for (const auto& [pid, s] : groups) {
        if (s.broken || !s.treatment || !s.control) {
            if (!dangling.empty()) dangling += ", ";
            dangling += pid;
            continue;
        }
        pairs.emplace_back(*s.treatment, *s.control);
    }
    if (!dangling.empty()) {
        throw UnpairedError("unpaired or duplicated pair_ids: " + dangling);
    }
    return pairs;
}

/// Minimum number of insert / modify / remove edits turning a into b.
/// Two-row dynamic program; works on any random-access sequence whose
/// elements compare with ==.
template <typename Seq>
std::size_t levenshtein_seq(const Seq& a, const Seq& b) {
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    if (m == 0) return n;
    if (n == 0) return m;

    std::vector<std::size_t> row(n + 1);
    for (std::size_t j = 0; j <= n; ++j) row[j] = j;
    for (std::size_t i = 1; i <= m; ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= n; ++j) {
            const std::size_t up = row[j];
            if (a[i - 1] == b[j - 1]) {
                row[j] = diag;
            } else {
                row[j] = 1 + std::min({diag, up, row[j - 1]});
            }
            diag = up;
        }
    }
    return row[n];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    return levenshtein_seq(a, b);
}

inline std::size_t levenshtein(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
    return levenshtein_seq(a, b);
}

enum class EditGranularity { character, token };

struct DoseOptions {
    EditGranularity granularity = EditGranularity::character;
    bool normalized = false;  // divide by max(|a|, |b|)
};

/// Turns a clone testbed into a continuous one: the dose of each pair_id
/// group is the edit distance between its two members' sources (or token
/// sequences under token granularity). Record order is preserved.
inline Testbed dose_clone_pairs(const Testbed& tb, const DoseOptions& opts = {}) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < tb.records.size(); ++i) {
        groups[tb.records[i].pair_id].push_back(i);
    }
    Testbed out = tb;
    out.kind = InterventionKind::continuous;
    std::string dangling;
    for (const auto& [pid, members] : groups) {
        if (members.size() != 2) {
            if (!dangling.empty()) dangling += ", ";
            dangling += pid;
        }
    }
    if (!dangling.empty()) {
        throw UnpairedError("clone pairing needs exactly two records per pair_id; offending: " +
                            dangling);
    }
    for (const auto& [pid, members] : groups) {
        const auto& a = tb.records[members[0]];
        const auto& b = tb.records[members[1]];
        std::size_t dist = 0;
        std::size_t longest = 0;
        if (opts.granularity == EditGranularity::character) {
            if (!a.source) throw MissingSourceError("record \"" + a.id + "\" lacks source text");
            if (!b.source) throw MissingSourceError("record \"" + b.id + "\" lacks source text");
            dist = levenshtein(*a.source, *b.source);
            longest = std::max(a.source->size(), b.source->size());
        } else {
            dist = levenshtein(a.tokens, b.tokens);
            longest = std::max(a.tokens.size(), b.tokens.size());
        }
        double dose = static_cast<double>(dist);
        if (opts.normalized) dose = longest == 0 ? 0.0 : dose / static_cast<double>(longest);
        out.records[members[0]].dose = dose;
        out.records[members[1]].dose = dose;
    }
    return out;
}

} // namespace docode
