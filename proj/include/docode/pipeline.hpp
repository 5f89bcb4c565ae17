#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "docode/causal.hpp"
#include "docode/covariates.hpp"
#include "docode/errors.hpp"
#include "docode/ingest.hpp"
#include "docode/outcomes.hpp"
#include "docode/refutation.hpp"
#include "docode/report.hpp"
#include "docode/stats.hpp"
#include "docode/taxonomy.hpp"
#include "docode/version.hpp"

namespace docode {

/// One CLI invocation, fully resolved. Stage behavior is a pure function of
/// this struct plus the input files, which is what makes reruns
/// byte-identical.
struct RunConfig {
    std::string subcommand = "pipeline";
    std::filesystem::path testbed_path;
    InterventionKind kind = InterventionKind::binary;
    std::string testbed_name;

    std::filesystem::path taxonomy_path;  // empty: DOCODE_DEFAULT_TAXONOMY env, then bundled
    std::filesystem::path scm_path;       // empty: subwords-only default

    std::optional<std::uint64_t> seed;
    std::size_t bootstrap_n = 1000;
    std::size_t bins = 30;
    LogBase log_base = LogBase::two;
    CeMode ce_mode = CeMode::sum;
    bool strict = false;
    bool signed_delta = false;  // clone outcome: signed instead of |delta|
    bool metric_root = false;
    double caliper_scale = 0.2;
    double keep_fraction = 0.8;
    double effect_on_t = 0.2;
    double effect_on_y = 0.2;
    SpuriousThresholds spurious_thresholds;
    std::string estimator_override;  // "", "psm", "linear"
    std::string from_label = "control";
    std::string to_label = "treatment";

    bool compute_doses = false;
    EditGranularity granularity = EditGranularity::character;
    bool normalized_dose = false;
    bool emit_svg = false;

    std::filesystem::path out_dir = "results";
};

// exit codes
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitEstimation = 2;
inline constexpr int kExitRefutation = 3;

namespace detail {

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

inline std::string csv_number(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace detail

/// Inputs after resolution and validation, plus where they came from.
struct LoadedInputs {
    Testbed testbed;
    Taxonomy taxonomy;
    Scm scm;
    std::string taxonomy_source;  // "file", "env", "bundled"
    std::string testbed_digest;
    std::string taxonomy_digest;
    std::string scm_digest;
};

inline LoadedInputs load_inputs(const RunConfig& cfg) {
    LoadedInputs in;
    if (cfg.testbed_path.empty()) throw ParseError("no testbed path given");
    const std::string testbed_text = detail::read_file(cfg.testbed_path);
    in.testbed_digest = detail::hex64(detail::fnv1a64(testbed_text));
    in.testbed = parse_prediction_log(
        testbed_text, cfg.kind,
        cfg.testbed_name.empty() ? cfg.testbed_path.stem().string() : cfg.testbed_name);
    if (in.testbed.records.empty()) throw ParseError("testbed is empty");

    std::string tax_text;
    if (!cfg.taxonomy_path.empty()) {
        tax_text = detail::read_file(cfg.taxonomy_path);
        in.taxonomy_source = "file";
    } else if (const char* env = std::getenv("DOCODE_DEFAULT_TAXONOMY"); env && *env) {
        tax_text = detail::read_file(env);
        in.taxonomy_source = "env";
    } else {
        tax_text = default_taxonomy_json();
        in.taxonomy_source = "bundled";
    }
    in.taxonomy_digest = detail::hex64(detail::fnv1a64(tax_text));
    in.taxonomy = load_taxonomy(tax_text);

    std::string scm_text;
    if (!cfg.scm_path.empty()) {
        scm_text = detail::read_file(cfg.scm_path);
    } else {
        scm_text = R"({"treatment":"treatment","outcome":"cross_entropy","covariates":["subwords"]})";
    }
    in.scm_digest = detail::hex64(detail::fnv1a64(scm_text));
    in.scm = build_scm(scm_text);
    return in;
}

namespace detail {

struct PerRecord {
    double cross_entropy = 0;
    LocalOutcome local;
    CovariateVector covariates;
    bool has_source = false;
};

struct Analysis {
    Testbed testbed;  // normalized (doses computed when needed)
    std::vector<PerRecord> per_record;
    // estimation view
    EstimationData data;
    std::vector<std::string> unit_arms;  // "treatment"/"control" or dose string
    AssociationResult association;
    Estimand estimand;
    CausalEstimate estimate;
    RefutationReport refutations;
    SpuriousVerdict spurious;
    std::vector<Explanation> explanations;
    // association plotting series
    std::vector<double> assoc_series_a, assoc_series_b;
};

inline bool needs_doses(const Testbed& tb) {
    return std::any_of(tb.records.begin(), tb.records.end(),
                       [](const PredictionRecord& r) { return !r.dose; });
}

/// Which computations a subcommand actually needs.
struct StagePlan {
    bool association = false;
    bool estimate = false;
    bool refute = false;
    bool explanations = false;

    static StagePlan for_subcommand(const std::string& sub) {
        StagePlan p;
        const bool full = sub == "report" || sub == "pipeline";
        p.association = full || sub == "associate";
        p.estimate = full || sub == "estimate" || sub == "refute";
        p.refute = full || sub == "refute";
        p.explanations = full;
        return p;
    }
};

inline Matrix covariate_rows(const std::vector<std::size_t>& source_records,
                             const std::vector<PerRecord>& per_record,
                             const std::vector<std::string>& names,
                             bool all_sources) {
    for (const auto& name : names) {
        if (name != "subwords" && !all_sources) {
            throw ParseError("covariate \"" + name +
                             "\" needs record sources, which this testbed lacks");
        }
    }
    Matrix z;
    z.reserve(source_records.size());
    for (std::size_t idx : source_records) {
        std::vector<double> row;
        row.reserve(names.size());
        for (const auto& name : names) row.push_back(per_record[idx].covariates.by_name(name));
        z.push_back(std::move(row));
    }
    return z;
}

/// Estimator choice: binary testbeds match on propensity scores, dose
/// testbeds regress. An explicit override wins.
inline CausalEstimate::Method select_method(InterventionKind kind, const std::string& override_name) {
    if (override_name == "psm") return CausalEstimate::Method::psm;
    if (override_name == "linear") return CausalEstimate::Method::linear_regression;
    if (!override_name.empty()) throw ParseError("unknown estimator \"" + override_name + "\"");
    return kind == InterventionKind::binary ? CausalEstimate::Method::psm
                                            : CausalEstimate::Method::linear_regression;
}

inline Analysis analyze(const RunConfig& cfg, const LoadedInputs& inputs,
                        const StagePlan& plan) {
    Analysis a;
    a.testbed = inputs.testbed;
    if (a.testbed.kind != InterventionKind::binary &&
        (cfg.compute_doses || needs_doses(a.testbed))) {
        a.testbed = dose_clone_pairs(a.testbed, {cfg.granularity, cfg.normalized_dose});
    }

    // per-record covariates and outcomes
    bool all_sources = true;
    a.per_record.reserve(a.testbed.records.size());
    for (const auto& rec : a.testbed.records) {
        PerRecord pr;
        pr.has_source = rec.source.has_value();
        if (rec.source) {
            pr.covariates = extract_covariates(*rec.source, rec.tokens.size());
        } else {
            pr.covariates.subwords = static_cast<double>(rec.tokens.size());
            all_sources = false;
        }
        pr.cross_entropy = cross_entropy(rec.ntp, cfg.ce_mode, cfg.log_base).value;
        pr.local = ntp_by_category(rec, inputs.taxonomy);
        a.per_record.push_back(std::move(pr));
    }

    a.estimand = identify(inputs.scm);
    const std::uint64_t seed = cfg.seed.value_or(0);
    const auto method = select_method(a.testbed.kind, cfg.estimator_override);
    if (!plan.association && !plan.estimate) return a;

    if (a.testbed.kind == InterventionKind::binary) {
        const auto pairs = pair_records(a.testbed);
        // units: both records of a pair; common causes come from the
        // control-arm source so they stay pre-treatment
        std::vector<std::size_t> unit_record, unit_cov_record;
        for (const auto& [t_idx, c_idx] : pairs) {
            unit_record.push_back(t_idx);
            unit_cov_record.push_back(c_idx);
            unit_record.push_back(c_idx);
            unit_cov_record.push_back(c_idx);
        }
        a.data.binary = true;
        a.data.z = covariate_rows(unit_cov_record, a.per_record, inputs.scm.covariates,
                                  all_sources);
        for (std::size_t u = 0; u < unit_record.size(); ++u) {
            const auto& rec = a.testbed.records[unit_record[u]];
            a.data.t.push_back(rec.arm == Arm::treatment ? 1.0 : 0.0);
            a.data.y.push_back(a.per_record[unit_record[u]].cross_entropy);
            a.unit_arms.push_back(std::string{arm_name(*rec.arm)});
        }

        for (const auto& [t_idx, c_idx] : pairs) {
            a.assoc_series_a.push_back(a.per_record[t_idx].cross_entropy);
            a.assoc_series_b.push_back(a.per_record[c_idx].cross_entropy);
        }
        if (plan.association) {
            a.association = js_distance(
                a.assoc_series_a, a.assoc_series_b,
                {cfg.bootstrap_n, cfg.bins, seed, cfg.log_base, cfg.metric_root});
        }
    } else {
        // units are pairs: dose vs outcome difference
        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < a.testbed.records.size(); ++i) {
            groups[a.testbed.records[i].pair_id].push_back(i);
        }
        std::vector<std::size_t> unit_cov_record;
        for (const auto& [pid, members] : groups) {
            if (members.size() != 2) {
                throw UnpairedError("pair_id \"" + pid + "\" has " +
                                    std::to_string(members.size()) + " records, need 2");
            }
            std::size_t first = members[0], second = members[1];
            if (a.testbed.records[second].id < a.testbed.records[first].id) {
                std::swap(first, second);
            }
            const auto& rec = a.testbed.records[first];
            if (!rec.dose) throw ArmError("record \"" + rec.id + "\" lacks a dose");
            double delta = a.per_record[second].cross_entropy - a.per_record[first].cross_entropy;
            if (!cfg.signed_delta) delta = std::abs(delta);
            a.data.t.push_back(*rec.dose);
            a.data.y.push_back(delta);
            a.unit_arms.push_back(rec.pair_id);
            unit_cov_record.push_back(first);
        }
        a.data.binary = false;
        if (!inputs.scm.covariates.empty() && all_sources) {
            a.data.z = covariate_rows(unit_cov_record, a.per_record, inputs.scm.covariates,
                                      all_sources);
        } else {
            a.data.z.assign(a.data.t.size(), {});
        }
        a.assoc_series_a = a.data.t;
        a.assoc_series_b = a.data.y;
        if (plan.association) {
            a.association = pearson_association(a.data.t, a.data.y);
            a.association.seed = seed;
        }
    }
    if (!plan.estimate) return a;

    Estimator estimator;
    if (method == CausalEstimate::Method::psm) {
        if (!a.data.binary) throw KindError("psm estimator needs a binary testbed");
        estimator = make_psm_estimator({cfg.caliper_scale});
        a.estimate = ate_psm(a.data.z, binary_arms(a.data.t), a.data.y, {cfg.caliper_scale});
    } else {
        estimator = make_linear_estimator();
        a.estimate = ate_linear(a.data.t, a.data.y, a.data.z);
    }

    if (plan.refute) {
        RefutationOptions ropts;
        ropts.seed = seed;
        ropts.keep_fraction = cfg.keep_fraction;
        ropts.effect_on_t = cfg.effect_on_t;
        ropts.effect_on_y = cfg.effect_on_y;
        a.refutations = run_refutations(a.data, estimator, a.estimate.ate, ropts);
    }
    if (plan.association) {
        a.spurious = detect_spurious(a.association.value, a.estimate.ate,
                                     cfg.spurious_thresholds);
    }
    if (!plan.explanations) return a;

    // explanations: the global outcome, then every category with enough data
    a.explanations.push_back(render_explanation("global", a.estimate.ate, cfg.from_label,
                                                cfg.to_label, a.estimate.ate));
    std::vector<std::pair<std::size_t, std::size_t>> binary_pairs;
    if (a.testbed.kind == InterventionKind::binary) binary_pairs = pair_records(a.testbed);
    for (const auto& cat : inputs.taxonomy.categories) {
        try {
            if (a.testbed.kind == InterventionKind::binary) {
                const auto& pairs = binary_pairs;
                Matrix z;
                std::vector<int> t;
                std::vector<double> y;
                for (const auto& [t_idx, c_idx] : pairs) {
                    const auto& lt = a.per_record[t_idx].local.mean_ntp;
                    const auto& lc = a.per_record[c_idx].local.mean_ntp;
                    if (!lt.count(cat.id) || !lc.count(cat.id)) continue;
                    for (std::size_t rec_idx : {t_idx, c_idx}) {
                        std::vector<double> row;
                        for (const auto& name : inputs.scm.covariates) {
                            row.push_back(a.per_record[c_idx].covariates.by_name(name));
                        }
                        z.push_back(std::move(row));
                        t.push_back(a.testbed.records[rec_idx].arm == Arm::treatment ? 1 : 0);
                        y.push_back(a.per_record[rec_idx].local.mean_ntp.at(cat.id));
                    }
                }
                if (t.size() < 4) continue;
                double cat_ate = 0;
                if (method == CausalEstimate::Method::psm) {
                    cat_ate = ate_psm(z, t, y, {cfg.caliper_scale}).ate;
                } else {
                    std::vector<double> td(t.begin(), t.end());
                    cat_ate = ate_linear(td, y, z).ate;
                }
                a.explanations.push_back(render_explanation(cat.id, cat_ate, cfg.from_label,
                                                            cfg.to_label, cat_ate));
            } else {
                std::map<std::string, std::vector<std::size_t>> groups;
                for (std::size_t i = 0; i < a.testbed.records.size(); ++i) {
                    groups[a.testbed.records[i].pair_id].push_back(i);
                }
                std::vector<double> t, y;
                for (const auto& [pid, members] : groups) {
                    const auto& la = a.per_record[members[0]].local.mean_ntp;
                    const auto& lb = a.per_record[members[1]].local.mean_ntp;
                    if (!la.count(cat.id) || !lb.count(cat.id)) continue;
                    double delta = lb.at(cat.id) - la.at(cat.id);
                    if (!cfg.signed_delta) delta = std::abs(delta);
                    t.push_back(*a.testbed.records[members[0]].dose);
                    y.push_back(delta);
                }
                if (t.size() < 4) continue;
                const double cat_ate = ate_linear(t, y, {}).ate;
                a.explanations.push_back(render_explanation(cat.id, cat_ate, cfg.from_label,
                                                            cfg.to_label, cat_ate));
            }
        } catch (const Error&) {
            // category not estimable on this testbed (degenerate data); skip
            continue;
        }
    }
    return a;
}

inline nlohmann::json manifest_json(const RunConfig& cfg, const LoadedInputs& inputs) {
    nlohmann::json flags;
    flags["kind"] = std::string{kind_name(cfg.kind)};
    flags["bootstrap_n"] = cfg.bootstrap_n;
    flags["bins"] = cfg.bins;
    flags["log_base"] = std::string{log_base_name(cfg.log_base)};
    flags["ce_mode"] = std::string{ce_mode_name(cfg.ce_mode)};
    flags["strict"] = cfg.strict;
    flags["signed"] = cfg.signed_delta;
    flags["metric_root"] = cfg.metric_root;
    flags["caliper_scale"] = cfg.caliper_scale;
    flags["keep_fraction"] = cfg.keep_fraction;
    flags["effect_on_t"] = cfg.effect_on_t;
    flags["effect_on_y"] = cfg.effect_on_y;
    flags["assoc_min"] = cfg.spurious_thresholds.assoc_min;
    flags["ate_min"] = cfg.spurious_thresholds.ate_min;
    flags["estimator"] = cfg.estimator_override;
    flags["from_label"] = cfg.from_label;
    flags["to_label"] = cfg.to_label;
    flags["compute_doses"] = cfg.compute_doses;
    flags["granularity"] =
        cfg.granularity == EditGranularity::character ? "character" : "token";
    flags["normalized_dose"] = cfg.normalized_dose;

    nlohmann::json j;
    j["tool"] = "docode";
    j["version"] = kVersion;
    j["command"] = cfg.subcommand;
    if (cfg.seed) j["seed"] = *cfg.seed;
    j["flags"] = flags;
    j["inputs"] = {
        {"testbed", {{"path", cfg.testbed_path.string()}, {"fnv1a64", inputs.testbed_digest}}},
        {"taxonomy",
         {{"source", inputs.taxonomy_source},
          {"path", cfg.taxonomy_path.string()},
          {"fnv1a64", inputs.taxonomy_digest}}},
        {"scm", {{"path", cfg.scm_path.string()}, {"fnv1a64", inputs.scm_digest}}},
    };
    return j;
}

inline std::string covariates_csv(const Testbed& tb, const std::vector<PerRecord>& per_record) {
    std::string csv = "id";
    for (const char* name : CovariateVector::names) csv += std::string{","} + name;
    csv += "\n";
    for (std::size_t i = 0; i < tb.records.size(); ++i) {
        csv += tb.records[i].id;
        for (double v : per_record[i].covariates.values()) csv += "," + csv_number(v);
        csv += "\n";
    }
    return csv;
}

inline std::string outcomes_csv(const Testbed& tb, const std::vector<PerRecord>& per_record,
                                const Taxonomy& tax) {
    const bool binary = tb.kind == InterventionKind::binary;
    std::string csv = binary ? "id,pair_id,arm,cross_entropy" : "id,dose,cross_entropy";
    for (const auto& cat : tax.categories) csv += "," + cat.id;
    csv += "\n";
    for (std::size_t i = 0; i < tb.records.size(); ++i) {
        const auto& rec = tb.records[i];
        csv += rec.id;
        if (binary) {
            csv += "," + rec.pair_id + "," + std::string{arm_name(*rec.arm)};
        } else {
            csv += "," + (rec.dose ? csv_number(*rec.dose) : std::string{});
        }
        csv += "," + csv_number(per_record[i].cross_entropy);
        for (const auto& cat : tax.categories) {
            csv += ",";
            const auto it = per_record[i].local.mean_ntp.find(cat.id);
            if (it != per_record[i].local.mean_ntp.end()) csv += csv_number(it->second);
        }
        csv += "\n";
    }
    return csv;
}

inline nlohmann::json association_json(const AssociationResult& r) {
    return {{"kind", std::string{association_kind_name(r.kind)}},
            {"value", r.value},
            {"n", r.n},
            {"seed", r.seed},
            {"bootstrap_n", r.bootstrap_n},
            {"bins", r.bins},
            {"log_base", std::string{log_base_name(r.log_base)}},
            {"metric_root", r.metric_root}};
}

inline nlohmann::json estimate_json(const Analysis& a) {
    return {{"ate", a.estimate.ate},
            {"method", std::string{method_name(a.estimate.method)}},
            {"n", a.estimate.n},
            {"estimand",
             {{"adjustment_set", a.estimand.adjustment_set},
              {"formula_kind", std::string{estimand_kind_name(a.estimand.kind)}}}},
            {"diagnostics", a.estimate.diagnostics}};
}

inline nlohmann::json refutation_json(const RefutationReport& r) {
    return {{"original_ate", r.original_ate},
            {"r1_random_cause", r.r1_random_cause},
            {"r2_unobserved_cause", r.r2_unobserved_cause},
            {"r3_placebo", r.r3_placebo},
            {"r4_subset", r.r4_subset},
            {"verdicts",
             {{"r1", r.r1_pass ? "pass" : "fail"},
              {"r2", r.r2_pass ? "pass" : "fail"},
              {"r3", r.r3_pass ? "pass" : "fail"},
              {"r4", r.r4_pass ? "pass" : "fail"}}},
            {"tolerances",
             {{"r1_relative", r.tolerances.r1_relative},
              {"r1_absolute", r.tolerances.r1_absolute},
              {"r2_factor", r.tolerances.r2_factor},
              {"r2_absolute", r.tolerances.r2_absolute},
              {"r3_sd_scale", r.tolerances.r3_sd_scale},
              {"r3_absolute", r.tolerances.r3_absolute},
              {"r4_relative", r.tolerances.r4_relative},
              {"r4_absolute", r.tolerances.r4_absolute}}},
            {"sd_y", r.sd_y},
            {"seed", r.seed}};
}

inline CausalReport to_report(const RunConfig& cfg, const LoadedInputs& inputs,
                              const Analysis& a) {
    CausalReport rep;
    rep.testbed = a.testbed.name;
    rep.association = a.association;
    rep.estimand = a.estimand;
    rep.estimate = a.estimate;
    rep.refutations = a.refutations;
    rep.spurious = a.spurious;
    rep.explanations = a.explanations;
    rep.provenance = manifest_json(cfg, inputs);
    return rep;
}

} // namespace detail

/// Executes one subcommand. The pipeline subcommand runs every stage in
/// order (ingest, covariates, outcomes, associate, estimate, refute,
/// report); single-stage subcommands write only their own artifact. All
/// outputs land in cfg.out_dir next to a manifest capturing the exact
/// invocation.
inline int run(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    const bool stochastic = cfg.subcommand == "associate" || cfg.subcommand == "refute" ||
                            cfg.subcommand == "pipeline" || cfg.subcommand == "report";
    if (stochastic && !cfg.seed) {
        std::cerr << "error: --seed is required for the " << cfg.subcommand << " stage\n";
        return kExitValidation;
    }

    try {
        const LoadedInputs inputs = load_inputs(cfg);
        fs::create_directories(cfg.out_dir);
        const auto out = [&](const char* name) { return cfg.out_dir / name; };

        const bool all = cfg.subcommand == "pipeline";

        if (cfg.subcommand == "ingest") {
            Testbed tb = inputs.testbed;
            if (tb.kind != InterventionKind::binary &&
                (cfg.compute_doses || detail::needs_doses(tb))) {
                tb = dose_clone_pairs(tb, {cfg.granularity, cfg.normalized_dose});
            }
            if (tb.kind == InterventionKind::binary) pair_records(tb);  // validates pairing
            detail::write_file(out("testbed.jsonl"), serialize_testbed(tb));
            detail::write_file(out("manifest.json"),
                               detail::manifest_json(cfg, inputs).dump(2) + "\n");
            std::cout << "ingested " << tb.records.size() << " records ("
                      << kind_name(tb.kind) << ")\n";
            return kExitOk;
        }

        const auto plan = detail::StagePlan::for_subcommand(cfg.subcommand);
        detail::Analysis a = detail::analyze(cfg, inputs, plan);

        if (all || cfg.subcommand == "covariates") {
            detail::write_file(out("covariates.csv"),
                               detail::covariates_csv(a.testbed, a.per_record));
            nlohmann::json meta;
            meta["approx"] = {{"parenthesized_expressions", true}, {"variables", true}};
            detail::write_file(out("covariates_meta.json"), meta.dump(2) + "\n");
        }
        if (all) {
            detail::write_file(out("testbed.jsonl"), serialize_testbed(a.testbed));
        }
        if (all || cfg.subcommand == "outcomes") {
            detail::write_file(out("outcomes.csv"),
                               detail::outcomes_csv(a.testbed, a.per_record, inputs.taxonomy));
        }
        if (all || cfg.subcommand == "associate") {
            detail::write_file(out("association.json"),
                               detail::association_json(a.association).dump(2) + "\n");
            if (a.testbed.kind == InterventionKind::binary) {
                const auto ra = bootstrap_means(a.assoc_series_a, cfg.bootstrap_n, *cfg.seed);
                const auto rb = bootstrap_means(a.assoc_series_b, cfg.bootstrap_n, *cfg.seed);
                emit_plot_csv({{"treatment", ra}, {"control", rb}},
                              out("association_distributions.csv"));
                if (cfg.emit_svg) {
                    emit_histogram_svg(ra, rb, cfg.bins, out("association_distributions.svg"));
                }
            }
        }
        if (all || cfg.subcommand == "estimate") {
            detail::write_file(out("estimate.json"), detail::estimate_json(a).dump(2) + "\n");
        }
        if (all || cfg.subcommand == "refute") {
            detail::write_file(out("refutation.json"),
                               detail::refutation_json(a.refutations).dump(2) + "\n");
        }
        if (all || cfg.subcommand == "report") {
            const CausalReport rep = detail::to_report(cfg, inputs, a);
            detail::write_file(out("report.json"), emit_report(rep, ReportFormat::json));
            detail::write_file(out("report.md"), emit_report(rep, ReportFormat::markdown));
            // covariate-vs-outcome scatter for the leading covariate
            std::vector<double> xs, ys;
            for (std::size_t u = 0; u < a.data.t.size(); ++u) {
                xs.push_back(a.data.z.empty() || a.data.z[u].empty() ? 0.0 : a.data.z[u][0]);
                ys.push_back(a.data.y[u]);
            }
            if (!xs.empty() && !a.data.z.empty() && !a.data.z[0].empty()) {
                emit_scatter_csv(xs, ys, a.unit_arms, out("covariate_scatter.csv"));
                if (cfg.emit_svg) emit_scatter_svg(xs, ys, out("covariate_scatter.svg"));
            }
            // testbed-wide category performance, best category scaled to 1
            std::map<CategoryId, double> sums;
            std::map<CategoryId, std::size_t> counts;
            for (const auto& pr : a.per_record) {
                for (const auto& [cat, m] : pr.local.mean_ntp) {
                    sums[cat] += m;
                    counts[cat] += 1;
                }
            }
            std::map<CategoryId, double> category_means;
            for (const auto& [cat, s] : sums) {
                category_means[cat] = s / static_cast<double>(counts[cat]);
            }
            if (!category_means.empty()) {
                const auto ccp = normalized_ccp(category_means);
                std::string csv = "category,mean_ntp,normalized_ccp\n";
                for (const auto& cat : inputs.taxonomy.categories) {
                    const auto it = category_means.find(cat.id);
                    if (it == category_means.end()) continue;
                    csv += cat.id + "," + detail::csv_number(it->second) + "," +
                           detail::csv_number(ccp.at(cat.id)) + "\n";
                }
                detail::write_file(out("normalized_ccp.csv"), csv);
            }
        }
        detail::write_file(out("manifest.json"),
                           detail::manifest_json(cfg, inputs).dump(2) + "\n");

        std::cout << cfg.subcommand << ":";
        if (!plan.association && !plan.estimate) {
            std::cout << " " << a.testbed.records.size() << " records";
        }
        if (plan.association) std::cout << " association=" << format_number(a.association.value);
        if (plan.estimate) std::cout << " ate=" << format_number(a.estimate.ate);
        if (plan.refute) {
            std::cout << " refutations="
                      << (a.refutations.r1_pass ? "p" : "F") << (a.refutations.r2_pass ? "p" : "F")
                      << (a.refutations.r3_pass ? "p" : "F") << (a.refutations.r4_pass ? "p" : "F");
        }
        if (plan.explanations) std::cout << " verdict=" << verdict_name(a.spurious.verdict);
        std::cout << " -> " << cfg.out_dir.string() << "\n";

        if (cfg.strict && (all || cfg.subcommand == "refute") && !a.refutations.all_pass()) {
            std::cerr << "strict mode: at least one refutation failed\n";
            return kExitRefutation;
        }
        return kExitOk;
    } catch (const SingleArmError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const NonFiniteError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const RankDeficiencyError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const ZeroVarianceError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const EmptyCellError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const SubsetTooSmallError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

} // namespace docode
