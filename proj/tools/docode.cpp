// Command-line front end: ingest -> covariates -> outcomes -> associate ->
// estimate -> refute -> report, or all of them via `pipeline`.

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "docode/pipeline.hpp"
#include "docode/version.hpp"

namespace {

void add_common_options(CLI::App* cmd, docode::RunConfig& cfg, std::string& kind,
                        std::string& log_base, std::string& ce_mode, std::string& granularity,
                        std::uint64_t& seed, bool& seed_set) {
    cmd->add_option("--testbed", cfg.testbed_path, "prediction log (JSONL)")->required();
    cmd->add_option("--kind", kind, "binary|continuous|discrete")
        ->check(CLI::IsMember({"binary", "continuous", "discrete"}));
    cmd->add_option("--name", cfg.testbed_name, "testbed name (default: file stem)");
    cmd->add_option("--taxonomy", cfg.taxonomy_path,
                    "taxonomy JSON (default: $DOCODE_DEFAULT_TAXONOMY, then bundled)");
    cmd->add_option("--scm", cfg.scm_path, "SCM JSON document");
    cmd->add_option_function<std::uint64_t>(
           "--seed", [&seed, &seed_set](std::uint64_t v) { seed = v; seed_set = true; },
           "seed for every stochastic stage");
    cmd->add_option("--bootstrap-n", cfg.bootstrap_n, "bootstrap resamples");
    cmd->add_option("--bins", cfg.bins, "histogram bins");
    cmd->add_option("--log-base", log_base, "2|e")->check(CLI::IsMember({"2", "e"}));
    cmd->add_option("--ce-mode", ce_mode, "sum|mean")->check(CLI::IsMember({"sum", "mean"}));
    cmd->add_flag("--strict", cfg.strict, "non-zero exit when a refutation fails");
    cmd->add_flag("--signed", cfg.signed_delta, "signed clone-pair outcome deltas");
    cmd->add_flag("--metric-root", cfg.metric_root, "sqrt(JSD) instead of JSD^2");
    cmd->add_option("--caliper-scale", cfg.caliper_scale,
                    "matching caliper as a multiple of SD(logit ps); 0 disables");
    cmd->add_flag_callback("--no-caliper", [&cfg]() { cfg.caliper_scale = 0.0; },
                           "disable the matching caliper");
    cmd->add_option("--keep-fraction", cfg.keep_fraction, "subset refutation keep fraction");
    cmd->add_option("--effect-on-t", cfg.effect_on_t, "unobserved-cause strength on T");
    cmd->add_option("--effect-on-y", cfg.effect_on_y, "unobserved-cause strength on Y");
    cmd->add_option("--assoc-min", cfg.spurious_thresholds.assoc_min,
                    "association threshold for the spurious verdict");
    cmd->add_option("--ate-min", cfg.spurious_thresholds.ate_min,
                    "effect threshold for the spurious verdict");
    cmd->add_option("--estimator", cfg.estimator_override, "psm|linear (default: by kind)")
        ->check(CLI::IsMember({"psm", "linear"}));
    cmd->add_option("--from-label", cfg.from_label, "control-side intervention label");
    cmd->add_option("--to-label", cfg.to_label, "treatment-side intervention label");
    cmd->add_flag("--compute-doses", cfg.compute_doses,
                  "derive doses from source edit distances");
    cmd->add_option("--granularity", granularity, "character|token edit distance")
        ->check(CLI::IsMember({"character", "token"}));
    cmd->add_flag("--normalized-dose", cfg.normalized_dose,
                  "divide doses by the longer sequence length");
    cmd->add_flag("--svg", cfg.emit_svg, "emit SVG plots next to the CSVs");
    cmd->add_option("--out", cfg.out_dir, "output directory");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal interpretability analysis of neural code model predictions"};
    app.set_version_flag("--version", docode::kVersion);
    app.require_subcommand(1);

    docode::RunConfig cfg;
    std::string kind = "binary";
    std::string log_base = "2";
    std::string ce_mode = "sum";
    std::string granularity = "character";
    std::uint64_t seed = 0;
    bool seed_set = false;

    const char* subcommands[] = {"ingest",   "covariates", "outcomes", "associate",
                                 "estimate", "refute",     "report",   "pipeline"};
    const char* descriptions[] = {
        "parse and validate a prediction log",
        "extract per-method SE metrics",
        "compute cross-entropy and per-category NTP means",
        "association between arms (JS distance or Pearson)",
        "average treatment effect with covariate adjustment",
        "robustness checks for the causal estimate",
        "render the full report",
        "run every stage in order"};
    for (std::size_t i = 0; i < std::size(subcommands); ++i) {
        CLI::App* cmd = app.add_subcommand(subcommands[i], descriptions[i]);
        add_common_options(cmd, cfg, kind, log_base, ce_mode, granularity, seed, seed_set);
        cmd->callback([&, name = std::string{subcommands[i]}]() { cfg.subcommand = name; });
    }

    CLI11_PARSE(app, argc, argv);

    cfg.kind = docode::parse_kind(kind);
    cfg.log_base = log_base == "2" ? docode::LogBase::two : docode::LogBase::e;
    cfg.ce_mode = ce_mode == "sum" ? docode::CeMode::sum : docode::CeMode::mean;
    cfg.granularity = granularity == "character" ? docode::EditGranularity::character
                                                 : docode::EditGranularity::token;
    if (seed_set) cfg.seed = seed;
    return docode::run(cfg);
}
