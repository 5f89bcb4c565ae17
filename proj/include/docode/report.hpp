#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "docode/causal.hpp"
#include "docode/errors.hpp"
#include "docode/refutation.hpp"
#include "docode/stats.hpp"

namespace docode {

/// 4 significant digits, switching to scientific notation below 1e-4 —
/// the same mixed style the result tables use.
inline std::string format_number(double v) {
    if (v == 0.0) v = 0.0;  // avoid "-0"
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Explanation {
    std::string concept_name;
    double delta = 0;
    std::string intervention_from;
    std::string intervention_to;
    double ate = 0;
    std::string text;
};

/// Fills the explanation template. The verb tracks the sign of delta:
/// worse below zero, better above, unaffected within 1e-6 of zero.
inline Explanation render_explanation(std::string concept_name, double delta,
                                      std::string from_label, std::string to_label, double ate) {
    if (!std::isfinite(delta) || !std::isfinite(ate)) {
        throw NonFiniteError("render_explanation: non-finite numeric slot");
    }
    Explanation e;
    e.concept_name = std::move(concept_name);
    e.delta = delta;
    e.intervention_from = std::move(from_label);
    e.intervention_to = std::move(to_label);
    e.ate = ate;

    std::string performance;
    if (std::abs(delta) < 1e-6) {
        performance = "was unaffected";
    } else if (delta < 0) {
        performance = "performed worse by " + format_number(-delta);
    } else {
        performance = "performed better by " + format_number(delta);
    }
    e.text = e.concept_name + " " + performance + ", due to a change in model application from " +
             e.intervention_from + " to " + e.intervention_to +
             ", with a causal analysis ATE of " + format_number(ate);
    return e;
}

/// Everything one analysis run produced, in renderable form.
struct CausalReport {
    std::string testbed;
    AssociationResult association;
    Estimand estimand;
    CausalEstimate estimate;
    RefutationReport refutations;
    SpuriousVerdict spurious;
    std::vector<Explanation> explanations;
    nlohmann::json provenance;  // seeds and flags needed to reproduce the run
};

inline nlohmann::json report_to_json(const CausalReport& rep) {
    nlohmann::json j;
    j["testbed"] = rep.testbed;
    j["association"] = {
        {"kind", std::string{association_kind_name(rep.association.kind)}},
        {"value", rep.association.value},
        {"n", rep.association.n},
        {"seed", rep.association.seed},
        {"bootstrap_n", rep.association.bootstrap_n},
        {"bins", rep.association.bins},
        {"log_base", std::string{log_base_name(rep.association.log_base)}},
        {"metric_root", rep.association.metric_root},
    };
    j["estimand"] = {
        {"adjustment_set", rep.estimand.adjustment_set},
        {"formula_kind", std::string{estimand_kind_name(rep.estimand.kind)}},
    };
    j["estimate"] = {
        {"ate", rep.estimate.ate},
        {"method", std::string{method_name(rep.estimate.method)}},
        {"n", rep.estimate.n},
        {"diagnostics", rep.estimate.diagnostics},
    };
    j["refutations"] = {
        {"original_ate", rep.refutations.original_ate},
        {"r1_random_cause", rep.refutations.r1_random_cause},
        {"r2_unobserved_cause", rep.refutations.r2_unobserved_cause},
        {"r3_placebo", rep.refutations.r3_placebo},
        {"r4_subset", rep.refutations.r4_subset},
        {"verdicts",
         {{"r1", rep.refutations.r1_pass ? "pass" : "fail"},
          {"r2", rep.refutations.r2_pass ? "pass" : "fail"},
          {"r3", rep.refutations.r3_pass ? "pass" : "fail"},
          {"r4", rep.refutations.r4_pass ? "pass" : "fail"}}},
        {"tolerances",
         {{"r1_relative", rep.refutations.tolerances.r1_relative},
          {"r1_absolute", rep.refutations.tolerances.r1_absolute},
          {"r2_factor", rep.refutations.tolerances.r2_factor},
          {"r2_absolute", rep.refutations.tolerances.r2_absolute},
          {"r3_sd_scale", rep.refutations.tolerances.r3_sd_scale},
          {"r3_absolute", rep.refutations.tolerances.r3_absolute},
          {"r4_relative", rep.refutations.tolerances.r4_relative},
          {"r4_absolute", rep.refutations.tolerances.r4_absolute}}},
        {"sd_y", rep.refutations.sd_y},
        {"seed", rep.refutations.seed},
    };
    j["spurious"] = {
        {"association", rep.spurious.association},
        {"ate", rep.spurious.ate},
        {"verdict", std::string{verdict_name(rep.spurious.verdict)}},
        {"thresholds",
         {{"assoc_min", rep.spurious.thresholds.assoc_min},
          {"ate_min", rep.spurious.thresholds.ate_min}}},
    };
    j["explanations"] = nlohmann::json::array();
    for (const auto& e : rep.explanations) {
        j["explanations"].push_back({{"concept", e.concept_name},
                                     {"delta", e.delta},
                                     {"intervention_from", e.intervention_from},
                                     {"intervention_to", e.intervention_to},
                                     {"ate", e.ate},
                                     {"text", e.text}});
    }
    j["provenance"] = rep.provenance;
    return j;
}

enum class ReportFormat { json, markdown };

/// Renders the report. JSON keys are sorted; Markdown mirrors the result
/// tables with rows ordered Association, ATE, R1, R2, R3, R4. Identical
/// reports render to byte-identical documents.
inline std::string emit_report(const CausalReport& rep, ReportFormat format) {
    if (format == ReportFormat::json) {
        return report_to_json(rep).dump(2) + "\n";
    }
    std::string md;
    md += "# Causal analysis: " + rep.testbed + "\n\n";
    if (rep.spurious.verdict == SpuriousVerdict::Kind::spurious) {
        md += "> \xE2\x9A\xA0 spurious correlation: the association does not survive "
              "covariate adjustment\n\n";
    }
    md += "| Metric | Value |\n";
    md += "|---|---|\n";
    md += "| Association (" + std::string{association_kind_name(rep.association.kind)} + ") | " +
          format_number(rep.association.value) + " |\n";
    md += "| Causal Eff. ATE (" + std::string{method_name(rep.estimate.method)} + ") | " +
          format_number(rep.estimate.ate) + " |\n";
    auto refutation_row = [&](const char* label, double value, bool pass) {
        md += std::string("| ") + label + " | " + format_number(value) + " (" +
              (pass ? "pass" : "fail") + ") |\n";
    };
    refutation_row("Random Comm. Cause", rep.refutations.r1_random_cause, rep.refutations.r1_pass);
    refutation_row("Unobserved Comm. Cause", rep.refutations.r2_unobserved_cause,
                   rep.refutations.r2_pass);
    refutation_row("Placebo", rep.refutations.r3_placebo, rep.refutations.r3_pass);
    refutation_row("Remove Subset", rep.refutations.r4_subset, rep.refutations.r4_pass);
    md += "\nVerdict: **" + std::string{verdict_name(rep.spurious.verdict)} + "** (|assoc| vs " +
          format_number(rep.spurious.thresholds.assoc_min) + ", |ate| vs " +
          format_number(rep.spurious.thresholds.ate_min) + ")\n";
    if (!rep.explanations.empty()) {
        md += "\n## Explanations\n\n";
        for (const auto& e : rep.explanations) {
            md += "- " + e.text + "\n";
        }
    }
    md += "\n## Provenance\n\n```json\n" + rep.provenance.dump(2) + "\n```\n";
    return md;
}

/// Named series written as CSV columns, one column per series. All series
/// must be non-empty; shorter columns leave trailing cells blank.
inline void emit_plot_csv(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                          const std::filesystem::path& path) {
    if (series.empty()) throw IoError("emit_plot_csv: no series");
    std::size_t rows = 0;
    for (const auto& [name, values] : series) {
        if (values.empty()) throw IoError("emit_plot_csv: series \"" + name + "\" is empty");
        rows = std::max(rows, values.size());
    }
    std::ofstream out(path);
    if (!out) throw IoError("emit_plot_csv: cannot open " + path.string());
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << (i ? "," : "") << series[i].first;
    }
    out << "\n";
    char buf[48];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (i) out << ",";
            if (r < series[i].second.size()) {
                std::snprintf(buf, sizeof(buf), "%.10g", series[i].second[r]);
                out << buf;
            }
        }
        out << "\n";
    }
}

/// Covariate-vs-outcome scatter with one row per unit: x, y, arm.
inline void emit_scatter_csv(const std::vector<double>& xs, const std::vector<double>& ys,
                             const std::vector<std::string>& arms,
                             const std::filesystem::path& path) {
    if (xs.empty() || xs.size() != ys.size() || xs.size() != arms.size()) {
        throw IoError("emit_scatter_csv: empty or misaligned series");
    }
    std::ofstream out(path);
    if (!out) throw IoError("emit_scatter_csv: cannot open " + path.string());
    out << "x,y,arm\n";
    char buf[48];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.10g", xs[i]);
        out << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.10g", ys[i]);
        out << buf << "," << arms[i] << "\n";
    }
}

namespace detail {

inline void svg_open(std::string& svg, int w, int h) {
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
           "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " +
           std::to_string(h) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

} // namespace detail

/// Static overlaid histogram of two sample series.
inline void emit_histogram_svg(const std::vector<double>& a, const std::vector<double>& b,
                               std::size_t bins, const std::filesystem::path& path) {
    if (a.empty() || b.empty()) throw IoError("emit_histogram_svg: empty series");
    const auto [pa, pb] = histogram_pair(a, b, bins);
    constexpr int kW = 640, kH = 360, kPad = 20;
    double peak = 0.0;
    for (double m : pa.masses) peak = std::max(peak, m);
    for (double m : pb.masses) peak = std::max(peak, m);
    const double bar_w = static_cast<double>(kW - 2 * kPad) / static_cast<double>(bins);

    std::string svg;
    detail::svg_open(svg, kW, kH);
    auto bars = [&](const Histogram& h, const char* color) {
        for (std::size_t i = 0; i < h.masses.size(); ++i) {
            const double frac = peak > 0 ? h.masses[i] / peak : 0.0;
            const double bh = frac * (kH - 2 * kPad);
            svg += "<rect x=\"" + format_number(kPad + bar_w * static_cast<double>(i)) +
                   "\" y=\"" + format_number(kH - kPad - bh) + "\" width=\"" +
                   format_number(bar_w) + "\" height=\"" + format_number(bh) + "\" fill=\"" +
                   color + "\" fill-opacity=\"0.5\"/>\n";
        }
    };
    bars(pa, "#1f77b4");
    bars(pb, "#ff7f0e");
    svg += "</svg>\n";
    std::ofstream out(path);
    if (!out) throw IoError("emit_histogram_svg: cannot open " + path.string());
    out << svg;
}

/// Static scatter plot with a least-squares line.
inline void emit_scatter_svg(const std::vector<double>& xs, const std::vector<double>& ys,
                             const std::filesystem::path& path) {
    if (xs.empty() || xs.size() != ys.size()) throw IoError("emit_scatter_svg: empty series");
    constexpr int kW = 640, kH = 360, kPad = 20;
    double xlo = xs[0], xhi = xs[0], ylo = ys[0], yhi = ys[0];
    for (double x : xs) { xlo = std::min(xlo, x); xhi = std::max(xhi, x); }
    for (double y : ys) { ylo = std::min(ylo, y); yhi = std::max(yhi, y); }
    if (xlo == xhi) { xlo -= 0.5; xhi += 0.5; }
    if (ylo == yhi) { ylo -= 0.5; yhi += 0.5; }
    auto px = [&](double x) { return kPad + (x - xlo) / (xhi - xlo) * (kW - 2 * kPad); };
    auto py = [&](double y) { return kH - kPad - (y - ylo) / (yhi - ylo) * (kH - 2 * kPad); };

    std::string svg;
    detail::svg_open(svg, kW, kH);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        svg += "<circle cx=\"" + format_number(px(xs[i])) + "\" cy=\"" + format_number(py(ys[i])) +
               "\" r=\"2.5\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
    }
    // least-squares overlay
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) { mx += xs[i]; my += ys[i]; }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx > 0) {
        const double slope = sxy / sxx;
        const double y0 = my + slope * (xlo - mx);
        const double y1 = my + slope * (xhi - mx);
        svg += "<line x1=\"" + format_number(px(xlo)) + "\" y1=\"" + format_number(py(y0)) +
               "\" x2=\"" + format_number(px(xhi)) + "\" y2=\"" + format_number(py(y1)) +
               "\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
    }
    svg += "</svg>\n";
    std::ofstream out(path);
    if (!out) throw IoError("emit_scatter_svg: cannot open " + path.string());
    out << svg;
}

} // namespace docode
