#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>

#include "docode/errors.hpp"
#include "docode/ingest.hpp"
#include "docode/taxonomy.hpp"

namespace docode {

enum class CeMode { sum, mean };
enum class LogBase { e, two };

inline std::string_view ce_mode_name(CeMode m) { return m == CeMode::sum ? "sum" : "mean"; }
inline std::string_view log_base_name(LogBase b) { return b == LogBase::two ? "2" : "e"; }

/// Whole-sequence performance: negative sum (or mean) of log probabilities.
struct GlobalOutcome {
    double value = 0;
    CeMode mode = CeMode::sum;
};

/// Probabilities are floor-clamped here before the log; quantized exports
/// can contain exact zeros.
inline constexpr double kProbabilityFloor = 1e-12;

inline GlobalOutcome cross_entropy(std::span<const double> ntp, CeMode mode = CeMode::sum,
                                   LogBase base = LogBase::e) {
    if (ntp.empty()) throw EmptySequenceError("cross_entropy: empty probability sequence");
    double total = 0.0;
    for (double p : ntp) {
        const double clamped = std::max(p, kProbabilityFloor);
        total -= base == LogBase::two ? std::log2(clamped) : std::log(clamped);
    }
    if (mode == CeMode::mean) total /= static_cast<double>(ntp.size());
    if (total == 0.0) total = 0.0;  // normalize -0.0
    return {total, mode};
}

/// Per-category mean probability over the positions that map into each
/// category. Unmapped positions are excluded; categories with no mapped
/// position are absent.
struct LocalOutcome {
    std::map<CategoryId, double> mean_ntp;
    std::map<CategoryId, std::size_t> counts;
};

inline LocalOutcome ntp_by_category(const PredictionRecord& rec, const Taxonomy& tax) {
    LocalOutcome out;
    std::map<CategoryId, double> sums;
    const auto mapped = map_sequence(tax, rec.tokens);
    for (std::size_t i = 0; i < mapped.size(); ++i) {
        if (!mapped[i]) continue;
        sums[*mapped[i]] += rec.ntp[i];
        out.counts[*mapped[i]] += 1;
    }
    for (const auto& [cat, sum] : sums) {
        out.mean_ntp[cat] = sum / static_cast<double>(out.counts[cat]);
    }
    return out;
}

/// Scales category means so the best-predicted category is exactly 1.
inline std::map<CategoryId, double> normalized_ccp(const std::map<CategoryId, double>& means) {
    if (means.empty()) throw EmptyMapError("normalized_ccp: empty category map");
    double max_val = 0.0;
    for (const auto& [cat, v] : means) max_val = std::max(max_val, v);
    if (max_val <= 0.0) throw ZeroMaxError("normalized_ccp: all category means are zero");
    std::map<CategoryId, double> out;
    for (const auto& [cat, v] : means) out[cat] = v / max_val;
    return out;
}

} // namespace docode
