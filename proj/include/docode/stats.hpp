#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "docode/errors.hpp"
#include "docode/outcomes.hpp"
#include "docode/rng.hpp"

namespace docode {

inline double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double stddev_of(std::span<const double> xs) {
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

/// Sample Pearson correlation coefficient.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw LengthMismatchError("pearson: series lengths " + std::to_string(xs.size()) +
                                  " vs " + std::to_string(ys.size()));
    }
    if (xs.size() < 2) throw LengthMismatchError("pearson: need at least 2 points");
    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ZeroVarianceError("pearson: zero-variance series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// n_resamples statistics over with-replacement resamples of the input.
/// Each resample draws its own substream from (seed, resample index), so
/// results do not depend on evaluation order.
inline std::vector<double> bootstrap(
    std::span<const double> values, std::size_t n_resamples, std::uint64_t seed,
    const std::function<double(std::span<const double>)>& statistic) {
    if (values.empty()) throw EmptyInputError("bootstrap: empty input");
    if (n_resamples == 0) throw ZeroResamplesError("bootstrap: n_resamples must be >= 1");
    std::vector<double> out(n_resamples);
    std::vector<double> scratch(values.size());
    for (std::size_t r = 0; r < n_resamples; ++r) {
        Rng rng = Rng::stream(seed, r);
        for (std::size_t i = 0; i < values.size(); ++i) {
            scratch[i] = values[rng.below(values.size())];
        }
        out[r] = statistic(scratch);
    }
    return out;
}

inline std::vector<double> bootstrap_means(std::span<const double> values,
                                           std::size_t n_resamples, std::uint64_t seed) {
    return bootstrap(values, n_resamples, seed,
                     [](std::span<const double> xs) { return mean_of(xs); });
}

struct Histogram {
    std::vector<double> bin_edges;  // k+1 strictly increasing edges
    std::vector<double> masses;     // k entries, sum 1

    bool operator==(const Histogram&) const = default;
};

inline constexpr double kHistogramSmoothing = 1e-10;

/// Two histograms over shared equal-width bins spanning the pooled range.
/// A degenerate (single-valued) range is widened by +-0.5 before binning.
/// Every bin receives a smoothing mass of 1e-10 and is renormalized.
inline std::pair<Histogram, Histogram> histogram_pair(std::span<const double> a,
                                                      std::span<const double> b,
                                                      std::size_t bins) {
    if (a.empty() || b.empty()) throw EmptyInputError("histogram_pair: empty series");
    if (bins < 2) throw Error("histogram_pair: bins must be >= 2");
    double lo = a[0], hi = a[0];
    for (double x : a) { lo = std::min(lo, x); hi = std::max(hi, x); }
    for (double x : b) { lo = std::min(lo, x); hi = std::max(hi, x); }
    if (lo == hi) { lo -= 0.5; hi += 0.5; }

    Histogram pa, pb;
    pa.bin_edges.resize(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) {
        pa.bin_edges[i] = lo + width * static_cast<double>(i);
    }
    pa.bin_edges[bins] = hi;
    pb.bin_edges = pa.bin_edges;
    pa.masses.assign(bins, 0.0);
    pb.masses.assign(bins, 0.0);

    auto drop = [&](Histogram& h, std::span<const double> xs) {
        const double unit = 1.0 / static_cast<double>(xs.size());
        for (double x : xs) {
            auto idx = static_cast<std::size_t>((x - lo) / width);
            if (idx >= bins) idx = bins - 1;
            h.masses[idx] += unit;
        }
        double total = 0.0;
        for (double& m : h.masses) {
            m += kHistogramSmoothing;
            total += m;
        }
        for (double& m : h.masses) m /= total;
    };
    drop(pa, a);
    drop(pb, b);
    return {std::move(pa), std::move(pb)};
}

/// Jensen-Shannon divergence between two histograms sharing bin edges:
/// 0.5 KL(p||m) + 0.5 KL(q||m) with m the midpoint distribution. Symmetric,
/// and bounded by 1 under base-2 logs.
inline double jsd(const Histogram& p, const Histogram& q, LogBase base = LogBase::two) {
    if (p.bin_edges != q.bin_edges || p.masses.size() != q.masses.size()) {
        throw EdgeMismatchError("jsd: histograms do not share bin edges");
    }
    auto kl_to_mid = [&](const Histogram& x) {
        double kl = 0.0;
        for (std::size_t i = 0; i < x.masses.size(); ++i) {
            const double xi = x.masses[i];
            if (xi <= 0.0) continue;
            const double mi = 0.5 * (p.masses[i] + q.masses[i]);
            kl += base == LogBase::two ? xi * std::log2(xi / mi) : xi * std::log(xi / mi);
        }
        return kl;
    };
    return std::max(0.0, 0.5 * kl_to_mid(p) + 0.5 * kl_to_mid(q));
}

struct AssociationResult {
    enum class Kind { pearson, js_distance };
    Kind kind = Kind::pearson;
    double value = 0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t bootstrap_n = 0;
    std::size_t bins = 0;
    LogBase log_base = LogBase::two;
    bool metric_root = false;
};

inline std::string_view association_kind_name(AssociationResult::Kind k) {
    return k == AssociationResult::Kind::pearson ? "pearson" : "js_distance";
}

struct JsOptions {
    std::size_t bootstrap_n = 1000;
    std::size_t bins = 30;
    std::uint64_t seed = 0;
    LogBase log_base = LogBase::two;
    bool metric_root = false;  // sqrt(JSD) instead of JSD^2
};

/// Association between two outcome samples: bootstrap the mean of each
/// series, histogram the two sampling distributions over shared bins, take
/// the JS divergence, and square it. metric_root switches the final step to
/// the conventional square root.
inline AssociationResult js_distance(std::span<const double> a, std::span<const double> b,
                                     const JsOptions& opts) {
    // shared resample streams so identical series give exactly zero
    const std::vector<double> ra = bootstrap_means(a, opts.bootstrap_n, opts.seed);
    const std::vector<double> rb = bootstrap_means(b, opts.bootstrap_n, opts.seed);
    const auto [pa, pb] = histogram_pair(ra, rb, opts.bins);
    const double divergence = jsd(pa, pb, opts.log_base);
    AssociationResult res;
    res.kind = AssociationResult::Kind::js_distance;
    res.value = opts.metric_root ? std::sqrt(divergence) : divergence * divergence;
    res.n = a.size() + b.size();
    res.seed = opts.seed;
    res.bootstrap_n = opts.bootstrap_n;
    res.bins = opts.bins;
    res.log_base = opts.log_base;
    res.metric_root = opts.metric_root;
    return res;
}

inline AssociationResult pearson_association(std::span<const double> xs,
                                             std::span<const double> ys) {
    AssociationResult res;
    res.kind = AssociationResult::Kind::pearson;
    res.value = pearson(xs, ys);
    res.n = xs.size();
    return res;
}

} // namespace docode
