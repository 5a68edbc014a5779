#ifndef SPLINK_ANALYSIS_HPP
#define SPLINK_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "splink/constants.hpp"
#include "splink/ephemeris.hpp"
#include "splink/link_budget.hpp"
#include "splink/timetag.hpp"
#include "splink/timetag_sim.hpp"

namespace splink {

/// One detection matched to its nearest expected return.
struct Deviation {
    std::int64_t value_ps = 0;  // t_exp - t_ret, signed
    std::int64_t source_detection_epoch_ps = 0;
    std::int64_t matched_shot_epoch_ps = 0;
};

struct DeviationHistogram {
    double bin_width_ns = 5.0;
    double span_ns = 250.0;
    long long n_side = 0;                 // bins per side of the central one
    std::vector<long long> counts;        // size 2*n_side + 1

    double bin_center_ns(std::size_t i) const {
        return (static_cast<double>(i) - static_cast<double>(n_side)) * bin_width_ns;
    }
    long long total() const {
        long long t = 0;
        for (long long c : counts) t += c;
        return t;
    }
};

struct PeakReport {
    double peak_bin_center_ns = 0.0;
    long long peak_count = 0;
    double background_mean = 0.0;
    double background_sigma = 0.0;
    double significance = 0.0;  // (peak - mean) / sigma
    bool passes_3sigma = false;
    bool centered_at_zero = false;
    double bin_width_ns = 0.0;
};

struct BinScanResult {
    struct Entry {
        double bin_width_ns;
        double significance;
    };
    std::vector<Entry> entries;
    std::vector<PeakReport> reports;  // aligned with entries
    bool persistent = false;          // > 3 sigma at every width
    double optimal_bin_ns = 0.0;      // argmax significance, ties to smallest
};

/// Correlate detections with laser shots: each detection is assigned
/// the shot whose expected return time is nearest, and emits a
/// deviation when it falls inside the matching window. Shots whose
/// two-way path leaves the ephemeris span are not matchable.
inline std::vector<Deviation> compute_deviations(const TimeTagStream& detections,
                                                 const TimeTagStream& shots,
                                                 const EphemerisTable& eph,
                                                 double window_ns) {
    if (shots.empty()) throw std::logic_error("compute_deviations: empty shot stream");
    if (!(window_ns > 0.0))
        throw std::invalid_argument("compute_deviations: window must be > 0");
    if (!is_sorted_by_epoch(detections) || !is_sorted_by_epoch(shots))
        throw std::logic_error("compute_deviations: streams must be sorted");

    struct Expected {
        std::int64_t t_exp_ps;
        std::int64_t shot_epoch_ps;
    };
    std::vector<Expected> expected;
    expected.reserve(shots.size());
    for (const auto& s : shots) {
        try {
            expected.push_back({expected_return_time(eph, s.epoch_ps), s.epoch_ps});
        } catch (const std::out_of_range&) {
        }
    }
    std::sort(expected.begin(), expected.end(),
              [](const Expected& a, const Expected& b) { return a.t_exp_ps < b.t_exp_ps; });

    const auto window_ps = static_cast<std::int64_t>(std::llround(window_ns * kPsPerNs));
    std::vector<Deviation> out;
    for (const auto& det : detections) {
        if (expected.empty()) break;
        auto it = std::lower_bound(expected.begin(), expected.end(), det.epoch_ps,
                                   [](const Expected& e, std::int64_t v) {
                                       return e.t_exp_ps < v;
                                   });
        const Expected* best = nullptr;
        if (it != expected.end()) best = &*it;
        if (it != expected.begin()) {
            const Expected* prev = &*(it - 1);
            if (!best || std::llabs(prev->t_exp_ps - det.epoch_ps) <=
                             std::llabs(best->t_exp_ps - det.epoch_ps))
                best = prev;
        }
        const std::int64_t d = best->t_exp_ps - det.epoch_ps;
        if (std::llabs(d) <= window_ps)
            out.push_back({d, det.epoch_ps, best->shot_epoch_ps});
    }
    return out;
}

/// Histogram the deviations at the given bin width. The central bin is
/// symmetric about D = 0; values on a bin edge go to the bin on the
/// positive-D side; deviations beyond the span are dropped.
inline DeviationHistogram build_histogram(const std::vector<Deviation>& devs,
                                          double bin_width_ns, double span_ns) {
    if (!(bin_width_ns > 0.0))
        throw std::invalid_argument("build_histogram: bin width must be > 0");
    const auto n_side = static_cast<long long>(std::llround(span_ns / bin_width_ns));
    if (n_side < 1 ||
        std::abs(static_cast<double>(n_side) * bin_width_ns - span_ns) >
            1.0e-9 * std::max(1.0, span_ns))
        throw std::invalid_argument("build_histogram: span must be a positive multiple "
                                    "of the bin width");

    DeviationHistogram hist;
    hist.bin_width_ns = bin_width_ns;
    hist.span_ns = span_ns;
    hist.n_side = n_side;
    hist.counts.assign(static_cast<std::size_t>(2 * n_side + 1), 0);

    const double span_ps = span_ns * kPsPerNs;
    const double width_ps = bin_width_ns * kPsPerNs;
    for (const auto& d : devs) {
        const double v = static_cast<double>(d.value_ps);
        if (std::abs(v) > span_ps) continue;
        auto idx = static_cast<long long>(std::floor(v / width_ps + 0.5));
        if (idx < -n_side) idx = -n_side;
        if (idx > n_side) idx = n_side;
        ++hist.counts[static_cast<std::size_t>(idx + n_side)];
    }
    return hist;
}

/// Peak test against the off-center background: mean and population
/// sigma over all bins outside the central exclusion zone, peak is the
/// maximum bin (ties resolved toward the center). A zero background
/// sigma with an excess peak reports infinite significance -- the
/// everything-in-the-central-bin case.
inline PeakReport detect_peak(const DeviationHistogram& hist,
                              long long exclusion_halfwidth_bins = 1) {
    if (exclusion_halfwidth_bins < 0)
        throw std::invalid_argument("detect_peak: exclusion halfwidth must be >= 0");
    const long long n = hist.n_side;
    long long n_background = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        const long long offset = static_cast<long long>(i) - n;
        if (std::llabs(offset) <= exclusion_halfwidth_bins) continue;
        const auto c = static_cast<double>(hist.counts[i]);
        sum += c;
        sum_sq += c * c;
        ++n_background;
    }
    if (n_background < 10)
        throw std::domain_error("detect_peak: fewer than 10 background bins after "
                                "exclusion");

    // Max bin; ties prefer the bin nearest zero, then the positive side.
    std::size_t best = 0;
    auto rank = [n](std::size_t i) {
        const long long offset = static_cast<long long>(i) - n;
        return 2 * std::llabs(offset) + (offset < 0 ? 1 : 0);
    };
    for (std::size_t i = 1; i < hist.counts.size(); ++i) {
        if (hist.counts[i] > hist.counts[best] ||
            (hist.counts[i] == hist.counts[best] && rank(i) < rank(best)))
            best = i;
    }

    PeakReport r;
    r.bin_width_ns = hist.bin_width_ns;
    r.peak_bin_center_ns = hist.bin_center_ns(best);
    r.peak_count = hist.counts[best];
    r.background_mean = sum / static_cast<double>(n_background);
    const double var = sum_sq / static_cast<double>(n_background) -
                       r.background_mean * r.background_mean;
    r.background_sigma = var > 0.0 ? std::sqrt(var) : 0.0;
    const double excess = static_cast<double>(r.peak_count) - r.background_mean;
    if (r.background_sigma > 0.0)
        r.significance = excess / r.background_sigma;
    else
        r.significance = excess > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    r.passes_3sigma = r.significance > 3.0;
    r.centered_at_zero = std::abs(r.peak_bin_center_ns) <= hist.bin_width_ns / 2.0;
    return r;
}

/// Smallest multiple of the width covering the requested span.
inline double rounded_span(double span_ns, double width_ns) {
    return std::ceil(span_ns / width_ns - 1.0e-9) * width_ns;
}

/// Persistence scan: one histogram and peak report per bin width.
/// Deviations are restricted to the requested span up front so every
/// width sees the identical sample, whatever its rounded span.
inline BinScanResult scan_bin_widths(const std::vector<Deviation>& devs,
                                     const std::vector<double>& widths_ns,
                                     double span_ns,
                                     long long exclusion_halfwidth_bins = 1) {
    if (widths_ns.empty())
        throw std::invalid_argument("scan_bin_widths: need at least one width");
    const double span_ps = span_ns * kPsPerNs;
    std::vector<Deviation> in_span;
    for (const auto& d : devs)
        if (std::abs(static_cast<double>(d.value_ps)) <= span_ps) in_span.push_back(d);

    BinScanResult result;
    result.persistent = true;
    double best_sig = -std::numeric_limits<double>::infinity();
    for (double w : widths_ns) {
        const auto hist = build_histogram(in_span, w, rounded_span(span_ns, w));
        const auto report = detect_peak(hist, exclusion_halfwidth_bins);
        result.entries.push_back({w, report.significance});
        result.reports.push_back(report);
        if (!(report.significance > 3.0)) result.persistent = false;
        if (report.significance > best_sig ||
            (report.significance == best_sig && w < result.optimal_bin_ns)) {
            best_sig = report.significance;
            result.optimal_bin_ns = w;
        }
    }
    return result;
}

/// The paper's two-condition detection verdict: the peak clears 3 sigma
/// at every scanned width and sits in the central bin at every width.
inline bool persistent_central_peak(const BinScanResult& scan) {
    if (!scan.persistent || scan.reports.empty()) return false;
    for (const auto& r : scan.reports)
        if (!r.centered_at_zero) return false;
    return true;
}

/// Partition deviations by detection epoch into consecutive half-open
/// arcs [k L, (k+1) L), counted from epoch zero. A boundary epoch goes
/// to the later arc.
inline std::vector<std::vector<Deviation>> segment_arcs(const std::vector<Deviation>& devs,
                                                        double arc_length_s) {
    if (!(arc_length_s > 0.0))
        throw std::invalid_argument("segment_arcs: arc_length must be > 0");
    if (devs.empty()) return {};
    const double arc_ps = arc_length_s * kPsPerSecond;
    long long max_arc = 0;
    for (const auto& d : devs)
        max_arc = std::max(max_arc,
                           static_cast<long long>(std::floor(
                               static_cast<double>(d.source_detection_epoch_ps) / arc_ps)));
    std::vector<std::vector<Deviation>> arcs(static_cast<std::size_t>(max_arc) + 1);
    for (const auto& d : devs) {
        const auto k = static_cast<std::size_t>(std::floor(
            static_cast<double>(d.source_detection_epoch_ps) / arc_ps));
        arcs[k].push_back(d);
    }
    return arcs;
}

struct RateEstimate {
    double rate_cps = 0.0;
    double p_det = 0.0;
    double mu = 0.0;
    bool negative_excess = false;  // peak fell below the background mean
};

/// Signal rate above background from the peak report, then the per-shot
/// probability and the channel mean photon number.
inline RateEstimate estimate_signal_rate_and_mu(const PeakReport& report,
                                                double arc_duration_s,
                                                const LaserParams& laser,
                                                double detector_loss_db,
                                                double path_loss_db) {
    laser.validate();
    if (!(arc_duration_s > 0.0))
        throw std::invalid_argument("estimate_signal_rate_and_mu: arc_duration must be > 0");
    RateEstimate e;
    const double excess = static_cast<double>(report.peak_count) - report.background_mean;
    if (excess < 0.0) {
        e.negative_excess = true;
        return e;
    }
    e.rate_cps = excess / arc_duration_s;
    e.p_det = e.rate_cps / laser.repetition_rate_hz;
    e.mu = infer_mean_photon_number(e.p_det, detector_loss_db, path_loss_db);
    return e;
}

// --- exports: stable field order for golden-file comparisons ---

inline void write_histogram_csv(const DeviationHistogram& hist, std::ostream& os) {
    os << "bin_center_ns,count\n";
    char buf[64];
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g,%lld\n", hist.bin_center_ns(i),
                      hist.counts[i]);
        os << buf;
    }
}

inline void write_peak_report_kv(const PeakReport& r, std::ostream& os) {
    char buf[96];
    auto put = [&](const char* key, const char* fmt, auto value) {
        std::snprintf(buf, sizeof(buf), fmt, value);
        os << key << "=" << buf << "\n";
    };
    put("bin_width_ns", "%.9g", r.bin_width_ns);
    put("peak_bin_center_ns", "%.9g", r.peak_bin_center_ns);
    put("peak_count", "%lld", r.peak_count);
    put("background_mean", "%.9g", r.background_mean);
    put("background_sigma", "%.9g", r.background_sigma);
    put("significance", "%.9g", r.significance);
    os << "passes_3sigma=" << (r.passes_3sigma ? "true" : "false") << "\n";
    os << "centered_at_zero=" << (r.centered_at_zero ? "true" : "false") << "\n";
}

inline void write_bin_scan_csv(const BinScanResult& scan, std::ostream& os) {
    os << "bin_width_ns,significance\n";
    char buf[64];
    for (const auto& e : scan.entries) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", e.bin_width_ns, e.significance);
        os << buf;
    }
}

}  // namespace splink

#endif
