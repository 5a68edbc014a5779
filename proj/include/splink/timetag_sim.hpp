#ifndef SPLINK_TIMETAG_SIM_HPP
#define SPLINK_TIMETAG_SIM_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "splink/constants.hpp"
#include "splink/ephemeris.hpp"
#include "splink/link_budget.hpp"
#include "splink/rng.hpp"
#include "splink/timetag.hpp"

namespace splink {

/// Instrument timing jitter, Gaussian per component. Components on the
/// return path (detector, timestamp, clock) combine by root-sum-square;
/// the laser component is applied to the fire tag itself.
struct JitterModel {
    double laser_emission_sigma_ns = 0.5;
    double detector_sigma_ns = 0.6;
    double timestamp_sigma_ns = 0.2;
    double clock_sigma_ns = 0.2;
    std::uint64_t seed = 0;

    void validate() const {
        if (laser_emission_sigma_ns < 0.0 || detector_sigma_ns < 0.0 ||
            timestamp_sigma_ns < 0.0 || clock_sigma_ns < 0.0)
            throw std::invalid_argument("jitter: sigmas must be >= 0");
    }

    double return_path_sigma_ns() const {
        return std::sqrt(detector_sigma_ns * detector_sigma_ns +
                         timestamp_sigma_ns * timestamp_sigma_ns +
                         clock_sigma_ns * clock_sigma_ns);
    }
};

struct BackgroundModel {
    /// How rate_cps is read: counts per second landing anywhere inside
    /// the active gate windows, or counts per second landing inside one
    /// reference-width deviation bin.
    enum class RateInterpretation { InGate, InBin };

    double rate_cps = 0.4;
    double rms_fraction = 0.25;  // slow modulation of the rate
    std::uint64_t seed = 0;
    RateInterpretation interpretation = RateInterpretation::InGate;
    double reference_bin_ns = 5.0;

    void validate() const {
        if (rate_cps < 0.0) throw std::invalid_argument("background: rate must be >= 0");
        if (!(rms_fraction >= 0.0 && rms_fraction < 1.0))
            throw std::invalid_argument("background: rms_fraction must be in [0, 1)");
        if (!(reference_bin_ns > 0.0))
            throw std::invalid_argument("background: reference_bin must be > 0");
    }
};

struct GateConfig {
    double gate_half_width_ns = 500.0;  // around the expected return
    double dead_time_ns = 50.0;         // after each accepted detection

    void validate() const {
        if (!(gate_half_width_ns > 0.0))
            throw std::invalid_argument("gate: gate_half_width must be > 0");
        if (dead_time_ns < 0.0)
            throw std::invalid_argument("gate: dead_time must be >= 0");
    }
};

/// Expected return epoch per shot, with shots whose two-way path falls
/// outside the table span flagged invalid rather than dropped, so shot
/// indices stay aligned with the input stream.
struct ExpectedReturns {
    std::vector<std::int64_t> t_exp_ps;  // valid entries only meaningful
    std::vector<char> valid;
    std::size_t skipped = 0;
};

inline ExpectedReturns compute_expected_returns(const TimeTagStream& shots,
                                                const EphemerisTable& eph) {
    ExpectedReturns out;
    out.t_exp_ps.resize(shots.size(), 0);
    out.valid.resize(shots.size(), 0);
    for (std::size_t i = 0; i < shots.size(); ++i) {
        try {
            out.t_exp_ps[i] = expected_return_time(eph, shots[i].epoch_ps);
            out.valid[i] = 1;
        } catch (const std::out_of_range&) {
            ++out.skipped;
        }
    }
    return out;
}

/// Laser fire tags: exact multiples of the pulse period plus Gaussian
/// emission jitter. floor(duration * rate) shots.
inline TimeTagStream generate_shot_times(const LaserParams& laser, double duration_s,
                                         const JitterModel& jitter) {
    laser.validate();
    jitter.validate();
    if (!(duration_s > 0.0))
        throw std::invalid_argument("generate_shot_times: duration must be > 0");
    const auto n = static_cast<long long>(std::floor(duration_s * laser.repetition_rate_hz));
    const double period_ps = kPsPerSecond / laser.repetition_rate_hz;
    const double sigma_ps = jitter.laser_emission_sigma_ns * kPsPerNs;
    TimeTagStream shots;
    shots.reserve(static_cast<std::size_t>(n));
    for (long long k = 0; k < n; ++k) {
        double t = static_cast<double>(k) * period_ps;
        if (sigma_ps > 0.0) {
            CounterRng rng(jitter.seed, rng_stream::indexed(rng_stream::kShots,
                                                            static_cast<std::uint64_t>(k)));
            t += sigma_ps * rng.gaussian();
            if (t < 0.0) t = 0.0;  // epochs are non-negative
        }
        shots.push_back({Channel::LaserFire, std::llround(t)});
    }
    sort_by_epoch(shots);
    return shots;
}

inline TimeTagStream simulate_signal_returns(const TimeTagStream& shots,
                                             const ExpectedReturns& exp,
                                             double p_det, const JitterModel& jitter) {
    jitter.validate();
    if (!(p_det >= 0.0 && p_det <= 1.0))
        throw std::invalid_argument("simulate_signal_returns: p_det must be in [0,1]");
    const double sigma_ps = jitter.return_path_sigma_ns() * kPsPerNs;
    TimeTagStream detections;
    for (std::size_t i = 0; i < shots.size(); ++i) {
        if (!exp.valid[i]) continue;
        CounterRng rng(jitter.seed,
                       rng_stream::indexed(rng_stream::kSignal, static_cast<std::uint64_t>(i)));
        if (rng.next_double() >= p_det) continue;
        const double offset = sigma_ps > 0.0 ? sigma_ps * rng.gaussian() : 0.0;
        detections.push_back(
            {Channel::Detection, exp.t_exp_ps[i] + std::llround(offset)});
    }
    sort_by_epoch(detections);
    return detections;
}

/// Each shot yields a detection with probability p_det, at the expected
/// return epoch plus the return-path jitter. Shots outside the
/// ephemeris span are skipped; the count is reported through
/// skipped_out when given.
inline TimeTagStream simulate_signal_returns(const TimeTagStream& shots,
                                             const EphemerisTable& eph, double p_det,
                                             const JitterModel& jitter,
                                             std::size_t* skipped_out = nullptr) {
    const auto exp = compute_expected_returns(shots, eph);
    if (skipped_out) *skipped_out = exp.skipped;
    return simulate_signal_returns(shots, exp, p_det, jitter);
}

namespace detail {
/// Slow multiplicative rate modulation with the configured rms
/// fraction: 1 + sqrt(2) f sin(2 pi t / T + phase), clamped at zero.
/// The modulation period is fixed at 10 s.
inline double background_modulation(const BackgroundModel& bg, double t_s, double phase) {
    constexpr double kModulationPeriodS = 10.0;
    const double m = 1.0 + std::sqrt(2.0) * bg.rms_fraction *
                               std::sin(2.0 * kPi * t_s / kModulationPeriodS + phase);
    return m > 0.0 ? m : 0.0;
}
}  // namespace detail

inline TimeTagStream simulate_background(const ExpectedReturns& exp,
                                         const BackgroundModel& bg, const GateConfig& gate,
                                         double duration_s) {
    bg.validate();
    gate.validate();
    if (!(duration_s > 0.0))
        throw std::invalid_argument("simulate_background: duration must be > 0");

    double rate = bg.rate_cps;
    if (bg.interpretation == BackgroundModel::RateInterpretation::InBin)
        rate *= 2.0 * gate.gate_half_width_ns / bg.reference_bin_ns;

    std::size_t n_windows = 0;
    for (char v : exp.valid) n_windows += static_cast<std::size_t>(v);
    if (n_windows == 0 || rate == 0.0) return {};

    const double half_ps = gate.gate_half_width_ns * kPsPerNs;
    CounterRng phase_rng(bg.seed, rng_stream::kModulation);
    const double phase = phase_rng.uniform(0.0, 2.0 * kPi);

    TimeTagStream detections;
    for (std::size_t i = 0; i < exp.valid.size(); ++i) {
        if (!exp.valid[i]) continue;
        const double center_s = static_cast<double>(exp.t_exp_ps[i]) / kPsPerSecond;
        const double lambda = rate * detail::background_modulation(bg, center_s, phase) *
                              duration_s / static_cast<double>(n_windows);
        CounterRng rng(bg.seed, rng_stream::indexed(rng_stream::kBackground,
                                                    static_cast<std::uint64_t>(i)));
        const long long count = rng.poisson(lambda);
        for (long long c = 0; c < count; ++c) {
            const double offset = rng.uniform(-half_ps, half_ps);
            detections.push_back(
                {Channel::Detection, exp.t_exp_ps[i] + std::llround(offset)});
        }
    }
    sort_by_epoch(detections);
    return detections;
}

/// Homogeneous Poisson background restricted to the union of gate
/// windows centered on each shot's expected return, with a slow seeded
/// rate modulation. Arrival epochs are uniform within each window.
inline TimeTagStream simulate_background(const EphemerisTable& eph,
                                         const TimeTagStream& shots,
                                         const BackgroundModel& bg, const GateConfig& gate,
                                         double duration_s) {
    return simulate_background(compute_expected_returns(shots, eph), bg, gate, duration_s);
}

/// Merge two sorted detection streams and apply the detector dead
/// time: any detection closer than dead_time after an accepted one is
/// dropped, as are exact duplicates.
inline TimeTagStream merge_and_gate(const TimeTagStream& signal,
                                    const TimeTagStream& background,
                                    const GateConfig& gate) {
    gate.validate();
    if (!is_sorted_by_epoch(signal) || !is_sorted_by_epoch(background))
        throw std::logic_error("merge_and_gate: input streams must be sorted");
    TimeTagStream merged;
    merged.reserve(signal.size() + background.size());
    std::merge(signal.begin(), signal.end(), background.begin(), background.end(),
               std::back_inserter(merged),
               [](const auto& a, const auto& b) { return a.epoch_ps < b.epoch_ps; });
    const auto dead_ps = static_cast<std::int64_t>(gate.dead_time_ns * kPsPerNs);
    TimeTagStream out;
    out.reserve(merged.size());
    for (const auto& r : merged) {
        if (!out.empty()) {
            const std::int64_t gap = r.epoch_ps - out.back().epoch_ps;
            if (gap == 0 || gap < dead_ps) continue;
        }
        out.push_back(r);
    }
    return out;
}

struct PassSimConfig {
    LinkParameters link;
    EphemerisTable ephemeris;
    JitterModel jitter;
    BackgroundModel background;
    GateConfig gate;
    double start_s = 0.0;  // first shot offset into the ephemeris
    double duration_s = 60.0;
    std::uint64_t master_seed = 1;
    /// When set, replaces the link-budget detection probability (for
    /// driving the simulator from a measured rate).
    std::optional<double> p_det_override;
};

struct PassSimResult {
    TimeTagStream stream;  // fire tags and gated detections, merged
    std::size_t skipped_shots = 0;
    double p_det = 0.0;
};

/// Full Monte-Carlo pass: fire tags, signal returns, background,
/// gating. All randomness derives from master_seed; the jitter and
/// background seeds in the config are overridden by it.
inline PassSimResult run_pass(const PassSimConfig& config) {
    config.link.validate();
    config.ephemeris.validate();
    if (!(config.duration_s > 0.0))
        throw std::invalid_argument("run_pass: duration must be > 0");
    const double span_s =
        static_cast<double>(config.ephemeris.last_epoch_ps() -
                            config.ephemeris.first_epoch_ps()) / kPsPerSecond;
    if (config.duration_s > span_s)
        throw std::invalid_argument("run_pass: duration exceeds the ephemeris span");

    JitterModel jitter = config.jitter;
    jitter.seed = config.master_seed;
    BackgroundModel bg = config.background;
    bg.seed = config.master_seed;

    const double p_det = config.p_det_override
                             ? *config.p_det_override
                             : per_shot_detection_probability(config.link);

    TimeTagStream shots = generate_shot_times(config.link.laser, config.duration_s, jitter);
    if (config.start_s != 0.0) {
        const auto delta = std::llround(config.start_s * kPsPerSecond);
        for (auto& s : shots) s.epoch_ps += delta;
    }

    const ExpectedReturns exp = compute_expected_returns(shots, config.ephemeris);
    const TimeTagStream signal = simulate_signal_returns(shots, exp, p_det, jitter);
    const TimeTagStream noise =
        simulate_background(exp, bg, config.gate, config.duration_s);
    const TimeTagStream detections = merge_and_gate(signal, noise, config.gate);

    TimeTagStream stream;
    stream.reserve(shots.size() + detections.size());
    std::merge(shots.begin(), shots.end(), detections.begin(), detections.end(),
               std::back_inserter(stream),
               [](const auto& a, const auto& b) { return a.epoch_ps < b.epoch_ps; });
    return {std::move(stream), exp.skipped, p_det};
}

}  // namespace splink

#endif
