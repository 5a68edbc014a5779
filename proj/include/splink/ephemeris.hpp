#ifndef SPLINK_EPHEMERIS_HPP
#define SPLINK_EPHEMERIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "splink/constants.hpp"
#include "splink/rng.hpp"

namespace splink {

struct RangeSample {
    std::int64_t epoch_ps = 0;  // since pass reference
    double range_m = 0.0;
};

/// Uniformly sampled station-to-satellite range, interpolated with a
/// fixed-order Lagrange polynomial over a centered stencil. Immutable
/// after construction; queries are read-only.
struct EphemerisTable {
    std::vector<RangeSample> samples;
    double sample_interval_s = 0.0;
    int interpolation_order = 8;

    void validate() const {
        if (interpolation_order < 1)
            throw std::invalid_argument("ephemeris: interpolation_order must be >= 1");
        if (samples.size() < static_cast<std::size_t>(interpolation_order) + 1)
            throw std::invalid_argument("ephemeris: need at least order+1 samples");
        if (!(sample_interval_s > 0.0))
            throw std::invalid_argument("ephemeris: sample_interval must be > 0");
        const double step_ps = sample_interval_s * kPsPerSecond;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!(samples[i].range_m > 0.0))
                throw std::invalid_argument("ephemeris: range must be > 0");
            if (i > 0) {
                const auto gap =
                    static_cast<double>(samples[i].epoch_ps - samples[i - 1].epoch_ps);
                if (gap <= 0.0)
                    throw std::invalid_argument("ephemeris: epochs must be strictly increasing");
                if (std::abs(gap - step_ps) > 1.0e-6 * step_ps)
                    throw std::invalid_argument("ephemeris: spacing not uniform within 1 ppm");
            }
        }
    }

    double interval_ps() const { return sample_interval_s * kPsPerSecond; }
    std::int64_t first_epoch_ps() const { return samples.front().epoch_ps; }
    std::int64_t last_epoch_ps() const { return samples.back().epoch_ps; }
};

struct SyntheticOrbit {
    double altitude_m = 1485.0e3;
    double max_elevation_deg = 90.0;
    double earth_radius_m = kEarthRadiusDefault;
    double pass_duration_s = 60.0;

    void validate() const {
        if (!(altitude_m > 0.0))
            throw std::invalid_argument("orbit: altitude must be > 0");
        if (!(max_elevation_deg > 0.0 && max_elevation_deg <= 90.0))
            throw std::invalid_argument("orbit: max_elevation must be in (0, 90]");
        if (!(earth_radius_m > 0.0))
            throw std::invalid_argument("orbit: earth_radius must be > 0");
        if (!(pass_duration_s > 0.0))
            throw std::invalid_argument("orbit: pass_duration must be > 0");
    }
};

struct PerturbationModel {
    double amplitude_ns = 0.0;  // one-way range-equivalent time
    double correlation_time_s = 60.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (amplitude_ns < 0.0)
            throw std::invalid_argument("perturbation: amplitude must be >= 0");
        if (!(correlation_time_s > 0.0))
            throw std::invalid_argument("perturbation: correlation_time must be > 0");
    }
};

/// Overflight of a circular orbit over a spherical Earth. The ground
/// track is a great circle whose closest approach realizes the
/// requested maximum elevation; range follows from the law of cosines.
/// Minimal range falls at mid-pass and the pass is symmetric about it.
inline EphemerisTable synthesize_pass(const SyntheticOrbit& orbit, double step_s,
                                      int interpolation_order = 8) {
    orbit.validate();
    if (!(step_s > 0.0)) throw std::invalid_argument("synthesize_pass: step must be > 0");
    const auto n_steps = static_cast<long long>(std::floor(orbit.pass_duration_s / step_s));
    if (n_steps + 1 < interpolation_order + 1)
        throw std::invalid_argument(
            "synthesize_pass: pass_duration/step must give at least order+1 samples");

    const double re = orbit.earth_radius_m;
    const double r = re + orbit.altitude_m;
    const double omega = std::sqrt(kEarthGm / (r * r * r));
    const double elev = orbit.max_elevation_deg * kPi / 180.0;
    // Central angle between station and sub-satellite point at closest
    // approach, from the elevation triangle.
    const double psi_min = kPi / 2.0 - elev - std::asin(re * std::cos(elev) / r);
    const double psi_horizon = std::acos(re / r);
    const double t_mid = orbit.pass_duration_s / 2.0;

    EphemerisTable table;
    table.sample_interval_s = step_s;
    table.interpolation_order = interpolation_order;
    table.samples.reserve(static_cast<std::size_t>(n_steps) + 1);
    for (long long k = 0; k <= n_steps; ++k) {
        const double t = static_cast<double>(k) * step_s;
        const double theta = omega * (t - t_mid);
        const double cos_psi = std::cos(theta) * std::cos(psi_min);
        if (std::acos(cos_psi) > psi_horizon)
            throw std::domain_error(
                "synthesize_pass: satellite drops below the horizon inside the pass; "
                "shorten the pass or raise max_elevation");
        const double range = std::sqrt(re * re + r * r - 2.0 * re * r * cos_psi);
        table.samples.push_back({std::llround(t * kPsPerSecond), range});
    }
    table.validate();
    return table;
}

namespace detail {

struct Stencil {
    std::size_t i0;  // first sample of the stencil
    double u;        // query position in node units, nodes at 0..order
};

inline Stencil locate_stencil(const EphemerisTable& t, double t_ps) {
    const double pos =
        (t_ps - static_cast<double>(t.first_epoch_ps())) / t.interval_ps();
    const int order = t.interpolation_order;
    const int half = order / 2;
    const auto nearest = static_cast<long long>(std::llround(pos));
    const long long i0 = nearest - half;
    if (i0 < 0 || i0 + order >= static_cast<long long>(t.samples.size()))
        throw std::out_of_range("ephemeris: query epoch outside the interpolable span");
    return {static_cast<std::size_t>(i0), pos - static_cast<double>(i0)};
}

}  // namespace detail

/// Lagrange interpolation of the range at epoch t (picoseconds, may be
/// fractional). Exact at sample epochs; no extrapolation.
inline double interpolate_range(const EphemerisTable& table, double t_ps) {
    const auto st = detail::locate_stencil(table, t_ps);
    const int order = table.interpolation_order;
    // Exact node hit: return the stored sample, bypassing roundoff.
    const auto nearest = static_cast<long long>(std::llround(st.u));
    if (nearest >= 0 && nearest <= order) {
        const auto& s = table.samples[st.i0 + static_cast<std::size_t>(nearest)];
        if (t_ps == static_cast<double>(s.epoch_ps)) return s.range_m;
    }
    double acc = 0.0;
    for (int k = 0; k <= order; ++k) {
        double basis = 1.0;
        for (int m = 0; m <= order; ++m) {
            if (m == k) continue;
            basis *= (st.u - static_cast<double>(m)) / static_cast<double>(k - m);
        }
        acc += table.samples[st.i0 + static_cast<std::size_t>(k)].range_m * basis;
    }
    return acc;
}

/// Derivative of the interpolating polynomial, in m/s.
inline double range_rate(const EphemerisTable& table, double t_ps) {
    const auto st = detail::locate_stencil(table, t_ps);
    const int order = table.interpolation_order;
    double acc = 0.0;
    for (int k = 0; k <= order; ++k) {
        double denom = 1.0;
        for (int m = 0; m <= order; ++m)
            if (m != k) denom *= static_cast<double>(k - m);
        double dbasis = 0.0;
        for (int j = 0; j <= order; ++j) {
            if (j == k) continue;
            double prod = 1.0;
            for (int m = 0; m <= order; ++m) {
                if (m == k || m == j) continue;
                prod *= st.u - static_cast<double>(m);
            }
            dbasis += prod;
        }
        acc += table.samples[st.i0 + static_cast<std::size_t>(k)].range_m * dbasis / denom;
    }
    return acc / table.sample_interval_s;
}

struct LightTimeSolution {
    std::int64_t t_exp_ps = 0;
    int iterations = 0;
};

/// Two-way light-time fixed point. One unknown, the satellite-hit
/// epoch: t_hit = t_fire + R(t_hit)/c, then t_exp = t_hit + R(t_hit)/c.
/// Iterates until successive t_exp agree below 1 ps.
inline LightTimeSolution solve_return_time(const EphemerisTable& table,
                                           std::int64_t t_fire_ps) {
    const double tf = static_cast<double>(t_fire_ps);
    double t_hit = tf;
    double t_exp = 0.0;
    double prev_exp = std::numeric_limits<double>::quiet_NaN();
    for (int iter = 1; iter <= 20; ++iter) {
        const double up_ps = interpolate_range(table, t_hit) / kSpeedOfLight * kPsPerSecond;
        t_hit = tf + up_ps;
        t_exp = t_hit + up_ps;
        if (std::abs(t_exp - prev_exp) < 1.0) return {std::llround(t_exp), iter};
        prev_exp = t_exp;
    }
    throw std::runtime_error("solve_return_time: no convergence in 20 iterations");
}

inline std::int64_t expected_return_time(const EphemerisTable& table,
                                         std::int64_t t_fire_ps) {
    return solve_return_time(table, t_fire_ps).t_exp_ps;
}

/// Adds a smooth seeded zero-mean process to the range samples: a sum
/// of eight sinusoids with periods near the correlation time, rescaled
/// so the peak excursion stays below the one-way amplitude bound.
inline EphemerisTable apply_perturbation(const EphemerisTable& table,
                                         const PerturbationModel& model) {
    table.validate();
    model.validate();
    if (model.amplitude_ns == 0.0) return table;

    CounterRng rng(model.seed, rng_stream::kPerturbation);
    constexpr int kComponents = 8;
    double freq[kComponents], phase[kComponents], amp[kComponents];
    for (int k = 0; k < kComponents; ++k) {
        freq[k] = rng.uniform(0.5, 1.5) / model.correlation_time_s;
        phase[k] = rng.uniform(0.0, 2.0 * kPi);
        amp[k] = rng.uniform(0.5, 1.0);
    }
    // Fraction of the hard bound actually reached by this realization.
    const double occupancy = rng.uniform(0.6, 0.95);

    std::vector<double> raw(table.samples.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < table.samples.size(); ++i) {
        const double t = static_cast<double>(table.samples[i].epoch_ps) / kPsPerSecond;
        double v = 0.0;
        for (int k = 0; k < kComponents; ++k)
            v += amp[k] * std::sin(2.0 * kPi * freq[k] * t + phase[k]);
        raw[i] = v;
        mean += v;
    }
    mean /= static_cast<double>(raw.size());
    double max_abs = 0.0;
    for (double& v : raw) {
        v -= mean;
        max_abs = std::max(max_abs, std::abs(v));
    }
    if (max_abs == 0.0) return table;

    const double bound_m = model.amplitude_ns * 1.0e-9 * kSpeedOfLight;
    const double scale = occupancy * bound_m / max_abs;
    EphemerisTable out = table;
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i].range_m += raw[i] * scale;
    return out;
}

/// Shift all epochs by a constant. Handy for placing the usable
/// interpolation span around a simulation window.
inline EphemerisTable shift_epochs(const EphemerisTable& table, std::int64_t delta_ps) {
    EphemerisTable out = table;
    for (auto& s : out.samples) s.epoch_ps += delta_ps;
    return out;
}

// --- CSV interchange: header "epoch_ps,range_m", strictly increasing epochs ---

inline void write_ephemeris_csv(const EphemerisTable& table, std::ostream& os) {
    os << "epoch_ps,range_m\n";
    char buf[64];
    for (const auto& s : table.samples) {
        std::snprintf(buf, sizeof(buf), "%lld,%.6f\n",
                      static_cast<long long>(s.epoch_ps), s.range_m);
        os << buf;
    }
}

inline void write_ephemeris_csv(const EphemerisTable& table, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_ephemeris_csv(table, os);
}

inline EphemerisTable read_ephemeris_csv(std::istream& is, int interpolation_order = 8) {
    std::string line;
    if (!std::getline(is, line) || line != "epoch_ps,range_m")
        throw std::runtime_error("ephemeris csv: missing or bad header");
    EphemerisTable table;
    table.interpolation_order = interpolation_order;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        long long epoch = 0;
        double range = 0.0;
        if (std::sscanf(line.c_str(), "%lld,%lf", &epoch, &range) != 2)
            throw std::runtime_error("ephemeris csv: parse error at line " +
                                     std::to_string(lineno));
        table.samples.push_back({epoch, range});
    }
    if (table.samples.size() >= 2)
        table.sample_interval_s =
            static_cast<double>(table.samples[1].epoch_ps - table.samples[0].epoch_ps) /
            kPsPerSecond;
    table.validate();
    return table;
}

inline EphemerisTable read_ephemeris_csv_file(const std::string& path,
                                              int interpolation_order = 8) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_ephemeris_csv(is, interpolation_order);
}

}  // namespace splink

#endif
