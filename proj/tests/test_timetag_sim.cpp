#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "splink/timetag_sim.hpp"

using namespace splink;

namespace {

LaserParams default_laser() { return LaserParams{}; }

JitterModel zero_jitter(std::uint64_t seed = 0) {
    JitterModel j;
    j.laser_emission_sigma_ns = 0.0;
    j.detector_sigma_ns = 0.0;
    j.timestamp_sigma_ns = 0.0;
    j.clock_sigma_ns = 0.0;
    j.seed = seed;
    return j;
}

EphemerisTable flat_table(double range_m, double span_s = 40.0) {
    EphemerisTable t;
    t.sample_interval_s = 1.0;
    const int n = static_cast<int>(span_s) + 1;
    for (int k = 0; k < n; ++k)
        t.samples.push_back({static_cast<std::int64_t>(k) * 1'000'000'000'000LL, range_m});
    t.validate();
    return t;
}

// Table whose usable stencil span covers [0, duration] comfortably.
EphemerisTable pass_table(double duration_s) {
    SyntheticOrbit orbit;
    orbit.altitude_m = 1485.0e3;
    orbit.max_elevation_deg = 60.0;
    orbit.pass_duration_s = duration_s + 8.0;
    auto table = synthesize_pass(orbit, 1.0);
    return shift_epochs(table, -4'000'000'000'000LL);
}

}  // namespace

TEST_CASE("shot times without jitter form the exact pulse grid") {
    const auto shots = generate_shot_times(default_laser(), 1.0, zero_jitter());
    REQUIRE(shots.size() == 17000);
    for (std::size_t k = 0; k < shots.size(); ++k) {
        CHECK(shots[k].channel == Channel::LaserFire);
        CHECK(shots[k].epoch_ps ==
              std::llround(static_cast<double>(k) * 1.0e12 / 17000.0));
    }
}

TEST_CASE("shot jitter has the configured sigma") {
    JitterModel jitter;
    jitter.seed = 2024;
    const auto shots = generate_shot_times(default_laser(), 5.0, jitter);
    REQUIRE(shots.size() == 85000);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t k = 0; k < shots.size(); ++k) {
        const double grid = static_cast<double>(k) * 1.0e12 / 17000.0;
        const double d = (static_cast<double>(shots[k].epoch_ps) - grid) / 1.0e3;  // ns
        sum += d;
        sum_sq += d * d;
    }
    const double n = static_cast<double>(shots.size());
    const double sigma = std::sqrt(sum_sq / n - (sum / n) * (sum / n));
    CHECK(sigma == doctest::Approx(0.5).epsilon(0.10));
}

TEST_CASE("shot generation is deterministic per seed") {
    JitterModel jitter;
    jitter.seed = 77;
    const auto a = generate_shot_times(default_laser(), 2.0, jitter);
    const auto b = generate_shot_times(default_laser(), 2.0, jitter);
    CHECK(a == b);
    jitter.seed = 78;
    CHECK(generate_shot_times(default_laser(), 2.0, jitter) != a);
}

TEST_CASE("signal returns: none at zero probability, binomial count otherwise") {
    const auto table = pass_table(60.0);
    auto jitter = zero_jitter(5);
    const auto shots = generate_shot_times(default_laser(), 60.0, jitter);

    CHECK(simulate_signal_returns(shots, table, 0.0, jitter).empty());

    const double p_det = 2.9e-4;
    const auto detections = simulate_signal_returns(shots, table, p_det, jitter);
    const double mean = static_cast<double>(shots.size()) * p_det;  // about 296
    const double sigma = std::sqrt(mean * (1.0 - p_det));
    CHECK(static_cast<double>(detections.size()) > mean - 3.5 * sigma);
    CHECK(static_cast<double>(detections.size()) < mean + 3.5 * sigma);
}

TEST_CASE("signal count over seeded runs tracks rate * p_det * duration") {
    const auto table = pass_table(5.0);
    const double p_det = 2.9e-4;
    double total = 0.0;
    const int runs = 100;
    for (int r = 0; r < runs; ++r) {
        auto jitter = zero_jitter(static_cast<std::uint64_t>(1000 + r));
        const auto shots = generate_shot_times(default_laser(), 5.0, jitter);
        total += static_cast<double>(
            simulate_signal_returns(shots, table, p_det, jitter).size());
    }
    const double expected = 17000.0 * p_det * 5.0;
    const double sigma_mean = std::sqrt(expected) / std::sqrt(static_cast<double>(runs));
    CHECK(std::abs(total / runs - expected) < 3.0 * sigma_mean);
}

TEST_CASE("jitter components combine by root-sum-square") {
    JitterModel j;
    CHECK(j.return_path_sigma_ns() == doctest::Approx(std::sqrt(0.44)).epsilon(1e-12));
    // combined with the 0.5 ns laser term: about 0.83 ns, near the 1 ns scale
    const double total = std::sqrt(0.25 + 0.44);
    CHECK(total == doctest::Approx(0.8307).epsilon(1e-3));
    CHECK(total < 1.0);
}

TEST_CASE("zero jitter and perturbation give exactly D = 0 detections") {
    const auto table = pass_table(10.0);
    auto jitter = zero_jitter(31);
    const auto shots = generate_shot_times(default_laser(), 10.0, jitter);
    const auto exp = compute_expected_returns(shots, table);
    const auto detections = simulate_signal_returns(shots, exp, 5.0e-3, jitter);
    REQUIRE(!detections.empty());
    // every detection epoch must be one of the expected return epochs
    for (const auto& det : detections) {
        bool found = false;
        for (std::size_t i = 0; i < shots.size(); ++i)
            if (exp.valid[i] && exp.t_exp_ps[i] == det.epoch_ps) found = true;
        CHECK(found);
    }
}

TEST_CASE("shots outside the ephemeris span are skipped and counted") {
    const auto table = flat_table(1.65e6, 10.0);  // usable span [4 s, 6 s]
    auto jitter = zero_jitter(1);
    const auto shots = generate_shot_times(default_laser(), 10.0, jitter);
    std::size_t skipped = 0;
    simulate_signal_returns(shots, table, 1.0e-3, jitter, &skipped);
    CHECK(skipped > 0);
    CHECK(skipped < shots.size());
}

TEST_CASE("background rate and determinism") {
    const auto table = pass_table(100.0);
    auto jitter = zero_jitter(3);
    const auto shots = generate_shot_times(default_laser(), 100.0, jitter);

    BackgroundModel bg;
    bg.rate_cps = 0.0;
    bg.seed = 9;
    GateConfig gate;
    CHECK(simulate_background(table, shots, bg, gate, 100.0).empty());

    bg.rate_cps = 0.4;
    const auto a = simulate_background(table, shots, bg, gate, 100.0);
    const auto b = simulate_background(table, shots, bg, gate, 100.0);
    CHECK(a == b);
    // 40 +- 13 expected (2 sigma Poisson); allow 3 sigma for the frozen seed
    CHECK(static_cast<double>(a.size()) > 40.0 - 19.0);
    CHECK(static_cast<double>(a.size()) < 40.0 + 19.0);
}

TEST_CASE("background arrivals are uniform within gate windows") {
    const auto table = pass_table(50.0);
    auto jitter = zero_jitter(12);
    const auto shots = generate_shot_times(default_laser(), 50.0, jitter);
    const auto exp = compute_expected_returns(shots, table);

    BackgroundModel bg;
    bg.rate_cps = 40.0;  // dense, to give the KS test real statistics
    bg.rms_fraction = 0.0;
    bg.seed = 21;
    GateConfig gate;
    const auto events = simulate_background(exp, bg, gate, 50.0);
    REQUIRE(events.size() > 1000);

    // pool positions relative to the window center, mapped to [0, 1)
    std::vector<std::int64_t> centers;
    for (std::size_t i = 0; i < exp.t_exp_ps.size(); ++i)
        if (exp.valid[i]) centers.push_back(exp.t_exp_ps[i]);
    std::sort(centers.begin(), centers.end());

    std::vector<double> u;
    const double width_ps = 2.0 * gate.gate_half_width_ns * 1.0e3;
    for (const auto& ev : events) {
        auto it = std::lower_bound(centers.begin(), centers.end(), ev.epoch_ps);
        std::int64_t nearest = it != centers.end() ? *it : centers.back();
        if (it != centers.begin() &&
            std::llabs(*(it - 1) - ev.epoch_ps) < std::llabs(nearest - ev.epoch_ps))
            nearest = *(it - 1);
        u.push_back((static_cast<double>(ev.epoch_ps - nearest) + width_ps / 2.0) / width_ps);
    }
    std::sort(u.begin(), u.end());
    double ks = 0.0;
    const double n = static_cast<double>(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double ecdf_hi = static_cast<double>(i + 1) / n;
        const double ecdf_lo = static_cast<double>(i) / n;
        ks = std::max({ks, std::abs(ecdf_hi - u[i]), std::abs(u[i] - ecdf_lo)});
    }
    // KS critical value at the 1% level
    CHECK(ks < 1.63 / std::sqrt(n));
}

TEST_CASE("background events all land inside a gate window") {
    SyntheticOrbit orbit;
    orbit.altitude_m = 1485.0e3;
    orbit.max_elevation_deg = 30.0;
    orbit.pass_duration_s = 28.0;
    const auto table = shift_epochs(synthesize_pass(orbit, 1.0), -4'000'000'000'000LL);
    auto jitter = zero_jitter(8);
    const auto shots = generate_shot_times(default_laser(), 20.0, jitter);
    const auto exp = compute_expected_returns(shots, table);

    BackgroundModel bg;
    bg.rate_cps = 80.0;
    bg.seed = 5;
    GateConfig gate;
    const auto events = simulate_background(exp, bg, gate, 20.0);
    REQUIRE(events.size() > 800);

    std::vector<std::int64_t> centers;
    for (std::size_t i = 0; i < exp.t_exp_ps.size(); ++i)
        if (exp.valid[i]) centers.push_back(exp.t_exp_ps[i]);
    std::sort(centers.begin(), centers.end());
    const auto half_ps =
        static_cast<std::int64_t>(gate.gate_half_width_ns * 1.0e3) + 1;
    std::size_t inside = 0;
    for (const auto& ev : events) {
        auto it = std::lower_bound(centers.begin(), centers.end(), ev.epoch_ps);
        std::int64_t best = it != centers.end() ? *it : centers.back();
        if (it != centers.begin() &&
            std::llabs(*(it - 1) - ev.epoch_ps) < std::llabs(best - ev.epoch_ps))
            best = *(it - 1);
        if (std::llabs(ev.epoch_ps - best) <= half_ps) ++inside;
    }
    CHECK(inside == events.size());
}

TEST_CASE("merge and gate") {
    GateConfig gate;  // 50 ns dead time

    TimeTagStream x = {{Channel::Detection, 100}, {Channel::Detection, 200'000}};
    CHECK(merge_and_gate(x, {}, gate) == x);
    CHECK(merge_and_gate({}, x, gate) == x);

    // second detection 10 ps after the first is inside the dead time
    TimeTagStream close = {{Channel::Detection, 1000}, {Channel::Detection, 1010}};
    const auto gated = merge_and_gate(close, {}, gate);
    REQUIRE(gated.size() == 1);
    CHECK(gated[0].epoch_ps == 1000);

    // merged count never exceeds the sum of inputs
    TimeTagStream a = {{Channel::Detection, 10}, {Channel::Detection, 100'000}};
    TimeTagStream b = {{Channel::Detection, 50'000}, {Channel::Detection, 1'000'000}};
    CHECK(merge_and_gate(a, b, gate).size() <= a.size() + b.size());

    TimeTagStream unsorted = {{Channel::Detection, 500}, {Channel::Detection, 100}};
    CHECK_THROWS_AS(merge_and_gate(unsorted, {}, gate), std::logic_error);

    // zero dead time still deduplicates exact ties
    GateConfig no_dead;
    no_dead.dead_time_ns = 0.0;
    TimeTagStream dup = {{Channel::Detection, 42}, {Channel::Detection, 42}};
    CHECK(merge_and_gate(dup, {}, no_dead).size() == 1);
}

TEST_CASE("timetag file round trip") {
    const auto table = pass_table(5.0);
    JitterModel jitter;
    jitter.seed = 55;
    const auto shots = generate_shot_times(default_laser(), 5.0, jitter);
    const auto detections = simulate_signal_returns(shots, table, 1.0e-2, jitter);
    TimeTagStream stream;
    std::merge(shots.begin(), shots.end(), detections.begin(), detections.end(),
               std::back_inserter(stream),
               [](const auto& a, const auto& b) { return a.epoch_ps < b.epoch_ps; });

    std::stringstream ss;
    write_timetags(stream, ss);
    CHECK(read_timetags(ss) == stream);

    std::stringstream empty_ss;
    write_timetags({}, empty_ss);
    CHECK(empty_ss.str() == "channel,epoch_ps\n");
    CHECK(read_timetags(empty_ss).empty());
}

TEST_CASE("timetag file validation names the offending line") {
    std::stringstream decreasing("channel,epoch_ps\nF,100\nD,50\n");
    try {
        read_timetags(decreasing);
        FAIL("expected a validation error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::stringstream garbage("channel,epoch_ps\nF,100\nQ,200\n");
    CHECK_THROWS_AS(read_timetags(garbage), std::runtime_error);
    std::stringstream no_header("F,100\n");
    CHECK_THROWS_AS(read_timetags(no_header), std::runtime_error);
}

TEST_CASE("full pass simulation is deterministic in the master seed") {
    PassSimConfig config;
    config.ephemeris = pass_table(5.0);
    config.duration_s = 5.0;
    config.master_seed = 31337;
    config.p_det_override = 2.9e-4;
    const auto a = run_pass(config);
    const auto b = run_pass(config);
    CHECK(a.stream == b.stream);
    CHECK(a.p_det == 2.9e-4);

    config.master_seed = 31338;
    CHECK(run_pass(config).stream != a.stream);

    config.duration_s = 100.0;  // beyond the table span
    CHECK_THROWS_AS(run_pass(config), std::invalid_argument);
}
