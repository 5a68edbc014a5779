// splink -- command-line front end for the link-budget, pass-generation,
// simulation and analysis modules. Every command is deterministic given
// its flags and seed; primary outputs are byte-stable.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splink/splink.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace splink;

namespace {

std::vector<double> parse_width_list(const std::string& s) {
    std::vector<double> widths;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size() || !(v > 0.0))
            throw std::runtime_error("bad bin width \"" + tok + "\"");
        widths.push_back(v);
    }
    if (widths.empty()) throw std::runtime_error("empty bin-width list");
    return widths;
}

const SatelliteProfile& find_profile(const std::vector<SatelliteProfile>& catalog,
                                     const std::string& name) {
    for (const auto& p : catalog)
        if (p.name == name) return p;
    std::string available;
    for (const auto& p : catalog) {
        if (!available.empty()) available += ", ";
        available += p.name;
    }
    throw std::runtime_error("unknown satellite \"" + name +
                             "\"; available: " + available);
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << content;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- budget

int cmd_budget(const std::string& catalog_path, const std::string& satellite,
               double fov_arcsec, const std::string& out_dir) {
    const auto catalog = load_catalog(catalog_path);
    const double fov = arcsec_to_rad(fov_arcsec);
    std::vector<LinkBudgetReport> reports;
    if (!satellite.empty()) {
        const auto& p = find_profile(catalog, satellite);
        reports.push_back(make_report(p.link, fov, p.name));
    } else {
        for (const auto& p : catalog) reports.push_back(make_report(p.link, fov, p.name));
    }

    std::stringstream table;
    write_budget_table(reports, table);
    std::cout << table.str();

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::stringstream csv;
        write_budget_csv(reports, csv);
        write_text_file(fs::path(out_dir) / "budget.csv", csv.str());
        write_text_file(fs::path(out_dir) / "budget.txt", table.str());
    }
    return 0;
}

// ---------------------------------------------------------------- passgen

int cmd_passgen(double altitude_km, double max_elevation_deg, double duration_s,
                double step_s, double perturbation_ns, double correlation_time_s,
                double shift_s, std::uint64_t seed, const std::string& out_path) {
    SyntheticOrbit orbit;
    orbit.altitude_m = altitude_km * 1.0e3;
    orbit.max_elevation_deg = max_elevation_deg;
    orbit.pass_duration_s = duration_s;
    EphemerisTable table = synthesize_pass(orbit, step_s);
    if (perturbation_ns > 0.0) {
        PerturbationModel model;
        model.amplitude_ns = perturbation_ns;
        model.correlation_time_s = correlation_time_s;
        model.seed = seed;
        table = apply_perturbation(table, model);
    }
    if (shift_s != 0.0)
        table = shift_epochs(table, std::llround(shift_s * kPsPerSecond));
    write_ephemeris_csv(table, out_path);
    std::cout << "wrote " << out_path << " (" << table.samples.size() << " samples)\n";
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string catalog;
    std::string satellite;
    std::string ephemeris;
    std::optional<double> p_det;
    JitterModel jitter;
    BackgroundModel background;
    GateConfig gate;
    double start_s = 0.0;
    double duration_s = 60.0;
    std::uint64_t seed = 1;
};

json simulate_args_to_json(const SimulateArgs& a, double effective_p_det) {
    json j;
    j["command"] = "simulate";
    j["catalog"] = a.catalog;
    j["satellite"] = a.satellite;
    j["ephemeris"] = a.ephemeris;
    j["p_det"] = effective_p_det;
    j["jitter"] = {{"laser_emission_sigma_ns", a.jitter.laser_emission_sigma_ns},
                   {"detector_sigma_ns", a.jitter.detector_sigma_ns},
                   {"timestamp_sigma_ns", a.jitter.timestamp_sigma_ns},
                   {"clock_sigma_ns", a.jitter.clock_sigma_ns}};
    j["background"] = {
        {"rate_cps", a.background.rate_cps},
        {"rms_fraction", a.background.rms_fraction},
        {"interpretation",
         a.background.interpretation == BackgroundModel::RateInterpretation::InBin
             ? "inbin"
             : "ingate"},
        {"reference_bin_ns", a.background.reference_bin_ns}};
    j["gate"] = {{"gate_half_width_ns", a.gate.gate_half_width_ns},
                 {"dead_time_ns", a.gate.dead_time_ns}};
    j["start_s"] = a.start_s;
    j["duration_s"] = a.duration_s;
    j["seed"] = a.seed;
    return j;
}

void simulate_args_from_json(const json& j, SimulateArgs& a) {
    a.catalog = j.at("catalog").get<std::string>();
    a.satellite = j.at("satellite").get<std::string>();
    a.ephemeris = j.at("ephemeris").get<std::string>();
    a.p_det = j.at("p_det").get<double>();
    const auto& jit = j.at("jitter");
    a.jitter.laser_emission_sigma_ns = jit.at("laser_emission_sigma_ns").get<double>();
    a.jitter.detector_sigma_ns = jit.at("detector_sigma_ns").get<double>();
    a.jitter.timestamp_sigma_ns = jit.at("timestamp_sigma_ns").get<double>();
    a.jitter.clock_sigma_ns = jit.at("clock_sigma_ns").get<double>();
    const auto& bg = j.at("background");
    a.background.rate_cps = bg.at("rate_cps").get<double>();
    a.background.rms_fraction = bg.at("rms_fraction").get<double>();
    a.background.interpretation = bg.at("interpretation").get<std::string>() == "inbin"
                                      ? BackgroundModel::RateInterpretation::InBin
                                      : BackgroundModel::RateInterpretation::InGate;
    a.background.reference_bin_ns = bg.at("reference_bin_ns").get<double>();
    const auto& gate = j.at("gate");
    a.gate.gate_half_width_ns = gate.at("gate_half_width_ns").get<double>();
    a.gate.dead_time_ns = gate.at("dead_time_ns").get<double>();
    a.start_s = j.at("start_s").get<double>();
    a.duration_s = j.at("duration_s").get<double>();
    a.seed = j.at("seed").get<std::uint64_t>();
}

int cmd_simulate(const SimulateArgs& args, const std::string& out_dir) {
    PassSimConfig config;
    config.ephemeris = read_ephemeris_csv_file(args.ephemeris);
    config.jitter = args.jitter;
    config.background = args.background;
    config.gate = args.gate;
    config.start_s = args.start_s;
    config.duration_s = args.duration_s;
    config.master_seed = args.seed;

    if (args.p_det) {
        config.p_det_override = *args.p_det;
    } else {
        if (args.catalog.empty() || args.satellite.empty())
            throw std::runtime_error(
                "simulate: need --p-det, or --catalog with --satellite");
        const auto catalog = load_catalog(args.catalog);
        const auto& profile = find_profile(catalog, args.satellite);
        config.link = profile.link;
    }

    const auto result = run_pass(config);

    fs::create_directories(out_dir);
    write_timetags(result.stream, (fs::path(out_dir) / "timetags.csv").string());
    const json meta = simulate_args_to_json(args, result.p_det);
    write_text_file(fs::path(out_dir) / "meta.json", meta.dump(2) + "\n");

    std::size_t fires = 0, detections = 0;
    for (const auto& r : result.stream)
        (r.channel == Channel::LaserFire ? fires : detections) += 1;
    std::cout << "wrote " << (fs::path(out_dir) / "timetags.csv").string() << ": "
              << fires << " fire tags, " << detections << " detections, "
              << result.skipped_shots << " shots outside the ephemeris span\n";
    return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string timetags;
    std::string ephemeris;
    std::string bin_widths = "3,5,7,9,11,13,15,17,19";
    double span_ns = 250.0;
    double window_ns = 250.0;
    double report_bin_ns = 5.0;
    double arc_length_s = 5.0;
    double rep_rate_hz = 17.0e3;
    double detector_loss_db = -10.0;
    double path_loss_db = -11.0;
};

int cmd_analyze(const AnalyzeArgs& args, const std::string& out_dir) {
    const auto widths = parse_width_list(args.bin_widths);
    const auto stream = read_timetags_file(args.timetags);
    const auto table = read_ephemeris_csv_file(args.ephemeris);
    const auto shots = filter_channel(stream, Channel::LaserFire);
    const auto detections = filter_channel(stream, Channel::Detection);
    if (shots.empty()) throw std::runtime_error("analyze: no fire tags in the stream");

    const auto devs = compute_deviations(detections, shots, table, args.window_ns);
    const auto arcs = segment_arcs(devs, args.arc_length_s);
    const auto scan = scan_bin_widths(devs, widths, args.span_ns);
    const bool verdict = persistent_central_peak(scan);

    // peak report at the reporting bin width over the whole pass
    const auto hist =
        build_histogram(devs, args.report_bin_ns,
                        rounded_span(args.span_ns, args.report_bin_ns));
    const auto peak = detect_peak(hist);

    LaserParams laser;
    laser.repetition_rate_hz = args.rep_rate_hz;
    const double pass_duration_s =
        static_cast<double>(shots.back().epoch_ps - shots.front().epoch_ps) /
            kPsPerSecond +
        1.0 / laser.repetition_rate_hz;
    const auto estimate = estimate_signal_rate_and_mu(
        peak, pass_duration_s, laser, args.detector_loss_db, args.path_loss_db);

    fs::create_directories(out_dir);
    {
        std::ofstream os(fs::path(out_dir) / "histogram.csv", std::ios::binary);
        write_histogram_csv(hist, os);
    }
    {
        std::ofstream os(fs::path(out_dir) / "bin_scan.csv", std::ios::binary);
        write_bin_scan_csv(scan, os);
    }
    {
        std::ofstream os(fs::path(out_dir) / "peak_report.txt", std::ios::binary);
        write_peak_report_kv(peak, os);
    }
    for (std::size_t k = 0; k < arcs.size(); ++k) {
        if (arcs[k].empty()) continue;
        char name[48];
        std::snprintf(name, sizeof(name), "arc_%03zu_scan.csv", k);
        std::ofstream os(fs::path(out_dir) / name, std::ios::binary);
        write_bin_scan_csv(scan_bin_widths(arcs[k], widths, args.span_ns), os);
    }

    std::stringstream summary;
    char buf[96];
    auto put = [&](const char* key, const char* fmt, auto value) {
        std::snprintf(buf, sizeof(buf), fmt, value);
        summary << key << "=" << buf << "\n";
    };
    summary << "verdict=" << (verdict ? "peak" : "no_peak") << "\n";
    put("deviations", "%zu", devs.size());
    put("arcs", "%zu", arcs.size());
    put("optimal_bin_ns", "%.9g", scan.optimal_bin_ns);
    put("significance", "%.9g", peak.significance);
    put("peak_bin_center_ns", "%.9g", peak.peak_bin_center_ns);
    if (estimate.negative_excess) {
        summary << "rate_cps=0\nnegative_excess=true\n";
    } else {
        put("rate_cps", "%.9g", estimate.rate_cps);
        put("p_det", "%.9g", estimate.p_det);
        put("mu", "%.9g", estimate.mu);
        put("attenuation_db", "%.9g",
            total_attenuation_db(estimate.rate_cps, laser));
    }
    write_text_file(fs::path(out_dir) / "summary.txt", summary.str());
    std::cout << summary.str();
    return verdict ? 0 : 2;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::string& dir) {
    const fs::path base(dir);
    if (!fs::is_directory(base)) throw std::runtime_error("not a directory: " + dir);
    std::vector<std::string> missing;
    for (const char* name : {"budget.csv", "meta.json", "summary.txt"})
        if (!fs::exists(base / name)) missing.push_back(name);
    if (!missing.empty()) {
        std::string msg = "report: missing inputs in " + dir + ":";
        for (const auto& m : missing) msg += " " + m;
        throw std::runtime_error(msg);
    }

    std::stringstream out;
    out << "# run report\n\n";
    out << "## link budget\n" << read_text_file(base / "budget.csv") << "\n";
    out << "## simulation provenance\n" << read_text_file(base / "meta.json") << "\n";
    out << "## analysis\n" << read_text_file(base / "summary.txt");
    write_text_file(base / "report.txt", out.str());
    std::cout << "wrote " << (base / "report.txt").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-photon satellite laser link simulator and analyzer"};
    app.require_subcommand(1);

    // budget
    auto* budget = app.add_subcommand("budget", "link-budget table from a catalog");
    std::string b_catalog, b_satellite, b_out;
    double b_fov_arcsec = 30.0;
    budget->add_option("--catalog", b_catalog, "satellite catalog (json)")->required();
    budget->add_option("--satellite", b_satellite, "restrict to one satellite");
    budget->add_option("--fov-arcsec", b_fov_arcsec, "receiver field of view");
    budget->add_option("--out", b_out, "directory for budget.csv / budget.txt");

    // passgen
    auto* passgen = app.add_subcommand("passgen", "synthesize a pass ephemeris");
    double p_altitude_km = 1485.0, p_max_elev = 90.0, p_duration = 60.0, p_step = 1.0;
    double p_perturb_ns = 0.0, p_corr_s = 60.0, p_shift_s = 0.0;
    std::uint64_t p_seed = 0;
    std::string p_out = "ephemeris.csv";
    passgen->add_option("--altitude-km", p_altitude_km, "circular orbit altitude");
    passgen->add_option("--max-elevation-deg", p_max_elev, "culmination elevation");
    passgen->add_option("--duration-s", p_duration, "pass duration");
    passgen->add_option("--step-s", p_step, "sample interval");
    passgen->add_option("--perturbation-ns", p_perturb_ns,
                        "one-way range perturbation bound");
    passgen->add_option("--correlation-time-s", p_corr_s, "perturbation correlation time");
    passgen->add_option("--shift-s", p_shift_s, "shift all epochs");
    passgen->add_option("--seed", p_seed, "perturbation seed");
    passgen->add_option("--out", p_out, "output csv path");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo time-tag stream");
    SimulateArgs s_args;
    std::string s_config, s_out = "run", s_bg_mode = "ingate";
    double s_p_det = -1.0;
    auto* o_catalog = simulate->add_option("--catalog", s_args.catalog);
    auto* o_satellite = simulate->add_option("--satellite", s_args.satellite);
    auto* o_ephemeris = simulate->add_option("--ephemeris", s_args.ephemeris);
    auto* o_p_det = simulate->add_option("--p-det", s_p_det, "per-shot detection probability");
    auto* o_laser_j = simulate->add_option("--laser-jitter-ns",
                                           s_args.jitter.laser_emission_sigma_ns);
    auto* o_det_j = simulate->add_option("--detector-jitter-ns",
                                         s_args.jitter.detector_sigma_ns);
    auto* o_ts_j = simulate->add_option("--timestamp-jitter-ns",
                                        s_args.jitter.timestamp_sigma_ns);
    auto* o_clk_j = simulate->add_option("--clock-jitter-ns", s_args.jitter.clock_sigma_ns);
    auto* o_bg = simulate->add_option("--background-cps", s_args.background.rate_cps);
    auto* o_bg_mode = simulate->add_option("--background-mode", s_bg_mode,
                                           "ingate or inbin rate interpretation");
    auto* o_rms = simulate->add_option("--rms-fraction", s_args.background.rms_fraction);
    auto* o_gate = simulate->add_option("--gate-half-ns", s_args.gate.gate_half_width_ns);
    auto* o_dead = simulate->add_option("--dead-time-ns", s_args.gate.dead_time_ns);
    auto* o_start = simulate->add_option("--start-s", s_args.start_s);
    auto* o_duration = simulate->add_option("--duration-s", s_args.duration_s);
    auto* o_seed = simulate->add_option("--seed", s_args.seed);
    simulate->add_option("--config", s_config, "rerun from a meta.json sidecar");
    simulate->add_option("--out", s_out, "output directory");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "deviation histogram and peak scan");
    AnalyzeArgs a_args;
    std::string a_out = "analysis";
    analyze->add_option("--timetags", a_args.timetags)->required();
    analyze->add_option("--ephemeris", a_args.ephemeris)->required();
    analyze->add_option("--bin-widths", a_args.bin_widths, "comma-separated, ns");
    analyze->add_option("--span-ns", a_args.span_ns);
    analyze->add_option("--window-ns", a_args.window_ns, "matching window");
    analyze->add_option("--bin-ns", a_args.report_bin_ns, "reporting bin width");
    analyze->add_option("--arc-length", a_args.arc_length_s, "arc length, s");
    analyze->add_option("--rep-rate", a_args.rep_rate_hz);
    analyze->add_option("--detector-loss-db", a_args.detector_loss_db);
    analyze->add_option("--path-loss-db", a_args.path_loss_db);
    analyze->add_option("--out", a_out, "output directory");

    // report
    auto* report = app.add_subcommand("report", "consolidate a run directory");
    std::string r_dir;
    report->add_option("dir", r_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (budget->parsed())
            return cmd_budget(b_catalog, b_satellite, b_fov_arcsec, b_out);
        if (passgen->parsed())
            return cmd_passgen(p_altitude_km, p_max_elev, p_duration, p_step,
                               p_perturb_ns, p_corr_s, p_shift_s, p_seed, p_out);
        if (simulate->parsed()) {
            if (!s_config.empty()) {
                // config file first, explicit flags override
                json j;
                std::ifstream is(s_config, std::ios::binary);
                if (!is) throw std::runtime_error("cannot open config: " + s_config);
                is >> j;
                SimulateArgs from_file;
                simulate_args_from_json(j, from_file);
                if (!o_catalog->count()) s_args.catalog = from_file.catalog;
                if (!o_satellite->count()) s_args.satellite = from_file.satellite;
                if (!o_ephemeris->count()) s_args.ephemeris = from_file.ephemeris;
                if (!o_p_det->count()) s_args.p_det = from_file.p_det;
                if (!o_laser_j->count())
                    s_args.jitter.laser_emission_sigma_ns =
                        from_file.jitter.laser_emission_sigma_ns;
                if (!o_det_j->count())
                    s_args.jitter.detector_sigma_ns = from_file.jitter.detector_sigma_ns;
                if (!o_ts_j->count())
                    s_args.jitter.timestamp_sigma_ns = from_file.jitter.timestamp_sigma_ns;
                if (!o_clk_j->count())
                    s_args.jitter.clock_sigma_ns = from_file.jitter.clock_sigma_ns;
                if (!o_bg->count())
                    s_args.background.rate_cps = from_file.background.rate_cps;
                if (!o_bg_mode->count())
                    s_args.background.interpretation = from_file.background.interpretation;
                if (!o_rms->count())
                    s_args.background.rms_fraction = from_file.background.rms_fraction;
                s_args.background.reference_bin_ns = from_file.background.reference_bin_ns;
                if (!o_gate->count())
                    s_args.gate.gate_half_width_ns = from_file.gate.gate_half_width_ns;
                if (!o_dead->count())
                    s_args.gate.dead_time_ns = from_file.gate.dead_time_ns;
                if (!o_start->count()) s_args.start_s = from_file.start_s;
                if (!o_duration->count()) s_args.duration_s = from_file.duration_s;
                if (!o_seed->count()) s_args.seed = from_file.seed;
            }
            if (o_p_det->count()) s_args.p_det = s_p_det;
            if (o_bg_mode->count()) {
                if (s_bg_mode == "inbin")
                    s_args.background.interpretation =
                        BackgroundModel::RateInterpretation::InBin;
                else if (s_bg_mode == "ingate")
                    s_args.background.interpretation =
                        BackgroundModel::RateInterpretation::InGate;
                else
                    throw std::runtime_error("--background-mode must be ingate or inbin");
            }
            if (s_args.ephemeris.empty())
                throw std::runtime_error("simulate: --ephemeris is required");
            return cmd_simulate(s_args, s_out);
        }
        if (analyze->parsed()) return cmd_analyze(a_args, a_out);
        if (report->parsed()) return cmd_report(r_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
