#ifndef SPLINK_LINK_BUDGET_HPP
#define SPLINK_LINK_BUDGET_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "splink/constants.hpp"

namespace splink {

/// Pulsed-laser source parameters.
struct LaserParams {
    double repetition_rate_hz = 17.0e3;
    double pulse_energy_j = 490.0e-9;
    double wavelength_m = 532.0e-9;
    double pulse_duration_s = 700.0e-12;

    void validate() const {
        if (!(repetition_rate_hz > 0.0))
            throw std::invalid_argument("laser: repetition_rate must be > 0");
        if (!(pulse_energy_j > 0.0))
            throw std::invalid_argument("laser: pulse_energy must be > 0");
        if (!(wavelength_m >= 100.0e-9 && wavelength_m <= 10.0e-6))
            throw std::invalid_argument("laser: wavelength outside [100 nm, 10 um]");
        if (!(pulse_duration_s > 0.0))
            throw std::invalid_argument("laser: pulse_duration must be > 0");
    }
};

/// Everything that enters the radar link equation for one station /
/// satellite pairing. Photons per pulse is not stored; it is derived
/// from pulse energy and wavelength so the repetition rate enters the
/// rate exactly once.
struct LinkParameters {
    LaserParams laser;
    double detector_efficiency = 0.1;
    double transmit_optics_efficiency = 5.0e-3;
    double transmitter_gain = 7.0e9;
    double satellite_cross_section_m2 = 1.2e7;
    double slant_range_m = 1.65e6;
    double receiver_area_m2 = 1.77;
    double receiver_optics_efficiency = 4.0e-3;
    double atmospheric_transmission_one_way = 0.81;
    double cirrus_transmission_one_way = 1.0;

    void validate() const {
        laser.validate();
        auto check_eff = [](double v, const char* name) {
            if (!(v > 0.0 && v <= 1.0))
                throw std::invalid_argument(std::string("link: ") + name +
                                            " must be in (0, 1]");
        };
        check_eff(detector_efficiency, "detector_efficiency");
        check_eff(transmit_optics_efficiency, "transmit_optics_efficiency");
        check_eff(receiver_optics_efficiency, "receiver_optics_efficiency");
        check_eff(atmospheric_transmission_one_way, "atmospheric_transmission_one_way");
        check_eff(cirrus_transmission_one_way, "cirrus_transmission_one_way");
        auto check_pos = [](double v, const char* name) {
            if (!(v > 0.0))
                throw std::invalid_argument(std::string("link: ") + name +
                                            " must be > 0");
        };
        check_pos(transmitter_gain, "transmitter_gain");
        check_pos(satellite_cross_section_m2, "satellite_cross_section");
        check_pos(slant_range_m, "slant_range");
        check_pos(receiver_area_m2, "receiver_area");
    }
};

struct SatelliteProfile {
    std::string name;
    double perigee_height_m = 0.0;
    LinkParameters link;
    std::optional<double> reference_expected_rate_cps;

    void validate() const {
        if (name.empty()) throw std::invalid_argument("profile: name must be non-empty");
        if (!(perigee_height_m > 0.0))
            throw std::invalid_argument("profile: perigee_height must be > 0");
        link.validate();
    }
};

struct LinkBudgetReport {
    std::string name;
    double photons_per_pulse = 0.0;
    double expected_detector_rate_cps = 0.0;
    double per_shot_detection_probability = 0.0;
    double channel_fluence_per_shot = 0.0;  // photons/m^2 at the ground site
    double downlink_loss = 0.0;
    double total_attenuation_db = 0.0;
};

/// Photon count of a pulse: E * lambda / (h c).
inline double photons_per_pulse(double energy_j, double wavelength_m) {
    if (!(wavelength_m > 0.0))
        throw std::invalid_argument("photons_per_pulse: wavelength must be > 0");
    if (energy_j < 0.0)
        throw std::invalid_argument("photons_per_pulse: energy must be >= 0");
    return energy_j * wavelength_m / (kPlanck * kSpeedOfLight);
}

namespace detail {
/// (1 / 4 pi R^2)^2 -- two-way spherical spreading.
inline double two_way_spreading(double range_m) {
    const double inv = 1.0 / (4.0 * kPi * range_m * range_m);
    return inv * inv;
}
}  // namespace detail

/// Radar link equation:
///   DCR = L eta_d Np eta_t Gt sigma (1/4piR^2)^2 At eta_r Ta^2 Tc^2
/// with Np the photons per pulse and L the repetition rate.
inline double expected_detector_rate(const LinkParameters& p) {
    p.validate();
    const double np = photons_per_pulse(p.laser.pulse_energy_j, p.laser.wavelength_m);
    const double ta2 = p.atmospheric_transmission_one_way * p.atmospheric_transmission_one_way;
    const double tc2 = p.cirrus_transmission_one_way * p.cirrus_transmission_one_way;
    return p.laser.repetition_rate_hz * p.detector_efficiency * np *
           p.transmit_optics_efficiency * p.transmitter_gain *
           p.satellite_cross_section_m2 * detail::two_way_spreading(p.slant_range_m) *
           p.receiver_area_m2 * p.receiver_optics_efficiency * ta2 * tc2;
}

/// Detection probability per emitted pulse. Defined as rate / rate of
/// emission, never re-derived, so the identity rate = L * p holds exactly.
inline double per_shot_detection_probability(const LinkParameters& p) {
    return expected_detector_rate(p) / p.laser.repetition_rate_hz;
}

/// Per-shot photon areal density arriving at the ground site: includes
/// the uplink atmospheric pass, excludes downlink atmosphere, receiver
/// aperture and optics. This is the "photons in the channel per shot"
/// column of the budget table.
inline double channel_fluence_per_shot(const LinkParameters& p) {
    p.validate();
    const double np = photons_per_pulse(p.laser.pulse_energy_j, p.laser.wavelength_m);
    return np * p.transmit_optics_efficiency * p.transmitter_gain *
           p.atmospheric_transmission_one_way * p.satellite_cross_section_m2 *
           detail::two_way_spreading(p.slant_range_m);
}

/// Photons retroreflected into the receiver field of view per shot,
/// from the uplink fluence at the satellite and the FOV solid angle.
inline double photons_leaving_satellite(const LinkParameters& p, double fov_full_angle_rad) {
    p.validate();
    if (fov_full_angle_rad < 0.0 || fov_full_angle_rad >= kPi / 2.0)
        throw std::invalid_argument("photons_leaving_satellite: fov must be in [0, pi/2)");
    const double np = photons_per_pulse(p.laser.pulse_energy_j, p.laser.wavelength_m);
    const double uplink_fluence = np * p.transmit_optics_efficiency * p.transmitter_gain *
                                  p.atmospheric_transmission_one_way /
                                  (4.0 * kPi * p.slant_range_m * p.slant_range_m);
    const double half = fov_full_angle_rad / 2.0;
    const double solid_angle = kPi * half * half;
    return uplink_fluence * p.satellite_cross_section_m2 * solid_angle / (4.0 * kPi);
}

/// Fraction of satellite-departing photons that produce a detection.
inline double downlink_loss(const LinkParameters& p, double fov_full_angle_rad) {
    const double leaving = photons_leaving_satellite(p, fov_full_angle_rad);
    const double p_det = per_shot_detection_probability(p);
    if (p_det == 0.0) return 0.0;
    if (leaving == 0.0)
        throw std::domain_error("downlink_loss: no photons leave the satellite, "
                                "loss is undefined");
    return p_det / leaving;
}

/// End-to-end attenuation of the whole light path in dB. Zero detected
/// rate maps to -infinity, an explicit below-floor value.
inline double total_attenuation_db(double detected_rate_cps, const LaserParams& laser) {
    laser.validate();
    if (detected_rate_cps < 0.0)
        throw std::invalid_argument("total_attenuation_db: rate must be >= 0");
    if (detected_rate_cps == 0.0) return -std::numeric_limits<double>::infinity();
    const double emitted = laser.repetition_rate_hz *
                           photons_per_pulse(laser.pulse_energy_j, laser.wavelength_m);
    return 10.0 * std::log10(detected_rate_cps / emitted);
}

/// Mean photon number per pulse in the channel, unfolding the stated
/// detection and path losses from the per-shot detection probability.
inline double infer_mean_photon_number(double p_det, double detector_loss_db,
                                       double path_loss_db) {
    if (!(p_det >= 0.0 && p_det <= 1.0))
        throw std::invalid_argument("infer_mean_photon_number: p_det must be in [0,1]");
    if (detector_loss_db > 0.0 || path_loss_db > 0.0)
        throw std::invalid_argument("infer_mean_photon_number: losses must be <= 0 dB");
    return p_det * std::pow(10.0, -(detector_loss_db + path_loss_db) / 10.0);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double x) {
    if (!(x > 0.0)) throw std::domain_error("linear_to_db: argument must be > 0");
    return 10.0 * std::log10(x);
}

/// All derived link quantities for one parameter set.
inline LinkBudgetReport make_report(const LinkParameters& p, double fov_full_angle_rad,
                                    const std::string& name = {}) {
    LinkBudgetReport r;
    r.name = name;
    r.photons_per_pulse = photons_per_pulse(p.laser.pulse_energy_j, p.laser.wavelength_m);
    r.expected_detector_rate_cps = expected_detector_rate(p);
    r.per_shot_detection_probability = r.expected_detector_rate_cps / p.laser.repetition_rate_hz;
    r.channel_fluence_per_shot = channel_fluence_per_shot(p);
    r.downlink_loss = downlink_loss(p, fov_full_angle_rad);
    r.total_attenuation_db = total_attenuation_db(r.expected_detector_rate_cps, p.laser);
    return r;
}

}  // namespace splink

#endif
