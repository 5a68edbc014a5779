#ifndef SPLINK_CATALOG_HPP
#define SPLINK_CATALOG_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "splink/link_budget.hpp"

namespace splink {

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known)
            throw std::runtime_error("catalog: unknown key \"" + key + "\" in " + where);
    }
}

inline double require_number(const nlohmann::json& obj, const char* key,
                             const std::string& where) {
    if (!obj.contains(key))
        throw std::runtime_error("catalog: missing key \"" + std::string(key) + "\" in " +
                                 where);
    if (!obj.at(key).is_number())
        throw std::runtime_error("catalog: key \"" + std::string(key) + "\" in " + where +
                                 " must be a number");
    return obj.at(key).get<double>();
}

}  // namespace detail

/// Parse one satellite document. Keys match the link-parameter field
/// names, SI units throughout; unknown keys are rejected.
inline SatelliteProfile parse_profile(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::runtime_error("catalog: satellite entry must be an object");
    detail::reject_unknown_keys(
        doc, {"name", "perigee_height", "reference_expected_rate", "laser", "link"},
        "satellite entry");
    SatelliteProfile profile;
    if (!doc.contains("name") || !doc.at("name").is_string())
        throw std::runtime_error("catalog: satellite entry needs a string \"name\"");
    profile.name = doc.at("name").get<std::string>();
    profile.perigee_height_m = detail::require_number(doc, "perigee_height", profile.name);
    if (doc.contains("reference_expected_rate"))
        profile.reference_expected_rate_cps =
            detail::require_number(doc, "reference_expected_rate", profile.name);

    if (!doc.contains("laser"))
        throw std::runtime_error("catalog: missing \"laser\" in " + profile.name);
    const auto& laser = doc.at("laser");
    detail::reject_unknown_keys(
        laser, {"repetition_rate", "pulse_energy", "wavelength", "pulse_duration"},
        profile.name + ".laser");
    profile.link.laser.repetition_rate_hz =
        detail::require_number(laser, "repetition_rate", profile.name + ".laser");
    profile.link.laser.pulse_energy_j =
        detail::require_number(laser, "pulse_energy", profile.name + ".laser");
    profile.link.laser.wavelength_m =
        detail::require_number(laser, "wavelength", profile.name + ".laser");
    profile.link.laser.pulse_duration_s =
        detail::require_number(laser, "pulse_duration", profile.name + ".laser");

    if (!doc.contains("link"))
        throw std::runtime_error("catalog: missing \"link\" in " + profile.name);
    const auto& link = doc.at("link");
    detail::reject_unknown_keys(link,
                                {"detector_efficiency", "transmit_optics_efficiency",
                                 "transmitter_gain", "satellite_cross_section",
                                 "slant_range", "receiver_area",
                                 "receiver_optics_efficiency",
                                 "atmospheric_transmission_one_way",
                                 "cirrus_transmission_one_way"},
                                profile.name + ".link");
    const std::string where = profile.name + ".link";
    profile.link.detector_efficiency =
        detail::require_number(link, "detector_efficiency", where);
    profile.link.transmit_optics_efficiency =
        detail::require_number(link, "transmit_optics_efficiency", where);
    profile.link.transmitter_gain = detail::require_number(link, "transmitter_gain", where);
    profile.link.satellite_cross_section_m2 =
        detail::require_number(link, "satellite_cross_section", where);
    profile.link.slant_range_m = detail::require_number(link, "slant_range", where);
    profile.link.receiver_area_m2 = detail::require_number(link, "receiver_area", where);
    profile.link.receiver_optics_efficiency =
        detail::require_number(link, "receiver_optics_efficiency", where);
    profile.link.atmospheric_transmission_one_way =
        detail::require_number(link, "atmospheric_transmission_one_way", where);
    profile.link.cirrus_transmission_one_way =
        detail::require_number(link, "cirrus_transmission_one_way", where);

    profile.validate();
    return profile;
}

inline std::vector<SatelliteProfile> parse_catalog(const nlohmann::json& doc) {
    if (!doc.is_array()) throw std::runtime_error("catalog: top level must be an array");
    if (doc.empty()) throw std::runtime_error("catalog: no satellites defined");
    std::vector<SatelliteProfile> profiles;
    for (const auto& entry : doc) profiles.push_back(parse_profile(entry));
    return profiles;
}

inline std::vector<SatelliteProfile> load_catalog(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open catalog: " + path);
    nlohmann::json doc;
    try {
        is >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("catalog: " + path + ": " + e.what());
    }
    return parse_catalog(doc);
}

/// Fixed column order; downstream golden files depend on it.
inline void write_budget_csv(const std::vector<LinkBudgetReport>& reports,
                             std::ostream& os) {
    os << "name,rate_cps,p_det,fluence_per_shot,downlink_loss,attenuation_db\n";
    char buf[192];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%.6g,%.6g,%.6g\n", r.name.c_str(),
                      r.expected_detector_rate_cps, r.per_shot_detection_probability,
                      r.channel_fluence_per_shot, r.downlink_loss, r.total_attenuation_db);
        os << buf;
    }
}

/// Two significant figures, the precision the budget tables are usually
/// quoted at. Full precision stays available in the CSV output.
inline std::string format_sig2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2g", v);
    return buf;
}

inline void write_budget_table(const std::vector<LinkBudgetReport>& reports,
                               std::ostream& os) {
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%-12s %10s %10s %12s %14s %10s\n", "satellite",
                  "rate_cps", "p_det", "fluence", "downlink_loss", "atten_dB");
    os << buf;
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%-12s %10s %10s %12s %14s %10s\n",
                      r.name.c_str(), format_sig2(r.expected_detector_rate_cps).c_str(),
                      format_sig2(r.per_shot_detection_probability).c_str(),
                      format_sig2(r.channel_fluence_per_shot).c_str(),
                      format_sig2(r.downlink_loss).c_str(),
                      format_sig2(r.total_attenuation_db).c_str());
        os << buf;
    }
}

}  // namespace splink

#endif
