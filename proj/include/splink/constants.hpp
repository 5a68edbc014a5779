#ifndef SPLINK_CONSTANTS_HPP
#define SPLINK_CONSTANTS_HPP

namespace splink {

inline constexpr double kSpeedOfLight = 299792458.0;     // m/s
inline constexpr double kPlanck = 6.62607015e-34;        // J s
inline constexpr double kEarthGm = 3.986004418e14;       // m^3/s^2
inline constexpr double kEarthRadiusDefault = 6371.0e3;  // m

inline constexpr double kPsPerSecond = 1.0e12;
inline constexpr double kPsPerNs = 1.0e3;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double arcsec_to_rad(double arcsec) {
    return arcsec * kPi / (180.0 * 3600.0);
}

}  // namespace splink

#endif
