#ifndef SPLINK_TIMETAG_HPP
#define SPLINK_TIMETAG_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace splink {

enum class Channel : char { LaserFire = 'F', Detection = 'D' };

struct TimeTagRecord {
    Channel channel = Channel::Detection;
    std::int64_t epoch_ps = 0;

    friend bool operator==(const TimeTagRecord&, const TimeTagRecord&) = default;
};

/// Time-ordered event record of a pass. The simulator/analyzer
/// interchange format; epochs are integer picoseconds.
using TimeTagStream = std::vector<TimeTagRecord>;

inline bool is_sorted_by_epoch(const TimeTagStream& s) {
    return std::is_sorted(s.begin(), s.end(), [](const auto& a, const auto& b) {
        return a.epoch_ps < b.epoch_ps;
    });
}

inline void sort_by_epoch(TimeTagStream& s) {
    std::stable_sort(s.begin(), s.end(), [](const auto& a, const auto& b) {
        return a.epoch_ps < b.epoch_ps;
    });
}

inline TimeTagStream filter_channel(const TimeTagStream& s, Channel c) {
    TimeTagStream out;
    for (const auto& r : s)
        if (r.channel == c) out.push_back(r);
    return out;
}

// --- CSV interchange: header "channel,epoch_ps", channel F or D,
// epochs non-negative and non-decreasing ---

inline void write_timetags(const TimeTagStream& stream, std::ostream& os) {
    os << "channel,epoch_ps\n";
    char buf[48];
    for (const auto& r : stream) {
        std::snprintf(buf, sizeof(buf), "%c,%lld\n", static_cast<char>(r.channel),
                      static_cast<long long>(r.epoch_ps));
        os << buf;
    }
}

inline void write_timetags(const TimeTagStream& stream, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_timetags(stream, os);
}

inline TimeTagStream read_timetags(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "channel,epoch_ps")
        throw std::runtime_error("timetag csv: missing or bad header");
    TimeTagStream stream;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        char ch = 0;
        long long epoch = 0;
        if (std::sscanf(line.c_str(), "%c,%lld", &ch, &epoch) != 2 ||
            (ch != 'F' && ch != 'D'))
            throw std::runtime_error("timetag csv: parse error at line " +
                                     std::to_string(lineno));
        if (epoch < 0)
            throw std::runtime_error("timetag csv: negative epoch at line " +
                                     std::to_string(lineno));
        if (!stream.empty() && epoch < stream.back().epoch_ps)
            throw std::runtime_error("timetag csv: non-monotonic epoch at line " +
                                     std::to_string(lineno));
        stream.push_back({static_cast<Channel>(ch), epoch});
    }
    return stream;
}

inline TimeTagStream read_timetags_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_timetags(is);
}

}  // namespace splink

#endif
