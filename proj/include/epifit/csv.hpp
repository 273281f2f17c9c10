#ifndef EPIFIT_CSV_HPP
#define EPIFIT_CSV_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "epifit/config.hpp"
#include "epifit/errors.hpp"
#include "epifit/estimation.hpp"
#include "epifit/ode.hpp"

namespace epifit {

namespace detail {

inline std::vector<std::string> split_csv_row(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

/// Full round-trip precision for doubles, compact for integral values.
inline std::string format_full(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    double reparsed = 0.0;
    std::sscanf(buf, "%lf", &reparsed);
    if (reparsed == x) {
        for (int digits = 1; digits < 17; ++digits) {
            char shorter[32];
            std::snprintf(shorter, sizeof shorter, "%.*g", digits, x);
            std::sscanf(shorter, "%lf", &reparsed);
            if (reparsed == x) return shorter;
        }
    }
    return buf;
}

} // namespace detail

/// Reads a `day,count` CSV: header required, `#` comments and blank lines
/// skipped, LF or CRLF. Days must be strictly increasing, counts
/// nonnegative. Raw-unit counts are converted to thousands.
inline Dataset load_dataset(std::istream& in, Units units, std::string label = {}) {
    Dataset data;
    data.label = std::move(label);
    std::string raw_line;
    long line_no = 0;
    bool header_seen = false;
    bool have_previous = false;
    double previous_day = 0.0;

    while (std::getline(in, raw_line)) {
        ++line_no;
        const std::string line = detail::trim(raw_line);
        if (line.empty() || line.front() == '#') continue;
        const std::vector<std::string> cells = detail::split_csv_row(line);

        if (!header_seen) {
            if (cells.size() != 2 || cells[0] != "day" || cells[1] != "count")
                throw ParseError("expected header 'day,count'", line_no);
            header_seen = true;
            continue;
        }
        if (cells.size() != 2)
            throw ParseError("expected two columns day,count", line_no);
        const double day = detail::parse_double(cells[0], line_no);
        const double count = detail::parse_double(cells[1], line_no);
        if (have_previous && day == previous_day)
            throw ParseError("duplicate day " + cells[0], line_no);
        if (have_previous && day < previous_day)
            throw ParseError("days must be increasing; day " + cells[0] +
                             " comes after a later one", line_no);
        if (count < 0.0)
            throw ParseError("negative count " + cells[1], line_no);
        previous_day = day;
        have_previous = true;
        data.times.push_back(day);
        data.observations.push_back(units == Units::Raw ? count / 1000.0 : count);
    }
    if (!header_seen) throw ParseError("expected header 'day,count'");
    if (data.times.empty()) throw ParseError("no observations");
    data.validate();
    return data;
}

inline Dataset load_dataset(const std::filesystem::path& path, Units units) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset " + path.string());
    return load_dataset(in, units, path.filename().string());
}

/// `day,count` CSV accepted back by load_dataset (units: thousands).
inline void write_observations_csv(const std::filesystem::path& path,
                                   const std::vector<double>& times,
                                   const std::vector<double>& counts,
                                   const std::string& comment = {}) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    if (!comment.empty()) out << "# " << comment << "\n";
    out << "day,count\n";
    for (std::size_t j = 0; j < times.size(); ++j)
        out << detail::format_full(times[j]) << ','
            << detail::format_full(counts[j]) << '\n';
}

/// `times,S,I` CSV with one row per stored trajectory point.
inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const Trajectory& trajectory) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "times,S,I\n";
    for (std::size_t j = 0; j < trajectory.times.size(); ++j)
        out << detail::format_full(trajectory.times[j]) << ','
            << detail::format_full(trajectory.states[j][0]) << ','
            << detail::format_full(trajectory.states[j][1]) << '\n';
}

} // namespace epifit

#endif
