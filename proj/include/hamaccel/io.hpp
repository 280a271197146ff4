#pragma once

#include "hamaccel/continuous.hpp"
#include "hamaccel/coordinate.hpp"
#include "hamaccel/core.hpp"
#include "hamaccel/schemes.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace hamaccel {

class FileError : public Error {
public:
    using Error::Error;
};

// Shortest decimal that round-trips. NaN is written as an empty field.
inline std::string format_number(double value) {
    if (std::isnan(value)) return {};
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::string format_number(long value) { return std::to_string(value); }

inline double parse_number(const std::string& text) {
    if (text.empty()) return std::nan("");
    if (text == "inf") return HUGE_VAL;
    if (text == "-inf") return -HUGE_VAL;
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw InvalidArgumentError("parse_number: not a number: '" + text + "'");
    }
    return v;
}

inline const char* kTraceHeader = "n,f_gap,lyapunov,contraction_ratio,cert_pass";
inline const char* kCoordinateTraceHeader =
    "n,f_gap,lyapunov,contraction_ratio,cert_pass,coord,realized_decrease,enum_expected_lyapunov";
inline const char* kCertificateHeader = "n,name,z_tag,lhs,rhs,margin,verdict";
inline const char* kTrajectoryHeader = "t,f_gap,lyapunov,v_norm";
inline const char* kSweepHeader = "gamma,decay_rate,regime,empirical_rate,diverged";

inline void write_trace_csv(std::ostream& os, const std::vector<IterateRecord>& records) {
    os << kTraceHeader << '\n';
    for (const auto& r : records) {
        os << r.n << ',' << format_number(r.f_gap) << ',' << format_number(r.lyapunov) << ','
           << format_number(r.contraction_ratio) << ',' << (r.all_passed() ? 1 : 0) << '\n';
    }
}

inline void write_coordinate_trace_csv(std::ostream& os, const std::vector<CoordinateRecord>& records) {
    os << kCoordinateTraceHeader << '\n';
    for (const auto& r : records) {
        os << r.n << ',' << format_number(r.f_gap) << ',' << format_number(r.lyapunov) << ','
           << format_number(r.contraction_ratio) << ',' << (r.all_passed() ? 1 : 0) << ',' << r.coord << ','
           << format_number(r.realized_decrease) << ',' << format_number(r.expected_lyapunov) << '\n';
    }
}

inline void write_certificate_rows(std::ostream& os, const std::vector<Certificate>& certs) {
    for (const auto& c : certs) {
        os << c.iteration << ',' << c.name << ',' << c.z_tag << ',' << format_number(c.lhs) << ','
           << format_number(c.rhs) << ',' << format_number(c.margin) << ',' << (c.passed ? "pass" : "fail") << '\n';
    }
}

template <class Record>
void write_certificate_csv(std::ostream& os, const std::vector<Record>& records) {
    os << kCertificateHeader << '\n';
    for (const auto& r : records) write_certificate_rows(os, r.certificates);
}

inline void write_trajectory_csv(std::ostream& os, const SmoothOracle& oracle, const std::vector<PhaseState>& states,
                                 const Vector& xstar, double fstar) {
    os << kTrajectoryHeader << '\n';
    for (const auto& st : states) {
        os << format_number(st.t) << ',' << format_number(oracle.gap(st.x, xstar, fstar)) << ','
           << format_number(continuous_lyapunov(oracle, st, xstar, fstar)) << ',' << format_number(st.v.norm())
           << '\n';
    }
}

// Writes to `path` through a temporary file and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FileError("cannot open " + tmp.string() + " for writing");
        out << contents;
        if (!out) throw FileError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw FileError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline constexpr double kLogGapFloor = -16.0;

// Two-column gnuplot data "x log10(f_gap)" from a trace or trajectory CSV.
// The first column (n or t) is copied verbatim; nonpositive gaps map to -16.
inline std::string emit_plot_data(std::istream& csv) {
    std::string line;
    if (!std::getline(csv, line)) throw FileError("plot data: empty trace");
    const auto header = split(line, ',');
    std::size_t gap_col = header.size();
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == "f_gap") gap_col = k;
    }
    if (gap_col == header.size() || header.empty()) throw FileError("plot data: trace has no f_gap column");
    std::ostringstream out;
    while (std::getline(csv, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = split(line, ',');
        if (fields.size() <= gap_col) throw FileError("plot data: short row '" + line + "'");
        if (fields[gap_col].empty()) continue;  // lazy-engine rows without a checkpoint
        const double gap = parse_number(fields[gap_col]);
        const double y = gap > 0.0 ? std::max(kLogGapFloor, std::log10(gap)) : kLogGapFloor;
        out << fields[0] << ' ' << format_number(y) << '\n';
    }
    return out.str();
}

inline std::string emit_plot_data(const std::filesystem::path& trace) {
    if (!std::filesystem::exists(trace)) throw FileError("plot data: missing trace " + trace.string());
    std::istringstream in(read_file(trace));
    return emit_plot_data(in);
}

}  // namespace hamaccel
