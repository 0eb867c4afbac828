#pragma once

// CSV formats: observation series, trajectories and the study, verdict and
// calibration tables. Every emitted floating value uses 17 significant digits
// so a read-back reproduces it bit for bit.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "allee/calibrate.hpp"
#include "allee/error.hpp"
#include "allee/exact.hpp"
#include "allee/integrators.hpp"
#include "allee/schedule.hpp"
#include "allee/studies.hpp"
#include "allee/tipping.hpp"

namespace allee {

/// Shortest form with 17 significant digits; "inf"/"-inf"/"nan" otherwise.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// Scientific notation with `digits` significant digits, e.g. 1.023E-01.
inline std::string format_sci(double v, int digits = 4) {
    if (!std::isfinite(v)) return format_double(v);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*E", digits - 1, v);
    return buf;
}

/// Fixed notation with `decimals` places.
inline std::string format_fixed(double v, int decimals) {
    if (!std::isfinite(v)) return format_double(v);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Whole-string parse; accepts "inf" and "-inf".
inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s == "inf" || s == "+inf") return infinity;
    if (s == "-inf") return -infinity;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_validation(path + ": cannot open for reading");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_runtime(path + ": cannot open for writing");
    return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) fail_runtime(path + ": write failed");
}

inline std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    return line;
}

} // namespace detail

// Observations ---------------------------------------------------------------

/// Parses a `time,value` CSV; a value of `NA` marks a missing record. `name`
/// prefixes error messages.
inline Observations parse_observations(std::istream& in, const std::string& name = "observations") {
    Observations obs;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty()) continue;
        const auto where = name + ":" + std::to_string(line_no) + ": ";
        const auto cells = detail::split(text, ',');
        if (!header) {
            if (cells.size() != 2 || cells[0] != "time" || cells[1] != "value")
                detail::fail_validation(where + "expected header 'time,value'");
            header = true;
            continue;
        }
        if (cells.size() != 2) detail::fail_validation(where + "expected 2 fields, got " + std::to_string(cells.size()));
        const auto t = detail::parse_double(cells[0]);
        if (!t || !std::isfinite(*t)) detail::fail_validation(where + "malformed time '" + std::string(cells[0]) + "'");
        Observation o{*t, 0.0, true};
        if (cells[1] == "NA") {
            o.present = false;
        } else {
            const auto v = detail::parse_double(cells[1]);
            if (!v || !std::isfinite(*v) || *v <= 0.0)
                detail::fail_validation(where + "value must be a positive number or NA, got '" +
                                        std::string(cells[1]) + "'");
            o.value = *v;
        }
        if (!obs.records.empty()) {
            const double prev = obs.records.back().time;
            if (o.time == prev) detail::fail_validation(where + "duplicate time " + format_double(o.time));
            if (o.time < prev) detail::fail_validation(where + "time " + format_double(o.time) + " is not increasing");
        }
        obs.records.push_back(o);
    }
    if (!header) detail::fail_validation(name + ": empty file");
    if (obs.records.empty()) detail::fail_validation(name + ": no data rows");
    obs.validate();
    return obs;
}

inline Observations load_observations(const std::string& path) {
    auto in = detail::open_input(path);
    return parse_observations(in, path);
}

inline void write_observations(const Observations& obs, std::ostream& out) {
    out << "time,value\n";
    for (const auto& o : obs.records) out << format_double(o.time) << ',' << (o.present ? format_double(o.value) : "NA") << '\n';
}

// Trajectories ---------------------------------------------------------------

struct TrajectoryWriteOptions {
    std::size_t stride = 1;    // every stride-th grid point; the last point is always written
    double time_offset = 0.0;  // added to t on output (calendar shift)
};

inline void write_trajectory(const Trajectory& traj, const AlleeSchedule& schedule, std::ostream& out,
                             const TrajectoryWriteOptions& opt = {}) {
    detail::require(opt.stride >= 1, "write_trajectory: stride must be >= 1");
    out << "t,x,a\n";
    const std::size_t n = traj.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (k % opt.stride != 0 && k + 1 != n) continue;
        const double t = traj.times[k];
        out << format_double(t + opt.time_offset) << ',' << format_double(traj.states[k]) << ','
            << format_double(schedule(t)) << '\n';
    }
}

inline void write_trajectory(const Trajectory& traj, const AlleeSchedule& schedule, const std::string& path,
                             const TrajectoryWriteOptions& opt = {}) {
    auto out = detail::open_output(path);
    write_trajectory(traj, schedule, out, opt);
    detail::finish(out, path);
}

/// Columns of a `t,x,a` file.
struct TrajectoryTable {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> a;
};

inline TrajectoryTable read_trajectory(std::istream& in, const std::string& name = "trajectory") {
    TrajectoryTable tab;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty()) continue;
        const auto where = name + ":" + std::to_string(line_no) + ": ";
        if (line_no == 1) {
            if (text != "t,x,a") detail::fail_validation(where + "expected header 't,x,a'");
            continue;
        }
        const auto cells = detail::split(text, ',');
        if (cells.size() != 3) detail::fail_validation(where + "expected 3 fields");
        double v[3];
        for (int i = 0; i < 3; ++i) {
            const auto p = detail::parse_double(cells[i]);
            if (!p) detail::fail_validation(where + "malformed number '" + std::string(cells[i]) + "'");
            v[i] = *p;
        }
        tab.t.push_back(v[0]);
        tab.x.push_back(v[1]);
        tab.a.push_back(v[2]);
    }
    if (line_no == 0) detail::fail_validation(name + ": empty file");
    return tab;
}

inline TrajectoryTable read_trajectory(const std::string& path) {
    auto in = detail::open_input(path);
    return read_trajectory(in, path);
}

// Tables ---------------------------------------------------------------------

inline void write_exact_samples(std::span<const ExactSample> samples, std::ostream& out) {
    out << "t,G,L,I,x\n";
    for (const auto& s : samples)
        out << detail::join({format_double(s.t), format_double(s.big_g), format_double(s.big_l),
                             format_double(s.big_i), format_double(s.x)})
            << '\n';
}

/// scheme,h,error,rate; the rate cell is empty on the finest row.
inline void write_convergence(std::span<const ConvergenceSeries> series, std::ostream& out) {
    out << "scheme,h,error,rate\n";
    for (const auto& s : series)
        for (const auto& row : s.rows)
            out << detail::join({std::string(to_string(s.scheme)), format_double(row.h), format_double(row.error),
                                 row.rate ? format_double(*row.rate) : std::string()})
                << '\n';
}

/// Side-by-side error table in the style of the printed convergence tables.
inline void write_convergence_text(std::span<const ConvergenceSeries> series, std::ostream& out) {
    out << "h    ";
    for (const auto& s : series) {
        std::string name(to_string(s.scheme));
        name.resize(std::max<std::size_t>(name.size(), 9), ' ');
        out << "   " << name << "  rate";
    }
    out << '\n';
    const std::size_t rows = series.empty() ? 0 : series.front().rows.size();
    for (std::size_t i = 0; i < rows; ++i) {
        out << format_sci(series.front().rows[i].h, 1);
        for (const auto& s : series) {
            const auto& row = s.rows[i];
            out << "   " << format_sci(row.error) << "  " << (row.rate ? format_fixed(*row.rate, 4) : std::string(6, '-'));
        }
        out << '\n';
    }
}

/// x0,tau_euler,tau_cubature,difference; a missing extinction is `inf`.
inline void write_extinction_table(std::span<const ExtinctionComparisonRow> rows, std::ostream& out) {
    out << "x0,tau_euler,tau_cubature,difference\n";
    for (const auto& r : rows)
        out << detail::join({format_double(r.x0), format_double(r.tau_euler), format_double(r.tau_cubature),
                             format_double(r.difference)})
            << '\n';
}

/// Printed-table layout: extinction times to `decimals` places and the
/// difference in scientific notation.
inline void write_extinction_text(std::span<const ExtinctionComparisonRow> rows, double h, std::ostream& out) {
    const int decimals = std::max(0, static_cast<int>(std::lround(-std::log10(h))));
    out << "h = " << format_sci(h, 1) << '\n';
    out << "x0     euler        cubature     difference\n";
    for (const auto& r : rows)
        out << format_fixed(r.x0, 2) << "   " << format_fixed(r.tau_euler, decimals) << "   "
            << format_fixed(r.tau_cubature, decimals) << "   " << format_sci(r.difference) << '\n';
}

inline std::string describe_crossings(const std::vector<Crossing>& cs) {
    std::string s;
    for (const auto& c : cs) {
        if (!s.empty()) s += ' ';
        s += std::string(to_string(c.direction)) + "@" + format_double(c.t);
    }
    return s;
}

/// x0,outcome,tau,r_tipped,threshold_satisfied,threshold_margin,monotone,crossings
inline void write_verdicts(std::span<const TippingVerdict> verdicts, std::ostream& out) {
    out << "x0,outcome,tau,r_tipped,threshold_satisfied,threshold_margin,monotone,crossings\n";
    auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
    for (const auto& v : verdicts)
        out << detail::join({format_double(v.x0), std::string(to_string(v.outcome)), format_double(v.tau),
                             flag(v.r_tipped), flag(v.threshold_satisfied), format_double(v.threshold_margin),
                             flag(v.monotone), describe_crossings(v.crossings)})
            << '\n';
}

/// name,value rows.
inline void write_key_values(const std::vector<std::pair<std::string, std::string>>& kv, std::ostream& out) {
    out << "name,value\n";
    for (const auto& [k, v] : kv) out << k << ',' << v << '\n';
}

inline std::vector<std::pair<std::string, std::string>> extinction_report_fields(const ExtinctionReport& rep) {
    return {{"exact_tau", format_double(rep.tau)},
            {"method", std::string(to_string(rep.method))},
            {"i0", format_double(rep.i0)},
            {"l_horizon", format_double(rep.l_horizon)},
            {"tolerance", format_double(rep.tolerance)}};
}

/// Fitted values in the calibration parameter layout: x0, r, K, a_hi, ln a_lo,
/// eps, theta (calendar), then the objective.
inline std::vector<std::pair<std::string, std::string>> fit_parameter_fields(const FitResult& fr) {
    const auto& law = fr.law();
    return {{"x0", format_double(fr.params.x0)},
            {"r", format_double(fr.params.r)},
            {"K", format_double(fr.params.K)},
            {"a_hi", format_double(std::exp(law.log_a_hi))},
            {"ln_a_hi", format_double(law.log_a_hi)},
            {"ln_a_lo", format_double(law.log_a_lo)},
            {"eps", format_double(law.eps)},
            {"theta", format_double(fr.theta_calendar())},
            {"time_origin", format_double(fr.time_origin)},
            {"objective", format_double(fr.objective)},
            {"evaluations", std::to_string(fr.evaluations)},
            {"converged", fr.converged ? "true" : "false"},
            {"max_relative_diff", format_double(fr.max_relative_diff())}};
}

/// time,observed,theoretical,relative_diff; missing observations read NA.
inline void write_fit_report(const FitResult& fr, const Observations& obs, std::ostream& out) {
    out << "time,observed,theoretical,relative_diff\n";
    for (std::size_t i = 0; i < obs.records.size(); ++i) {
        const auto& o = obs.records[i];
        out << detail::join({format_double(o.time), o.present ? format_double(o.value) : "NA",
                             format_double(fr.theoretical[i]),
                             fr.relative_diff[i] ? format_double(*fr.relative_diff[i]) : "NA"})
            << '\n';
    }
}

inline void write_fit_summary(const FitResult& fr, const Observations& obs, std::ostream& out) {
    const auto& law = fr.law();
    out << "Fitted parameters\n";
    out << "  X0      " << format_fixed(fr.params.x0, 0) << '\n';
    out << "  r       " << format_sci(fr.params.r) << '\n';
    out << "  K       " << format_fixed(fr.params.K, 0) << '\n';
    out << "  a_hi    " << format_fixed(std::exp(law.log_a_hi), 0) << '\n';
    out << "  ln a_lo " << format_fixed(law.log_a_lo, 2) << '\n';
    out << "  eps     " << format_fixed(law.eps, 2) << '\n';
    out << "  theta   " << format_fixed(fr.theta_calendar(), 2) << '\n';
    out << "Objective " << format_sci(fr.objective) << " over " << obs.present_count() << " records ("
        << fr.evaluations << " evaluations, " << (fr.converged ? "converged" : "not converged") << ")\n";
    out << "Max relative difference " << format_fixed(fr.max_relative_diff(), 4) << '\n';
    out << "time    observed    theoretical  rel.diff\n";
    for (std::size_t i = 0; i < obs.records.size(); ++i) {
        const auto& o = obs.records[i];
        out << format_fixed(o.time, 0) << "  " << (o.present ? format_fixed(o.value, 0) : std::string("NA")) << "  "
            << format_fixed(fr.theoretical[i], 0) << "  "
            << (fr.relative_diff[i] ? format_fixed(*fr.relative_diff[i], 4) : std::string("NA")) << '\n';
    }
}

/// event,time rows in calendar time: peak, each crossing, extinction.
inline void write_prediction_events(const Prediction& pr, std::ostream& out) {
    out << "event,time\n";
    out << "peak," << format_double(pr.peak_time + pr.time_origin) << '\n';
    for (const auto& c : pr.crossings)
        out << "crossing-" << to_string(c.direction) << ',' << format_double(c.t + pr.time_origin) << '\n';
    out << "extinction," << format_double(pr.extinction.tau + pr.time_origin) << '\n';
}

/// Writes `fill(out)` to `path`, raising RuntimeFailure on I/O errors.
template <class Fill>
void write_file(const std::string& path, Fill&& fill) {
    auto out = detail::open_output(path);
    fill(out);
    detail::finish(out, path);
}

} // namespace allee
