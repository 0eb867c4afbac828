#pragma once

// Convergence studies of the two schemes against the explicit solution, and
// Euler-versus-cubature extinction-time tables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "allee/error.hpp"
#include "allee/exact.hpp"
#include "allee/integrators.hpp"
#include "allee/parallel.hpp"
#include "allee/schedule.hpp"

namespace allee {

struct ConvergenceRow {
    double h;
    double error;
    std::optional<double> rate;  // against the next (finer) h
};

struct ConvergenceSeries {
    Scheme scheme;
    std::vector<ConvergenceRow> rows;
};

enum class Reference { closed_form, exact_engine };

inline std::string_view to_string(Reference r) noexcept {
    return r == Reference::closed_form ? "closed-form" : "exact-engine";
}

/// How per-grid-point state errors over (0, T] are reduced to one number.
enum class StateErrorMetric { max_abs, mean_abs };

inline std::string_view to_string(StateErrorMetric m) noexcept {
    return m == StateErrorMetric::max_abs ? "max" : "mean";
}

struct StudyOptions {
    double horizon = 20.0;  // integration horizon for tau studies
    EulerSampling euler_sampling = EulerSampling::next_step;
    double quad_tol = default_quad_tol;
    double tau_tol = 1e-9;
    StateErrorMetric metric = StateErrorMetric::max_abs;
};

namespace detail {

inline void check_h_list(std::span<const double> hs) {
    require(!hs.empty(), "study: h list is empty");
    for (std::size_t i = 0; i < hs.size(); ++i) {
        require(std::isfinite(hs[i]) && hs[i] > 0.0, "study: h values must be positive");
        if (i > 0) require(hs[i] < hs[i - 1], "study: h values must be strictly decreasing");
    }
}

/// Observed order between consecutive resolutions; log10(err_h / err_{h/10})
/// when the refinement factor is 10.
inline void fill_rates(std::vector<ConvergenceRow>& rows) {
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const auto& a = rows[i];
        const auto& b = rows[i + 1];
        if (a.error > 0.0 && b.error > 0.0) rows[i].rate = std::log10(a.error / b.error) / std::log10(a.h / b.h);
    }
}

inline std::vector<ConvergenceSeries> assemble(std::span<const double> hs, const std::vector<double>& errors) {
    std::vector<ConvergenceSeries> out;
    const Scheme schemes[] = {Scheme::euler, Scheme::cubature};
    for (std::size_t s = 0; s < 2; ++s) {
        ConvergenceSeries series{schemes[s], {}};
        for (std::size_t i = 0; i < hs.size(); ++i) series.rows.push_back({hs[i], errors[s * hs.size() + i], {}});
        fill_rates(series.rows);
        out.push_back(std::move(series));
    }
    return out;
}

inline StepOptions step_options(const StudyOptions& opt) { return {opt.euler_sampling, false}; }

} // namespace detail

/// Reference extinction time: closed form (constant a only) or the exact
/// engine's bisection at tight tolerances.
inline double reference_tau(const ModelParams& p, const AlleeSchedule& schedule, Reference ref,
                            const StudyOptions& opt = {}) {
    if (ref == Reference::closed_form) {
        const auto a = schedule.constant_value();
        detail::require(a.has_value(), "closed-form reference needs a constant schedule");
        return closed_form_tau(p.r, p.K, *a, p.x0);
    }
    ExtinctionOptions eo;
    eo.tol = opt.tau_tol;
    eo.horizon = opt.horizon;
    eo.quad_tol = opt.quad_tol;
    eo.allow_closed_form = false;
    return extinction_time(p, schedule, eo).tau;
}

/// |tau_hat - tau_ref| per scheme and h, with observed rates. Returns the
/// Euler series first, then cubature.
inline std::vector<ConvergenceSeries> tau_convergence_study(const ModelParams& p, const AlleeSchedule& schedule,
                                                            std::span<const double> h_list, Reference ref,
                                                            const StudyOptions& opt = {}) {
    detail::check_h_list(h_list);
    const double tau_ref = reference_tau(p, schedule, ref, opt);
    if (!std::isfinite(tau_ref))
        detail::fail_validation("tau study: no finite extinction time for these parameters");
    const std::size_t n = h_list.size();
    const auto errors = detail::parallel_map(2 * n, [&](std::size_t job) {
        const Scheme scheme = job < n ? Scheme::euler : Scheme::cubature;
        const double h = h_list[job % n];
        const auto tau = numerical_extinction_time(scheme, p, schedule, h, opt.horizon, detail::step_options(opt));
        if (!tau)
            detail::fail_runtime("tau study: " + std::string(to_string(scheme)) + " did not go extinct at h=" +
                                 std::to_string(h));
        return std::abs(*tau - tau_ref);
    });
    return detail::assemble(h_list, errors);
}

/// State error on the grid points of (0, window], reduced by `opt.metric`,
/// per scheme and h.
inline std::vector<ConvergenceSeries> state_convergence_study(const ModelParams& p, const AlleeSchedule& schedule,
                                                              std::span<const double> h_list, double window,
                                                              Reference ref, const StudyOptions& opt = {}) {
    detail::check_h_list(h_list);
    detail::require(std::isfinite(window) && window > 0.0, "state study: window (0, T] must have T > 0");
    const auto a = schedule.constant_value();
    if (ref == Reference::closed_form) detail::require(a.has_value(), "closed-form reference needs a constant schedule");
    const std::size_t n = h_list.size();

    const auto errors = detail::parallel_map(2 * n, [&](std::size_t job) {
        const Scheme scheme = job < n ? Scheme::euler : Scheme::cubature;
        const double h = h_list[job % n];
        const Trajectory tr = integrate(scheme, p, schedule, h, window, detail::step_options(opt));
        std::vector<double> reference;
        if (ref == Reference::closed_form) {
            reference.reserve(tr.size());
            for (double t : tr.times)
                reference.push_back(p.x0 == 0.0 ? 0.0 : closed_form_state(p.r, p.K, *a, p.x0, t));
        } else {
            for (const auto& s : exact_samples(p, schedule, tr.times, opt.quad_tol)) reference.push_back(s.x);
        }
        double acc = 0.0;
        for (std::size_t k = 1; k < tr.size(); ++k) {
            const double e = std::abs(tr.states[k] - reference[k]);
            acc = opt.metric == StateErrorMetric::max_abs ? std::max(acc, e) : acc + e;
        }
        if (opt.metric == StateErrorMetric::mean_abs) acc /= static_cast<double>(tr.size() - 1);
        return acc;
    });
    return detail::assemble(h_list, errors);
}

struct ExtinctionComparisonRow {
    double x0;
    double tau_euler;     // +inf when no extinction within the horizon
    double tau_cubature;  // +inf when no extinction within the horizon
    double difference;    // tau_euler - tau_cubature; +inf if either is missing
};

inline std::vector<ExtinctionComparisonRow> extinction_table(const ModelParams& base, const AlleeSchedule& schedule,
                                                             std::span<const double> x0_grid, double h,
                                                             const StudyOptions& opt = {}) {
    for (double x0 : x0_grid) detail::require(x0 >= 0.0 && x0 <= base.K, "extinction_table: x0 outside [0, K]");
    const std::size_t n = x0_grid.size();
    const auto taus = detail::parallel_map(2 * n, [&](std::size_t job) {
        ModelParams p = base;
        p.x0 = x0_grid[job % n];
        const Scheme scheme = job < n ? Scheme::euler : Scheme::cubature;
        return numerical_extinction_time(scheme, p, schedule, h, opt.horizon, detail::step_options(opt))
            .value_or(infinity);
    });
    std::vector<ExtinctionComparisonRow> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double te = taus[i];
        const double tc = taus[n + i];
        const double diff = std::isfinite(te) && std::isfinite(tc) ? te - tc : infinity;
        rows.push_back({x0_grid[i], te, tc, diff});
    }
    return rows;
}

/// Named parameter sets of the sigmoid, oscillatory and constant studies.
struct Scenario {
    std::string name;
    ModelParams base;
    AlleeSchedule schedule;
    std::vector<double> table_x0;  // rows of the extinction tables
    EulerSampling euler_sampling;
    double table_horizon;  // long enough for every table row to go extinct
};

/// x0 = 0.04 i for i = first..last.
inline std::vector<double> x0_ladder(int first, int last) {
    std::vector<double> v;
    for (int i = first; i <= last; ++i) v.push_back(0.04 * i);
    return v;
}

inline const std::vector<Scenario>& scenarios() {
    static const std::vector<Scenario> all = [] {
        const ModelParams unit{1.0, 1.0, 0.32};
        std::vector<Scenario> v;
        v.push_back({"sigmoid-increasing", unit, AlleeSchedule(Sigmoid{0.9, 0.1, 1.0, 0.1, Direction::increasing}),
                     x0_ladder(1, 10), EulerSampling::next_step, 20.0});
        v.push_back({"sigmoid-decreasing", unit, AlleeSchedule(Sigmoid{0.9, 0.1, 1.0, 0.1, Direction::decreasing}),
                     x0_ladder(1, 10), EulerSampling::next_step, 20.0});
        // The oscillatory tables were produced with the schedule sampled at the
        // start of each Euler step.
        v.push_back({"oscillatory", unit, AlleeSchedule(Oscillatory{0.8, 0.01, 1.0}), x0_ladder(1, 6),
                     EulerSampling::current_step, 20.0});
        v.push_back({"constant", unit, AlleeSchedule(Constant{0.5}), {0.16, 0.32}, EulerSampling::next_step, 20.0});
        return v;
    }();
    return all;
}

inline const Scenario& find_scenario(std::string_view name) {
    for (const auto& s : scenarios())
        if (s.name == name) return s;
    std::string known;
    for (const auto& s : scenarios()) known += (known.empty() ? "" : ", ") + s.name;
    detail::fail_validation("unknown scenario '" + std::string(name) + "' (known: " + known + ")");
}

} // namespace allee
