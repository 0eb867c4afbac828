#pragma once

// Rate-induced tipping: crossings of the state with the moving Allee
// threshold, the integral threshold L > 1 / (ln K - ln x0) that any
// extinction requires, and scans over initial conditions.

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "allee/error.hpp"
#include "allee/exact.hpp"
#include "allee/integrators.hpp"
#include "allee/parallel.hpp"
#include "allee/schedule.hpp"

namespace allee {

enum class CrossingDirection { downward, upward };

inline std::string_view to_string(CrossingDirection d) noexcept {
    return d == CrossingDirection::downward ? "downward" : "upward";
}

struct Crossing {
    double t;
    CrossingDirection direction;
};

/// Sign changes of X_k - a_{t_k} along the grid. A touch without a sign
/// change is not a crossing. Times are linearly interpolated.
inline std::vector<Crossing> detect_crossings(const Trajectory& traj, const AlleeSchedule& schedule) {
    detail::require(!traj.states.empty(), "detect_crossings: empty trajectory");
    std::vector<Crossing> out;
    double last_t = 0.0;
    double last_d = 0.0;  // last nonzero difference
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.times[k];
        const double d = traj.states[k] - schedule(t);
        if (d == 0.0) continue;
        if (last_d != 0.0 && (d > 0.0) != (last_d > 0.0)) {
            const double tc = last_t + (t - last_t) * last_d / (last_d - d);
            out.push_back({tc, last_d > 0.0 ? CrossingDirection::downward : CrossingDirection::upward});
        }
        last_t = t;
        last_d = d;
    }
    return out;
}

struct ThresholdResult {
    bool satisfied = false;   // L exceeds W_0 = 1 / (ln K - ln x0)
    bool conclusive = true;   // false when the truncated tail could still decide it
    double margin = 0.0;      // L_horizon - W_0
    double l_horizon = 0.0;
    double w0 = 0.0;
    double tail_estimate = 0.0;  // estimated L_inf - L_horizon
    double t_stop = 0.0;         // time at which L was taken
};

struct ThresholdOptions {
    double quad_tol = default_quad_tol;
    double negligible_rate = 1e-14;   // integrand of L treated as zero below this
    std::size_t negligible_run = 100;  // consecutive cells below negligible_rate
};

/// Compares L at the horizon (a proxy for L_inf) with W_0. L is increasing, so
/// a satisfied check is conclusive; an unsatisfied one is conclusive when the
/// estimated tail cannot close the gap.
inline ThresholdResult threshold_check(const ModelParams& p, const AlleeSchedule& schedule, double horizon,
                                       const ThresholdOptions& opt = {}) {
    p.validate();
    detail::require(horizon > 0.0 && std::isfinite(horizon), "threshold_check: horizon must be positive");
    require_valid(schedule, p.K, horizon);
    ThresholdResult res;
    res.w0 = initial_w(p);

    detail::DiagnosticsMarch march(p.r, p.K, schedule, detail::tol_density(opt.quad_tol, horizon));
    const double width = detail::cell_width(schedule);
    std::size_t quiet = 0;
    double g_half = 0.0;
    bool have_half = false;
    while (march.time() < horizon && quiet < opt.negligible_run) {
        march.advance_to(std::min(horizon, march.time() + width));
        if (!have_half && march.time() >= 0.5 * horizon) {
            g_half = march.big_g();
            have_half = true;
        }
        quiet = march.l_rate() < opt.negligible_rate ? quiet + 1 : 0;
    }
    res.t_stop = march.time();
    res.l_horizon = march.big_l();
    res.margin = res.l_horizon - res.w0;
    res.satisfied = res.margin > 0.0;

    // Tail assuming the integrand keeps decaying at its mean rate over the
    // second half of the window: r int exp(-r (G_H + m s)) ds = exp(-r G_H) / m.
    const double t_half = have_half ? 0.5 * horizon : 0.0;
    const double span = res.t_stop - t_half;
    const double mean_rate = span > 0.0 ? (march.big_g() - g_half) / span : march.log_ratio_at(res.t_stop);
    res.tail_estimate = quiet >= opt.negligible_run ? 0.0 : march.l_rate() / std::max(mean_rate, 1e-300);
    if (!res.satisfied && std::isfinite(res.w0)) res.conclusive = res.l_horizon + res.tail_estimate < res.w0;
    return res;
}

enum class Outcome { persist, extinct, undecided };

inline std::string_view to_string(Outcome o) noexcept {
    switch (o) {
        case Outcome::persist: return "persist";
        case Outcome::extinct: return "extinct";
        case Outcome::undecided: return "undecided";
    }
    return "?";
}

struct TippingVerdict {
    double x0 = 0.0;
    std::vector<Crossing> crossings;
    Outcome outcome = Outcome::undecided;
    double tau = infinity;  // numerical extinction time when extinct
    bool r_tipped = false;  // downward crossing followed by extinction
    bool threshold_satisfied = false;
    double threshold_margin = 0.0;
    bool monotone = true;  // states never change direction

    [[nodiscard]] bool has_downward_crossing() const noexcept {
        for (const auto& c : crossings)
            if (c.direction == CrossingDirection::downward) return true;
        return false;
    }
};

struct ClassifyOptions {
    double persist_tol = 1e-3;  // relative to K, at the horizon
    ThresholdOptions threshold{};
};

namespace detail {

inline bool is_monotone(std::span<const double> xs) {
    bool up = true;
    bool down = true;
    for (std::size_t k = 1; k < xs.size(); ++k) {
        if (xs[k] < xs[k - 1]) up = false;
        if (xs[k] > xs[k - 1]) down = false;
    }
    return up || down;
}

} // namespace detail

/// Cubature run plus crossing and threshold analysis.
inline TippingVerdict classify(const ModelParams& p, const AlleeSchedule& schedule, double h, double horizon,
                               const ClassifyOptions& opt = {}) {
    const Trajectory tr = cubature_integrate(p, schedule, h, horizon);
    TippingVerdict v;
    v.x0 = p.x0;
    v.crossings = detect_crossings(tr, schedule);
    v.monotone = detail::is_monotone(tr.states);
    if (tr.extinct()) {
        v.outcome = Outcome::extinct;
        v.tau = *tr.extinction_time;
    } else if (std::abs(tr.states.back() - p.K) <= opt.persist_tol * p.K) {
        v.outcome = Outcome::persist;
    }
    v.r_tipped = v.outcome == Outcome::extinct && v.has_downward_crossing();
    const auto thr = threshold_check(p, schedule, horizon, opt.threshold);
    v.threshold_satisfied = thr.satisfied;
    v.threshold_margin = thr.margin;
    return v;
}

/// One verdict per initial condition, in input order.
inline std::vector<TippingVerdict> basin_scan(const ModelParams& base, const AlleeSchedule& schedule,
                                              std::span<const double> x0_grid, double h, double horizon,
                                              const ClassifyOptions& opt = {}) {
    for (double x0 : x0_grid) detail::require(x0 >= 0.0 && x0 <= base.K, "basin_scan: x0 outside [0, K]");
    return detail::parallel_map(x0_grid.size(), [&](std::size_t i) {
        ModelParams p = base;
        p.x0 = x0_grid[i];
        return classify(p, schedule, h, horizon, opt);
    });
}

} // namespace allee
