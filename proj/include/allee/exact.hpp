#pragma once

// Closed-form solution of dX/dt = r X (ln K - ln X)(ln X - ln a_t).
//
// With W = 1 / (ln K - ln X) the equation becomes linear,
//   dW/dt = r (-1 + ln(K / a_t) W),
// whose solution gives, for G_t = int_0^t ln(K / a_s) ds,
//   L_t = r int_0^t exp(-r G_s) ds,   I_t = W_0 - L_t,
//   X_t = K exp(-exp(-r G_t) / I_t)   while I_t > 0, and X_t = 0 afterwards.
// The extinction time is the first zero of the decreasing function I.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "allee/error.hpp"
#include "allee/schedule.hpp"

namespace allee {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

struct ModelParams {
    double r;   // growth rate, 1/time
    double K;   // carrying capacity
    double x0;  // initial state

    void validate() const {
        detail::require(std::isfinite(r) && r > 0.0, "model: r must be positive");
        detail::require(std::isfinite(K) && K > 0.0, "model: K must be positive");
        detail::require(std::isfinite(x0) && x0 >= 0.0 && x0 <= K, "model: x0 must lie in [0, K]");
    }
};

/// W = 1 / (ln K - ln x), defined for 0 < x < K.
inline double to_w(double x, double K) {
    detail::require(x > 0.0 && x < K, "to_w: x must lie in (0, K)");
    return 1.0 / (std::log(K) - std::log(x));
}

/// Inverse of to_w: K exp(-1 / w). Non-positive w means extinction has occurred.
inline double from_w(double w, double K) {
    detail::require(w > 0.0, "from_w: w must be positive (non-positive w means the state is extinct)");
    return K * std::exp(-1.0 / w);
}

/// W_0 with the conventions W_0 = +inf at x0 = K and W_0 = 0 at x0 = 0.
inline double initial_w(const ModelParams& p) {
    if (p.x0 >= p.K) return infinity;
    if (p.x0 <= 0.0) return 0.0;
    return to_w(p.x0, p.K);
}

namespace detail {

struct QuadratureResult {
    double value;
    double error;  // |last two extrapolated estimates|
};

inline constexpr int romberg_max_level = 22;

// Composite trapezoid on [a, b] with repeated interval halving; successive
// trapezoid estimates are Richardson-extrapolated (Romberg). Stops once two
// consecutive diagonal estimates differ by at most tol, with a floor of a few
// ulps of the value so that large integrals can meet tiny absolute tolerances.
template <class F>
QuadratureResult romberg(F&& f, double a, double b, double tol, int min_level = 2) {
    if (b == a) return {0.0, 0.0};
    constexpr int max_cols = 7;
    std::array<double, max_cols> prev{};
    std::array<double, max_cols> cur{};
    const double len = b - a;
    double trap = 0.5 * len * (f(a) + f(b));
    prev[0] = trap;
    double best_prev = trap;
    std::size_t n = 1;  // panels at the previous level
    for (int level = 1; level <= romberg_max_level; ++level) {
        const double hstep = len / static_cast<double>(2 * n);
        double mid = 0.0;
        for (std::size_t k = 0; k < n; ++k) mid += f(a + static_cast<double>(2 * k + 1) * hstep);
        trap = 0.5 * trap + hstep * mid;
        n *= 2;
        cur[0] = trap;
        const int cols = std::min(level, max_cols - 1);
        double factor = 1.0;
        for (int m = 1; m <= cols; ++m) {
            factor *= 4.0;
            cur[m] = cur[m - 1] + (cur[m - 1] - prev[m - 1]) / (factor - 1.0);
        }
        const double best = cur[cols];
        const double err = std::abs(best - best_prev);
        const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(best);
        if (level >= min_level && err <= std::max(tol, floor)) return {best, err};
        best_prev = best;
        prev = cur;
    }
    fail_runtime("quadrature: tolerance " + std::to_string(tol) + " not reached within " +
                 std::to_string(1 << romberg_max_level) + " panels");
}

// Largest cell width used when marching G and L forward in time, tied to the
// schedule's own time scale.
inline double cell_width(const AlleeSchedule& schedule) {
    double w = 1.0 / 16.0;
    if (const auto* s = schedule.get_if<Sigmoid>()) w = std::min(w, s->eps / 4.0);
    if (const auto* s = schedule.get_if<LogSigmoid>()) w = std::min(w, s->eps / 4.0);
    if (const auto* o = schedule.get_if<Oscillatory>()) w = std::min(w, o->period / 16.0);
    return w;
}

// Marches the running integrals G_t and L_t forward over cells. Each cell's
// contribution to L is an outer quadrature whose integrand needs G at the
// outer nodes; G is carried from the cell start and completed by an inner
// quadrature, so earlier work is reused rather than recomputed from 0.
class DiagnosticsMarch {
public:
    DiagnosticsMarch(double r, double K, const AlleeSchedule& schedule, double tol_density)
        : r_(r), log_k_(std::log(K)), schedule_(&schedule), tol_density_(tol_density),
          max_width_(cell_width(schedule)) {}

    [[nodiscard]] double time() const noexcept { return t_; }
    [[nodiscard]] double big_g() const noexcept { return g_; }
    [[nodiscard]] double big_l() const noexcept { return l_; }
    /// exp(-r G_t), the integrand of L at the current time.
    [[nodiscard]] double l_rate() const noexcept { return std::exp(-r_ * g_); }

    /// ln(K / a_s)
    [[nodiscard]] double log_ratio_at(double s) const { return log_k_ - schedule_->log_value(s); }

    /// Advances in cells no wider than the schedule's scale, splitting at
    /// breakpoints of the schedule.
    void advance_to(double t) {
        if (t <= t_) return;
        auto bps = schedule_->breakpoints(t_, t);
        bps.push_back(t);
        for (double stop : bps) {
            while (t_ < stop) {
                const double next = std::min(stop, t_ + max_width_);
                const auto [dg, dl] = cell(t_, next);
                g_ += dg;
                l_ += dl;
                t_ = next;
            }
        }
    }

    struct CellIncrement {
        double dg;
        double dl;
    };

    /// Increments of G and L over [s0, s1] starting from the current state,
    /// without advancing. Used for root refinement inside a cell.
    [[nodiscard]] CellIncrement cell(double s0, double s1) const {
        const double width = s1 - s0;
        const double tol = std::max(tol_density_ * width, 1e-300);
        auto inner = [&](double s) {
            return romberg([this](double u) { return log_ratio_at(u); }, s0, s, tol).value;
        };
        const double g0 = g_;
        auto outer = [&](double s) { return std::exp(-r_ * (g0 + inner(s))); };
        const double dl = r_ * romberg(outer, s0, s1, tol / r_).value;
        return {inner(s1), dl};
    }

private:
    double r_;
    double log_k_;
    const AlleeSchedule* schedule_;
    double tol_density_;
    double max_width_;
    double t_ = 0.0;
    double g_ = 0.0;
    double l_ = 0.0;
};

inline double tol_density(double tol, double length) {
    require(tol > 0.0, "quadrature tolerance must be positive");
    return tol / std::max(length, 1.0);
}

} // namespace detail

inline constexpr double default_quad_tol = 1e-10;

/// G_t = int_0^t ln(K / a_s) ds, to absolute tolerance `tol`.
inline double cumulative_log_integral(const AlleeSchedule& schedule, double K, double t,
                                      double tol = default_quad_tol) {
    detail::require(t >= 0.0 && std::isfinite(t), "cumulative_log_integral: t must be >= 0");
    if (t == 0.0) return 0.0;
    const double log_k = std::log(K);
    const double width = detail::cell_width(schedule);
    const double density = detail::tol_density(tol, t);
    auto bps = schedule.breakpoints(0.0, t);
    bps.push_back(t);
    double total = 0.0;
    double s = 0.0;
    for (double stop : bps) {
        while (s < stop) {
            const double next = std::min(stop, s + width);
            total += detail::romberg([&](double u) { return log_k - schedule.log_value(u); }, s, next,
                                     density * (next - s))
                         .value;
            s = next;
        }
    }
    return total;
}

/// L_t = r int_0^t exp(-r G_s) ds.
inline double big_l(const ModelParams& p, const AlleeSchedule& schedule, double t, double tol = default_quad_tol) {
    p.validate();
    detail::require(t >= 0.0 && std::isfinite(t), "big_l: t must be >= 0");
    detail::DiagnosticsMarch march(p.r, p.K, schedule, detail::tol_density(tol, t));
    march.advance_to(t);
    return march.big_l();
}

/// I_t = W_0 - L_t; +inf when x0 = K.
inline double big_i(const ModelParams& p, const AlleeSchedule& schedule, double t, double tol = default_quad_tol) {
    p.validate();
    detail::require(p.x0 > 0.0, "big_i: undefined for x0 = 0 (the zero solution applies)");
    if (p.x0 >= p.K) return infinity;
    return to_w(p.x0, p.K) - big_l(p, schedule, t, tol);
}

enum class ExtinctionMethod { closed_form, bisection };

inline std::string_view to_string(ExtinctionMethod m) noexcept {
    return m == ExtinctionMethod::closed_form ? "closed-form" : "bisection";
}

struct ExtinctionReport {
    double tau = infinity;  // +inf when I stays positive up to the horizon
    double i0 = 0.0;        // W_0 = 1 / (ln K - ln x0)
    double l_horizon = 0.0;  // L at the horizon, or at tau when extinction occurs first
    ExtinctionMethod method = ExtinctionMethod::bisection;
    double tolerance = 0.0;

    [[nodiscard]] bool finite() const noexcept { return std::isfinite(tau); }
};

/// tau = [1 / (r ln(K/a))] ln[(ln K - ln x0) / (ln a - ln x0)] for constant a.
/// Returns +inf when x0 >= a.
inline double closed_form_tau(double r, double K, double a, double x0) {
    detail::require(r > 0.0 && K > 0.0 && a > 0.0 && a < K, "closed_form_tau: need r > 0 and 0 < a < K");
    detail::require(x0 > 0.0, "closed_form_tau: x0 must be positive");
    if (x0 >= a) return infinity;
    const double log_k = std::log(K);
    const double log_a = std::log(a);
    const double log_x = std::log(x0);
    return std::log((log_k - log_x) / (log_a - log_x)) / (r * (log_k - log_a));
}

/// Explicit solution for constant a. The decay factor is exp(-r ln(K/a) t).
inline double closed_form_state(double r, double K, double a, double x0, double t) {
    detail::require(r > 0.0 && K > 0.0 && a > 0.0 && a < K, "closed_form_state: need r > 0 and 0 < a < K");
    detail::require(x0 > 0.0 && x0 <= K, "closed_form_state: x0 must lie in (0, K]");
    detail::require(t >= 0.0, "closed_form_state: t must be >= 0");
    if (x0 == K) return K;
    const double ell = std::log(K) - std::log(a);
    const double w0 = 1.0 / (std::log(K) - std::log(x0));
    const double i_t = w0 + std::expm1(-r * ell * t) / ell;
    if (!(i_t > 0.0)) return 0.0;
    return K * std::exp(-std::exp(-r * ell * t) / i_t);
}

struct ExtinctionOptions {
    double tol = 1e-8;  // bracket width for tau
    double horizon = 100.0;
    double quad_tol = default_quad_tol;
    bool allow_closed_form = true;  // constant schedules skip quadrature
};

/// tau = inf{t : I_t = 0}, searched on [0, horizon].
inline ExtinctionReport extinction_time(const ModelParams& p, const AlleeSchedule& schedule,
                                        const ExtinctionOptions& opt = {}) {
    p.validate();
    detail::require(p.x0 > 0.0, "extinction_time: x0 must be positive");
    detail::require(opt.horizon > 0.0 && std::isfinite(opt.horizon), "extinction_time: horizon must be positive");
    detail::require(opt.tol > 0.0, "extinction_time: tol must be positive");

    ExtinctionReport rep;
    rep.tolerance = opt.tol;
    rep.i0 = initial_w(p);
    if (p.x0 >= p.K) {
        rep.method = ExtinctionMethod::closed_form;
        rep.l_horizon = big_l(p, schedule, opt.horizon, opt.quad_tol);
        return rep;
    }

    if (auto a = schedule.constant_value(); a && opt.allow_closed_form) {
        require_valid(schedule, p.K, opt.horizon, 2);
        const double ell = std::log(p.K) - std::log(*a);
        const double tau = closed_form_tau(p.r, p.K, *a, p.x0);
        const double t_end = std::min(tau, opt.horizon);
        rep.method = ExtinctionMethod::closed_form;
        rep.l_horizon = -std::expm1(-p.r * ell * t_end) / ell;
        rep.tau = tau <= opt.horizon ? tau : infinity;
        return rep;
    }

    require_valid(schedule, p.K, opt.horizon);
    rep.method = ExtinctionMethod::bisection;
    detail::DiagnosticsMarch march(p.r, p.K, schedule, detail::tol_density(opt.quad_tol, opt.horizon));
    const double w0 = rep.i0;
    const double width = detail::cell_width(schedule);
    while (march.time() < opt.horizon) {
        const double s0 = march.time();
        const double l0 = march.big_l();
        const double s1 = std::min(opt.horizon, s0 + width);
        const auto inc = march.cell(s0, s1);
        if (w0 - (l0 + inc.dl) <= 0.0) {
            // I is monotone on the cell: bisect on its sign.
            double lo = s0;
            double hi = s1;
            while (hi - lo > opt.tol) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                if (w0 - (l0 + march.cell(s0, mid).dl) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            rep.tau = 0.5 * (lo + hi);
            rep.l_horizon = l0 + march.cell(s0, rep.tau).dl;
            return rep;
        }
        march.advance_to(s1);
    }
    rep.l_horizon = march.big_l();
    return rep;
}

/// X_t from the explicit solution.
inline double exact_state(const ModelParams& p, const AlleeSchedule& schedule, double t,
                          double tol = default_quad_tol) {
    p.validate();
    detail::require(t >= 0.0 && std::isfinite(t), "exact_state: t must be >= 0");
    if (p.x0 == 0.0) return 0.0;
    if (p.x0 >= p.K) return p.K;
    detail::DiagnosticsMarch march(p.r, p.K, schedule, detail::tol_density(tol, t));
    march.advance_to(t);
    const double i_t = to_w(p.x0, p.K) - march.big_l();
    if (!(i_t > 0.0)) return 0.0;
    return p.K * std::exp(-march.l_rate() / i_t);
}

/// One sample of the explicit solution and the quantities that produce it.
struct ExactSample {
    double t;
    double big_g;
    double big_l;
    double big_i;
    double x;
};

/// Explicit solution at ascending times `times`, marching the integrals once
/// through all of them.
inline std::vector<ExactSample> exact_samples(const ModelParams& p, const AlleeSchedule& schedule,
                                              std::span<const double> times, double tol = default_quad_tol) {
    p.validate();
    std::vector<ExactSample> out;
    out.reserve(times.size());
    if (times.empty()) return out;
    detail::require(times.front() >= 0.0, "exact_samples: times must be >= 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        detail::require(times[i] >= times[i - 1], "exact_samples: times must be ascending");
    const double w0 = initial_w(p);
    detail::DiagnosticsMarch march(p.r, p.K, schedule, detail::tol_density(tol, times.back()));
    for (double t : times) {
        march.advance_to(t);
        const double i_t = w0 - march.big_l();
        double x;
        if (p.x0 == 0.0)
            x = 0.0;
        else if (p.x0 >= p.K)
            x = p.K;
        else
            x = i_t > 0.0 ? p.K * std::exp(-march.l_rate() / i_t) : 0.0;
        out.push_back({t, march.big_g(), march.big_l(), i_t, x});
    }
    return out;
}

} // namespace allee
