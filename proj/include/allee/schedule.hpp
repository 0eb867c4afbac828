#pragma once

// Time-dependent Allee parameter a_t and its logarithmic integrand ln(K / a_t).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "allee/error.hpp"

namespace allee {

enum class Direction { increasing, decreasing };

inline std::string_view to_string(Direction d) noexcept {
    return d == Direction::increasing ? "increasing" : "decreasing";
}

struct Constant {
    double a;
};

/// a_t = (a_hi - a_lo) / (1 + exp(s (t - theta) / eps)) + a_lo, with s = -1 for an
/// increasing schedule and s = +1 for a decreasing one.
struct Sigmoid {
    double a_hi;
    double a_lo;
    double theta;
    double eps;
    Direction direction;
};

/// The same sigmoid applied to ln a_t. Bounds are stored in log space because
/// fitted lower bounds can be far below the smallest normal double.
struct LogSigmoid {
    double log_a_hi;
    double log_a_lo;
    double theta;
    double eps;
    Direction direction;

    static LogSigmoid from_bounds(double a_hi, double a_lo, double theta, double eps, Direction d) {
        detail::require(a_hi > 0.0 && a_lo > 0.0, "log-sigmoid bounds must be positive");
        return {std::log(a_hi), std::log(a_lo), theta, eps, d};
    }
};

/// a_t = amp sin^2(2 pi t / period) + base.
struct Oscillatory {
    double amp;
    double base;
    double period;
};

struct Knot {
    double t;
    double a;
};

/// Piecewise-linear in a between knots. Outside the knot range the end values
/// are held when `clamp` is set, otherwise evaluation throws.
struct Tabulated {
    std::vector<Knot> knots;
    bool clamp = true;
};

namespace detail {

// Fraction of the transition completed at time t, in [0, 1].
inline double sigmoid_weight(double t, double theta, double eps, Direction d) noexcept {
    const double s = d == Direction::increasing ? -1.0 : 1.0;
    return 1.0 / (1.0 + std::exp(s * (t - theta) / eps));
}

inline bool finite(double v) noexcept { return std::isfinite(v); }

} // namespace detail

/// Immutable, structurally validated Allee parameter law. Whether 0 < a_t < K
/// holds depends on K and the horizon and is checked by `validate`.
class AlleeSchedule {
public:
    using Law = std::variant<Constant, Sigmoid, LogSigmoid, Oscillatory, Tabulated>;

    AlleeSchedule(Law law) : law_(std::move(law)) {  // NOLINT(google-explicit-constructor)
        std::visit([](const auto& l) { check(l); }, law_);
    }

    [[nodiscard]] const Law& law() const noexcept { return law_; }

    template <class T>
    [[nodiscard]] const T* get_if() const noexcept {
        return std::get_if<T>(&law_);
    }

    [[nodiscard]] std::optional<double> constant_value() const noexcept {
        if (const auto* c = get_if<Constant>()) return c->a;
        return std::nullopt;
    }

    [[nodiscard]] std::string_view kind() const noexcept {
        static constexpr std::string_view names[] = {"constant", "sigmoid", "log-sigmoid", "oscillatory",
                                                     "tabulated"};
        return names[law_.index()];
    }

    /// a_t
    [[nodiscard]] double operator()(double t) const {
        return std::visit([t](const auto& l) { return value(l, t); }, law_);
    }

    /// ln a_t, evaluated without leaving log space where the law allows it.
    [[nodiscard]] double log_value(double t) const {
        if (const auto* ls = get_if<LogSigmoid>()) {
            const double w = detail::sigmoid_weight(t, ls->theta, ls->eps, ls->direction);
            return (ls->log_a_hi - ls->log_a_lo) * w + ls->log_a_lo;
        }
        return std::log((*this)(t));
    }

    /// Times in (t0, t1) at which the law is not smooth (tabulated knots).
    [[nodiscard]] std::vector<double> breakpoints(double t0, double t1) const {
        std::vector<double> out;
        if (const auto* tab = get_if<Tabulated>()) {
            for (const auto& k : tab->knots)
                if (k.t > t0 && k.t < t1) out.push_back(k.t);
        }
        return out;
    }

private:
    static void check(const Constant& c) {
        detail::require(detail::finite(c.a) && c.a > 0.0, "constant schedule: a must be positive");
    }
    static void check(const Sigmoid& s) {
        detail::require(detail::finite(s.a_hi) && detail::finite(s.a_lo) && detail::finite(s.theta),
                        "sigmoid schedule: non-finite field");
        detail::require(s.a_lo > 0.0, "sigmoid schedule: a_lo must be positive");
        detail::require(s.a_lo < s.a_hi, "sigmoid schedule: a_lo must be below a_hi");
        detail::require(detail::finite(s.eps) && s.eps > 0.0, "sigmoid schedule: eps must be positive");
    }
    static void check(const LogSigmoid& s) {
        detail::require(detail::finite(s.log_a_hi) && detail::finite(s.log_a_lo) && detail::finite(s.theta),
                        "log-sigmoid schedule: non-finite field");
        detail::require(s.log_a_lo < s.log_a_hi, "log-sigmoid schedule: a_lo must be below a_hi");
        detail::require(detail::finite(s.eps) && s.eps > 0.0, "log-sigmoid schedule: eps must be positive");
    }
    static void check(const Oscillatory& o) {
        detail::require(detail::finite(o.amp) && o.amp >= 0.0, "oscillatory schedule: amp must be >= 0");
        detail::require(detail::finite(o.base) && o.base > 0.0, "oscillatory schedule: base must be positive");
        detail::require(detail::finite(o.period) && o.period > 0.0,
                        "oscillatory schedule: period must be positive");
    }
    static void check(const Tabulated& tab) {
        detail::require(!tab.knots.empty(), "tabulated schedule: no knots");
        for (std::size_t i = 0; i < tab.knots.size(); ++i) {
            const auto& k = tab.knots[i];
            detail::require(detail::finite(k.t) && detail::finite(k.a), "tabulated schedule: non-finite knot");
            detail::require(k.a > 0.0, "tabulated schedule: knot values must be positive");
            if (i > 0)
                detail::require(k.t > tab.knots[i - 1].t, "tabulated schedule: knot times must strictly increase");
        }
    }

    static double value(const Constant& c, double) noexcept { return c.a; }
    static double value(const Sigmoid& s, double t) noexcept {
        return (s.a_hi - s.a_lo) * detail::sigmoid_weight(t, s.theta, s.eps, s.direction) + s.a_lo;
    }
    static double value(const LogSigmoid& s, double t) noexcept {
        return std::exp((s.log_a_hi - s.log_a_lo) * detail::sigmoid_weight(t, s.theta, s.eps, s.direction) +
                        s.log_a_lo);
    }
    static double value(const Oscillatory& o, double t) noexcept {
        const double sn = std::sin(2.0 * std::numbers::pi * t / o.period);
        return o.amp * sn * sn + o.base;
    }
    static double value(const Tabulated& tab, double t) {
        const auto& k = tab.knots;
        if (t <= k.front().t) {
            if (t < k.front().t && !tab.clamp)
                detail::fail_validation("tabulated schedule: t=" + std::to_string(t) + " before first knot");
            return k.front().a;
        }
        if (t >= k.back().t) {
            if (t > k.back().t && !tab.clamp)
                detail::fail_validation("tabulated schedule: t=" + std::to_string(t) + " after last knot");
            return k.back().a;
        }
        const auto hi = std::upper_bound(k.begin(), k.end(), t, [](double v, const Knot& kn) { return v < kn.t; });
        const auto lo = hi - 1;
        const double w = (t - lo->t) / (hi->t - lo->t);
        return lo->a + w * (hi->a - lo->a);
    }

    Law law_;
};

/// a_t
inline double eval(const AlleeSchedule& schedule, double t) { return schedule(t); }

/// ln K - ln a_t, which is positive whenever a_t < K.
inline double log_ratio(const AlleeSchedule& schedule, double K, double t) {
    const double v = std::log(K) - schedule.log_value(t);
    if (!(v > 0.0))
        detail::fail_validation("Allee parameter reaches K at t=" + std::to_string(t) + " (a_t=" +
                                std::to_string(schedule(t)) + ", K=" + std::to_string(K) + ")");
    return v;
}

/// Outcome of sampling 0 < a_t < K on a uniform grid.
struct ScheduleCheck {
    bool ok = true;
    double t = 0.0;      // first offending time
    double value = 0.0;  // a_t there
    std::string message;

    explicit operator bool() const noexcept { return ok; }
};

inline constexpr std::size_t default_validation_grid = 10001;

/// Samples a_t at `grid` uniform points on [0, horizon] and reports the first
/// point where 0 < a_t < K fails.
inline ScheduleCheck validate(const AlleeSchedule& schedule, double K, double horizon,
                              std::size_t grid = default_validation_grid) {
    detail::require(horizon > 0.0 && std::isfinite(horizon), "validate: horizon must be positive");
    detail::require(grid >= 2, "validate: grid needs at least two points");
    const double log_k = std::log(K);
    for (std::size_t i = 0; i < grid; ++i) {
        const double t = horizon * static_cast<double>(i) / static_cast<double>(grid - 1);
        const double la = schedule.log_value(t);
        // Compare in log space so a_lo below the double range still counts as positive.
        if (!(la < log_k) || std::isnan(la)) {
            ScheduleCheck r;
            r.ok = false;
            r.t = t;
            r.value = std::exp(la);
            r.message = "0 < a_t < K violated at t=" + std::to_string(t) + " (a_t=" + std::to_string(r.value) +
                        ", K=" + std::to_string(K) + ")";
            return r;
        }
    }
    return {};
}

/// Throws ValidationError when `validate` fails.
inline void require_valid(const AlleeSchedule& schedule, double K, double horizon,
                          std::size_t grid = default_validation_grid) {
    if (auto r = validate(schedule, K, horizon, grid); !r) detail::fail_validation(r.message);
}

} // namespace allee
