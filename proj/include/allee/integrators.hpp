#pragma once

// Time stepping on the uniform grid t_k = k h:
//  - forward Euler on the ODE itself,
//  - the cubature scheme, which discretises the integrals of the explicit
//    solution (trapezoid for G, right-endpoint sum for L) and therefore keeps
//    every state in [0, K] for any h,
//  - forward Euler on the cubic Allee model, for contrast (no finite-time
//    extinction).

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "allee/error.hpp"
#include "allee/exact.hpp"
#include "allee/schedule.hpp"

namespace allee {

enum class Scheme { euler, cubature, nominal_euler };

inline std::string_view to_string(Scheme s) noexcept {
    switch (s) {
        case Scheme::euler: return "euler";
        case Scheme::cubature: return "cubature";
        case Scheme::nominal_euler: return "nominal-euler";
    }
    return "?";
}

struct Trajectory {
    Scheme scheme = Scheme::cubature;
    double h = 0.0;
    double K = 1.0;
    std::vector<double> times;
    std::vector<double> states;
    std::optional<std::size_t> extinction_index;  // k'
    std::optional<double> extinction_time;         // k' h, or the refined estimate

    [[nodiscard]] std::size_t size() const noexcept { return states.size(); }
    [[nodiscard]] bool extinct() const noexcept { return extinction_index.has_value(); }
};

/// Where Euler samples the schedule inside the step from t_k to t_{k+1}.
enum class EulerSampling {
    next_step,     // a_{t_{k+1}}
    current_step,  // a_{t_k}
};

struct StepOptions {
    EulerSampling sampling = EulerSampling::next_step;
    /// Report tau by linear interpolation of the sign change instead of k' h.
    bool refine_tau = false;
};

/// r x (ln K - ln x)(ln x - ln a), with 0 (ln 0)^n = 0.
inline double rhs(double x, double a, double r, double K) {
    detail::require(x >= 0.0, "rhs: x must be >= 0");
    if (x == 0.0) return 0.0;
    const double lx = std::log(x);
    return r * x * (std::log(K) - lx) * (lx - std::log(a));
}

namespace detail {

// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline std::size_t step_count(double h, double horizon) {
    require(std::isfinite(h) && h > 0.0, "step size h must be positive");
    require(std::isfinite(horizon) && horizon >= h, "horizon must be at least one step");
    // Largest k with k h <= horizon, forgiving representation error in horizon / h.
    return static_cast<std::size_t>(std::floor(horizon / h * (1.0 + 1e-12)));
}

inline Trajectory make_grid(Scheme scheme, double h, double K, std::size_t n) {
    Trajectory tr;
    tr.scheme = scheme;
    tr.h = h;
    tr.K = K;
    tr.times.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) tr.times[k] = static_cast<double>(k) * h;
    tr.states.assign(n + 1, 0.0);
    return tr;
}

inline void mark_zero(Trajectory& tr) {
    tr.extinction_index = 0;
    tr.extinction_time = 0.0;
}

} // namespace detail

/// One step of the cubature recurrence.
struct CubatureStep {
    std::size_t k;
    double rate;   // dL/dt at t_k
    double big_i;  // I_k
    double K;

    /// X_k; 0 once I_k has reached 0.
    [[nodiscard]] double state() const noexcept { return big_i > 0.0 ? K * std::exp(-rate / big_i) : 0.0; }
};

/// Runs the cubature recurrence for k = 1..n and hands each step to `visit`,
/// which returns false to stop early. X_0 = x0 is not visited. Caller
/// guarantees 0 < x0 <= K and a validated schedule.
template <class Visitor>
void cubature_march(const ModelParams& p, const AlleeSchedule& schedule, double h, std::size_t n, Visitor&& visit) {
    const double log_k = std::log(p.K);
    const double w0 = initial_w(p);
    const double rh = p.r * h;
    detail::CompensatedSum inner;  // sum of trapezoid halves of ln(K / a)
    detail::CompensatedSum outer;  // sum of dL/dt at t_1..t_k
    double prev = log_k - schedule.log_value(0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        const double cur = log_k - schedule.log_value(static_cast<double>(k) * h);
        inner.add(0.5 * (prev + cur));
        prev = cur;
        const double rate = std::exp(-rh * inner.value());
        outer.add(rate);
        if (!visit(CubatureStep{k, rate, w0 - rh * outer.value(), p.K})) return;
    }
}

inline Trajectory cubature_integrate(const ModelParams& p, const AlleeSchedule& schedule, double h, double horizon,
                                     const StepOptions& opt = {}) {
    p.validate();
    const std::size_t n = detail::step_count(h, horizon);
    require_valid(schedule, p.K, horizon);
    Trajectory tr = detail::make_grid(Scheme::cubature, h, p.K, n);
    tr.states[0] = p.x0;
    if (p.x0 == 0.0) {
        detail::mark_zero(tr);
        return tr;
    }
    double prev_i = initial_w(p);
    cubature_march(p, schedule, h, n, [&](const CubatureStep& step) {
        const std::size_t k = step.k;
        const double i_k = step.big_i;
        if (!(i_k > 0.0)) {
            tr.extinction_index = k;
            double tau = static_cast<double>(k) * h;
            if (opt.refine_tau && std::isfinite(prev_i)) tau = static_cast<double>(k - 1) * h + h * prev_i / (prev_i - i_k);
            tr.extinction_time = tau;
            return false;  // remaining states stay 0
        }
        tr.states[k] = step.state();
        prev_i = i_k;
        return true;
    });
    return tr;
}

inline Trajectory euler_integrate(const ModelParams& p, const AlleeSchedule& schedule, double h, double horizon,
                                  const StepOptions& opt = {}) {
    p.validate();
    const std::size_t n = detail::step_count(h, horizon);
    require_valid(schedule, p.K, horizon);
    Trajectory tr = detail::make_grid(Scheme::euler, h, p.K, n);
    tr.states[0] = p.x0;
    if (p.x0 == 0.0) {
        detail::mark_zero(tr);
        return tr;
    }
    const double log_k = std::log(p.K);
    const double rh = p.r * h;
    const double shift = opt.sampling == EulerSampling::next_step ? 1.0 : 0.0;
    double x = p.x0;
    for (std::size_t k = 0; k < n; ++k) {
        const double log_a = schedule.log_value((static_cast<double>(k) + shift) * h);
        const double lx = std::log(x);
        const double next = x + rh * x * (log_k - lx) * (lx - log_a);
        if (!(next > 0.0)) {
            tr.extinction_index = k + 1;
            double tau = static_cast<double>(k + 1) * h;
            if (opt.refine_tau) tau = static_cast<double>(k) * h + h * x / (x - next);
            tr.extinction_time = tau;
            break;
        }
        x = next;
        tr.states[k + 1] = x;
    }
    return tr;
}

/// Euler on dX/dt = r X ((K - X) / K) ((X - a_t) / K). A step that leaves
/// [0, K] is a step-size failure; states are never clamped.
inline Trajectory nominal_euler_integrate(const ModelParams& p, const AlleeSchedule& schedule, double h,
                                          double horizon) {
    p.validate();
    const std::size_t n = detail::step_count(h, horizon);
    require_valid(schedule, p.K, horizon);
    Trajectory tr = detail::make_grid(Scheme::nominal_euler, h, p.K, n);
    double x = p.x0;
    tr.states[0] = x;
    for (std::size_t k = 0; k < n; ++k) {
        const double a = schedule(static_cast<double>(k + 1) * h);
        x += h * p.r * x * ((p.K - x) / p.K) * ((x - a) / p.K);
        if (!(x >= 0.0 && x <= p.K))
            detail::fail_runtime("nominal Euler: step " + std::to_string(k + 1) + " left [0, K] (x=" +
                                 std::to_string(x) + "); reduce h");
        tr.states[k + 1] = x;
    }
    if (p.x0 == 0.0) detail::mark_zero(tr);
    return tr;
}

/// Numerical extinction time of the Euler or cubature scheme without storing
/// the trajectory; nullopt when the state survives the horizon.
inline std::optional<double> numerical_extinction_time(Scheme scheme, const ModelParams& p,
                                                       const AlleeSchedule& schedule, double h, double horizon,
                                                       const StepOptions& opt = {}) {
    p.validate();
    const std::size_t n = detail::step_count(h, horizon);
    require_valid(schedule, p.K, horizon);
    if (p.x0 == 0.0) return 0.0;
    if (scheme == Scheme::cubature) {
        std::optional<double> tau;
        double prev_i = initial_w(p);
        cubature_march(p, schedule, h, n, [&](const CubatureStep& step) {
            const std::size_t k = step.k;
            const double i_k = step.big_i;
            if (i_k > 0.0) {
                prev_i = i_k;
                return true;
            }
            tau = opt.refine_tau && std::isfinite(prev_i)
                      ? static_cast<double>(k - 1) * h + h * prev_i / (prev_i - i_k)
                      : static_cast<double>(k) * h;
            return false;
        });
        return tau;
    }
    detail::require(scheme == Scheme::euler, "numerical_extinction_time: scheme must be euler or cubature");
    const double log_k = std::log(p.K);
    const double rh = p.r * h;
    const double shift = opt.sampling == EulerSampling::next_step ? 1.0 : 0.0;
    double x = p.x0;
    for (std::size_t k = 0; k < n; ++k) {
        const double log_a = schedule.log_value((static_cast<double>(k) + shift) * h);
        const double lx = std::log(x);
        const double next = x + rh * x * (log_k - lx) * (lx - log_a);
        if (!(next > 0.0))
            return opt.refine_tau ? static_cast<double>(k) * h + h * x / (x - next) : static_cast<double>(k + 1) * h;
        x = next;
    }
    return std::nullopt;
}

inline Trajectory integrate(Scheme scheme, const ModelParams& p, const AlleeSchedule& schedule, double h,
                            double horizon, const StepOptions& opt = {}) {
    switch (scheme) {
        case Scheme::euler: return euler_integrate(p, schedule, h, horizon, opt);
        case Scheme::cubature: return cubature_integrate(p, schedule, h, horizon, opt);
        case Scheme::nominal_euler: return nominal_euler_integrate(p, schedule, h, horizon);
    }
    detail::fail_validation("unknown scheme");
}

} // namespace allee
