#pragma once

// Least-squares calibration of (x0, r, K, ln a_hi, ln a_lo, eps, theta) for a
// log-sigmoid Allee schedule against an observed time series, using the
// cubature scheme as the forward model.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "allee/error.hpp"
#include "allee/exact.hpp"
#include "allee/integrators.hpp"
#include "allee/parallel.hpp"
#include "allee/schedule.hpp"
#include "allee/tipping.hpp"

namespace allee {

struct Observation {
    double time;   // calendar time
    double value;  // meaningful only when present
    bool present = true;
};

struct Observations {
    std::vector<Observation> records;

    [[nodiscard]] std::size_t present_count() const noexcept {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [](const Observation& o) { return o.present; }));
    }

    /// Largest observed value; the natural scale of the objective.
    [[nodiscard]] double scale() const noexcept {
        double s = 0.0;
        for (const auto& o : records)
            if (o.present) s = std::max(s, o.value);
        return s;
    }

    [[nodiscard]] double first_time() const { return records.front().time; }
    [[nodiscard]] double last_time() const { return records.back().time; }

    void validate() const {
        detail::require(!records.empty(), "observations: no records");
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& o = records[i];
            detail::require(std::isfinite(o.time), "observations: non-finite time");
            if (o.present)
                detail::require(std::isfinite(o.value) && o.value > 0.0, "observations: values must be positive");
            if (i > 0) detail::require(o.time > records[i - 1].time, "observations: times must strictly increase");
        }
        detail::require(present_count() >= 3, "observations: need at least 3 present records");
    }
};

namespace detail {

// Forward-model values at model times `ts` (ascending, relative to the
// origin) with linear interpolation between grid points.
inline std::vector<double> forward_values(const ModelParams& p, const AlleeSchedule& schedule,
                                          std::span<const double> ts, double h) {
    std::vector<double> out(ts.size(), 0.0);
    if (ts.empty()) return out;
    const double horizon = ts.back();
    const std::size_t n = horizon > 0.0 ? static_cast<std::size_t>(std::ceil(horizon / h - 1e-9)) : 0;
    // Grid indices needed, with interpolation weights.
    struct Need {
        std::size_t lo;
        double w;  // weight of lo + 1
    };
    std::vector<Need> needs;
    needs.reserve(ts.size());
    for (double t : ts) {
        const double pos = t / h;
        auto lo = static_cast<std::size_t>(std::floor(pos + 1e-9));
        double w = pos - static_cast<double>(lo);
        if (w < 1e-9) w = 0.0;
        lo = std::min(lo, n);
        needs.push_back({lo, w});
    }
    std::vector<double> grid_values;
    std::vector<std::size_t> wanted;  // sorted, unique grid indices
    for (const auto& nd : needs) {
        wanted.push_back(nd.lo);
        if (nd.w > 0.0) wanted.push_back(std::min(nd.lo + 1, n));
    }
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
    grid_values.assign(wanted.size(), 0.0);

    std::size_t next = 0;
    while (next < wanted.size() && wanted[next] == 0) grid_values[next++] = p.x0;
    if (p.x0 > 0.0 && next < wanted.size()) {
        cubature_march(p, schedule, h, n, [&](const CubatureStep& step) {
            while (next < wanted.size() && wanted[next] == step.k) grid_values[next++] = step.state();
            return next < wanted.size() && step.big_i > 0.0;
        });
    }
    auto value_at = [&](std::size_t k) {
        const auto it = std::lower_bound(wanted.begin(), wanted.end(), k);
        return grid_values[static_cast<std::size_t>(it - wanted.begin())];
    };
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto& nd = needs[i];
        const double lo = value_at(nd.lo);
        out[i] = nd.w > 0.0 ? lo + nd.w * (value_at(std::min(nd.lo + 1, n)) - lo) : lo;
    }
    return out;
}

} // namespace detail

/// Cubature-model values at the observation times. `schedule` is in model
/// time, which starts at the first observation.
inline std::vector<double> theoretical_values(const ModelParams& p, const AlleeSchedule& schedule,
                                              const Observations& obs, double h) {
    std::vector<double> ts;
    ts.reserve(obs.records.size());
    for (const auto& o : obs.records) ts.push_back(o.time - obs.first_time());
    return detail::forward_values(p, schedule, ts, h);
}

/// (1 / M) sum over present records of (observed - model)^2. Records may come
/// in any order; they are sorted by time first.
inline double objective(const ModelParams& p, const AlleeSchedule& schedule, const Observations& obs, double h) {
    p.validate();
    detail::require(h > 0.0 && std::isfinite(h), "objective: h must be positive");
    Observations sorted = obs;
    std::sort(sorted.records.begin(), sorted.records.end(),
              [](const Observation& a, const Observation& b) { return a.time < b.time; });
    sorted.validate();
    const double window = sorted.last_time() - sorted.first_time();
    require_valid(schedule, p.K, std::max(window, h));
    const auto model = theoretical_values(p, schedule, sorted, h);
    double sum = 0.0;
    for (std::size_t i = 0; i < sorted.records.size(); ++i) {
        if (!sorted.records[i].present) continue;
        const double d = sorted.records[i].value - model[i];
        sum += d * d;
    }
    return sum / static_cast<double>(sorted.present_count());
}

// ---------------------------------------------------------------------------
// Nelder-Mead

struct SimplexResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
};

struct SimplexOptions {
    std::size_t max_evals = 4000;
    double ftol = 1e-10;  // converged once all vertex values agree to this relative spread
    double fabs = 0.0;    // or to this absolute spread
};

/// Nelder-Mead with dimension-adaptive coefficients (Gao and Han). `step`
/// gives the initial edge length per coordinate. Non-finite values are
/// treated as +inf, so infeasible points are never accepted.
inline SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> start,
                                 std::span<const double> step, const SimplexOptions& opt = {}) {
    const std::size_t n = start.size();
    detail::require(n > 0 && step.size() == n, "nelder_mead: dimension mismatch");
    const double dn = static_cast<double>(n);
    const double alpha = 1.0;
    const double beta = 1.0 + 2.0 / dn;
    const double gamma = 0.75 - 1.0 / (2.0 * dn);
    const double delta = n > 1 ? 1.0 - 1.0 / dn : 0.5;

    SimplexResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> pts(n + 1, start);
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
    for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    auto along = [&](double coef, const std::vector<double>& worst, std::vector<double>& out) {
        for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + coef * (centroid[j] - worst[j]);
    };

    while (true) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        const double spread = vals[worst] - vals[best];
        if (std::isfinite(spread) && spread <= std::max(opt.ftol * std::abs(vals[best]), opt.fabs)) {
            res.converged = true;
            break;
        }
        if (res.evaluations >= opt.max_evals) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / dn;
        }
        along(alpha, pts[worst], trial);
        const double fr = eval(trial);
        if (fr < vals[best]) {
            along(alpha * beta, pts[worst], trial2);
            const double fe = eval(trial2);
            if (fe < fr) {
                pts[worst] = trial2;
                vals[worst] = fe;
            } else {
                pts[worst] = trial;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = trial;
            vals[worst] = fr;
            continue;
        }
        // Contraction: outside if the reflection improved on the worst point.
        const bool outside = fr < vals[worst];
        along(outside ? alpha * gamma : -gamma, pts[worst], trial2);
        const double fc = eval(trial2);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = trial2;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[best][j] + delta * (pts[i][j] - pts[best][j]);
            vals[i] = eval(pts[i]);
        }
    }
    const auto it = std::min_element(vals.begin(), vals.end());
    res.value = *it;
    res.x = pts[static_cast<std::size_t>(it - vals.begin())];
    return res;
}

// ---------------------------------------------------------------------------
// Fitting

struct Range {
    double lo;
    double hi;
};

/// Sampling box for multi-start initial points. Scales are relative to the
/// data: x0 to the first present value, K to the largest value.
struct FitBounds {
    Range x0_rel{0.5, 1.5};
    Range r{0.002, 0.2};
    Range k_rel{1.05, 6.0};
    Range hi_gap{1e-8, 1.0};    // ln K - ln a_hi
    Range lo_gap{5.0, 400.0};   // ln a_hi - ln a_lo; enforced, not just sampled
    Range eps{2.0, 40.0};
    Range theta_offset{-100.0, 60.0};  // theta minus the first observation time
};

struct FitConfig {
    FitBounds bounds{};
    std::size_t restarts = 16;
    double simplex_scale = 0.1;  // initial edge, as a fraction of each box side
    double h = 1e-3;           // forward-model step of the reported fit
    double explore_h = 1e-2;   // step while exploring starts; <= h means single stage
    std::size_t polish = 3;    // explored starts refined at step h
    std::size_t max_evals = 3000;  // per simplex run
    std::uint64_t seed = 0;
    double ftol = 1e-10;
};

struct FitResult {
    ModelParams params;
    AlleeSchedule schedule{Constant{1.0}};  // log-sigmoid in model time
    double time_origin = 0.0;                // calendar time of model t = 0
    double objective = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
    std::vector<double> theoretical;                  // model values at the records
    std::vector<std::optional<double>> relative_diff;  // |obs - model| / obs, per record

    [[nodiscard]] const LogSigmoid& law() const { return *schedule.get_if<LogSigmoid>(); }
    [[nodiscard]] double theta_calendar() const { return law().theta + time_origin; }
    [[nodiscard]] double max_relative_diff() const {
        double m = 0.0;
        for (const auto& d : relative_diff)
            if (d) m = std::max(m, *d);
        return m;
    }
};

namespace detail {

inline constexpr std::size_t fit_dim = 7;

// Unconstrained search coordinates:
//   u0 = x0 / s, u1 = ln r, u2 = ln(K / s), u3 = ln(ln K - ln a_hi),
//   u4 = ln(ln a_hi - ln a_lo), u5 = ln eps, u6 = theta (model time),
// with s the data scale. By construction a_lo < a_hi < K, so 0 < a_t < K.
struct FitCoordinates {
    double scale;
    double u4_min;  // the a_hi / a_lo log-gap is only identifiable together with
    double u4_max;  // theta, so its range is a hard constraint

    [[nodiscard]] std::optional<std::pair<ModelParams, LogSigmoid>> decode(std::span<const double> u) const {
        for (double v : u)
            if (!std::isfinite(v)) return std::nullopt;
        if (u[1] > 50.0 || u[2] > 50.0 || u[3] > 50.0 || u[5] > 50.0 || u[5] < -50.0) return std::nullopt;
        if (u[4] < u4_min || u[4] > u4_max) return std::nullopt;
        ModelParams p{std::exp(u[1]), scale * std::exp(u[2]), scale * u[0]};
        if (!(p.x0 > 0.0 && p.x0 < p.K) || !(p.r > 0.0)) return std::nullopt;
        const double log_k = std::log(p.K);
        const double log_hi = log_k - std::exp(u[3]);
        const double log_lo = log_hi - std::exp(u[4]);
        if (!(log_hi < log_k) || !(log_lo < log_hi)) return std::nullopt;
        return std::pair{p, LogSigmoid{log_hi, log_lo, u[6], std::exp(u[5]), Direction::increasing}};
    }

    [[nodiscard]] std::array<Range, fit_dim> box(const FitBounds& b, const Observations& obs) const {
        double first = 0.0;
        for (const auto& o : obs.records)
            if (o.present) {
                first = o.value;
                break;
            }
        return {Range{b.x0_rel.lo * first / scale, b.x0_rel.hi * first / scale},
                Range{std::log(b.r.lo), std::log(b.r.hi)},
                Range{std::log(b.k_rel.lo), std::log(b.k_rel.hi)},
                Range{std::log(b.hi_gap.lo), std::log(b.hi_gap.hi)},
                Range{std::log(b.lo_gap.lo), std::log(b.lo_gap.hi)},
                Range{std::log(b.eps.lo), std::log(b.eps.hi)},
                b.theta_offset};
    }
};

inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base);
    double f = inv;
    double r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

/// Point `index` of the Halton sequence in `fit_dim` dimensions.
inline std::array<double, fit_dim> halton(std::uint64_t index) {
    static constexpr std::uint64_t primes[fit_dim] = {2, 3, 5, 7, 11, 13, 17};
    std::array<double, fit_dim> out{};
    for (std::size_t d = 0; d < fit_dim; ++d) out[d] = radical_inverse(index, primes[d]);
    return out;
}

inline void fill_diagnostics(FitResult& fr, const Observations& obs, double h) {
    fr.theoretical = theoretical_values(fr.params, fr.schedule, obs, h);
    fr.relative_diff.clear();
    for (std::size_t i = 0; i < obs.records.size(); ++i) {
        const auto& o = obs.records[i];
        if (o.present)
            fr.relative_diff.emplace_back(std::abs(o.value - fr.theoretical[i]) / o.value);
        else
            fr.relative_diff.emplace_back(std::nullopt);
    }
}

} // namespace detail

/// Multi-start Nelder-Mead over the seven model parameters. Starting points
/// are a Halton sequence over the bounds box, offset by the seed. Starts are
/// explored with the coarser step `explore_h`; the best `polish` of them are
/// then refined with step `h`, which is the step of the reported objective.
inline FitResult fit(const Observations& obs, const FitConfig& cfg = {}) {
    obs.validate();
    detail::require(cfg.restarts >= 1, "fit: restarts must be >= 1");
    detail::require(cfg.polish >= 1, "fit: polish must be >= 1");
    detail::require(cfg.h > 0.0 && cfg.explore_h > 0.0, "fit: step sizes must be positive");
    detail::require(cfg.simplex_scale > 0.0, "fit: simplex scale must be positive");
    const double t0 = obs.first_time();
    const double window = obs.last_time() - t0;
    std::vector<double> ts;
    for (const auto& o : obs.records) ts.push_back(o.time - t0);

    const detail::FitCoordinates coords{obs.scale(), std::log(cfg.bounds.lo_gap.lo), std::log(cfg.bounds.lo_gap.hi)};
    const auto box = coords.box(cfg.bounds, obs);
    for (const auto& b : box) detail::require(b.lo < b.hi, "fit: empty bounds range");

    auto loss_at = [&](double h) {
        return [&, h](std::span<const double> u) {
            const auto decoded = coords.decode(u);
            if (!decoded) return std::numeric_limits<double>::infinity();
            const auto& [p, law] = *decoded;
            const AlleeSchedule schedule{law};
            const auto model = detail::forward_values(p, schedule, ts, h);
            double sum = 0.0;
            for (std::size_t i = 0; i < obs.records.size(); ++i) {
                if (!obs.records[i].present) continue;
                const double d = obs.records[i].value - model[i];
                sum += d * d;
            }
            return sum / static_cast<double>(obs.present_count());
        };
    };

    std::vector<double> step(detail::fit_dim);
    for (std::size_t d = 0; d < detail::fit_dim; ++d) step[d] = cfg.simplex_scale * (box[d].hi - box[d].lo);
    std::vector<double> small(step);
    for (auto& s : small) s *= 0.1;

    SimplexOptions so;
    so.max_evals = cfg.max_evals;
    so.ftol = cfg.ftol;
    so.fabs = 1e-16 * obs.scale() * obs.scale();  // below rounding of the model values

    const bool two_stage = cfg.explore_h > cfg.h;
    const auto explore_loss = loss_at(two_stage ? cfg.explore_h : cfg.h);
    auto explored = detail::parallel_map(cfg.restarts, [&](std::size_t i) {
        const auto q = detail::halton(cfg.seed * 1000003ULL + i + 1);
        std::vector<double> start(detail::fit_dim);
        for (std::size_t d = 0; d < detail::fit_dim; ++d) start[d] = box[d].lo + q[d] * (box[d].hi - box[d].lo);
        return nelder_mead(explore_loss, start, step, so);
    });
    std::size_t total = 0;
    for (const auto& r : explored) total += r.evaluations;

    std::vector<std::size_t> rank(explored.size());
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(),
                     [&](std::size_t a, std::size_t b) { return explored[a].value < explored[b].value; });
    if (!std::isfinite(explored[rank.front()].value))
        detail::fail_runtime("fit: no feasible starting point in the bounds box");
    rank.resize(std::min(rank.size(), cfg.polish));

    // Polishing restarts the simplex from each candidate's best vertex, which
    // also refreshes a simplex that collapsed during exploration.
    const auto final_loss = loss_at(cfg.h);
    const auto polished = detail::parallel_map(rank.size(), [&](std::size_t i) {
        const auto& cand = explored[rank[i]];
        auto run = nelder_mead(final_loss, cand.x, small, so);
        return run;
    });

    std::size_t best = 0;
    for (std::size_t i = 0; i < polished.size(); ++i) {
        total += polished[i].evaluations;
        if (polished[i].value < polished[best].value) best = i;
    }
    if (!std::isfinite(polished[best].value)) detail::fail_runtime("fit: polishing found no feasible point");

    const auto decoded = coords.decode(polished[best].x);
    FitResult fr;
    fr.params = decoded->first;
    fr.schedule = AlleeSchedule(decoded->second);
    fr.time_origin = t0;
    fr.objective = polished[best].value;
    fr.evaluations = total;
    fr.converged = polished[best].converged;
    require_valid(fr.schedule, fr.params.K, std::max(window, cfg.h));
    detail::fill_diagnostics(fr, obs, cfg.h);
    return fr;
}

/// FitResult for given parameters without optimising; used for reporting a
/// supplied parameter set against data.
inline FitResult evaluate_fit(const Observations& obs, const ModelParams& p, const LogSigmoid& law_model_time,
                              double h = 1e-3) {
    obs.validate();
    FitResult fr;
    fr.params = p;
    fr.schedule = AlleeSchedule(law_model_time);
    fr.time_origin = obs.first_time();
    fr.objective = objective(p, fr.schedule, obs, h);
    fr.converged = true;
    detail::fill_diagnostics(fr, obs, h);
    return fr;
}

struct Prediction {
    Trajectory trajectory;  // model time
    ExtinctionReport extinction;
    std::vector<Crossing> crossings;  // model time
    double peak_time;                 // model time of the largest state
    double time_origin;
};

/// Forward cubature run of a fitted model over [0, horizon] (model time) plus
/// the exact-engine extinction time.
inline Prediction predict(const FitResult& fr, double horizon, double h = 1e-3) {
    detail::require(fr.converged, "predict: fit did not converge");
    Prediction pr{cubature_integrate(fr.params, fr.schedule, h, horizon), {}, {}, 0.0, fr.time_origin};
    ExtinctionOptions eo;
    eo.horizon = horizon;
    eo.tol = 1e-6;
    pr.extinction = extinction_time(fr.params, fr.schedule, eo);
    pr.crossings = detect_crossings(pr.trajectory, fr.schedule);
    const auto& xs = pr.trajectory.states;
    pr.peak_time = pr.trajectory.times[static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin())];
    return pr;
}

} // namespace allee
