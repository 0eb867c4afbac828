// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Printed reference values are pinned below.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "allee/allee.hpp"

using namespace allee;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(int id, const std::string& name, const std::function<void(Verdict&)>& body) {
    Verdict o;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %2d %s:%s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.str().c_str(), secs);
    std::fflush(stdout);
}

bool within_rel(double value, double expected, double rel) { return std::abs(value - expected) <= rel * std::abs(expected); }

std::string sci(double v) { return format_sci(v); }

const ModelParams unit{1.0, 1.0, 0.32};
const std::array<double, 4> h_list{1e-2, 1e-3, 1e-4, 1e-5};

// Printed error tables, h = 1e-2 .. 1e-5.
struct ErrorTable {
    double x0;
    std::array<double, 4> euler;
    std::array<double, 4> cubature;
    std::array<double, 3> euler_rate;
    std::array<double, 3> cubature_rate;
};

const ErrorTable tau_a1{0.32,
                        {1.023e-1, 4.227e-2, 1.477e-2, 4.804e-3},
                        {1.773e-2, 1.726e-3, 1.263e-4, 1.630e-5},
                        {3.837e-1, 4.566e-1, 4.879e-1},
                        {1.012, 1.136, 8.892e-1}};
const ErrorTable state_a2{0.32,
                          {1.535e-3, 1.535e-4, 1.534e-5, 1.534e-6},
                          {2.206e-3, 2.200e-4, 2.199e-5, 2.199e-6},
                          {1.000, 1.000, 1.000},
                          {1.001, 1.000, 1.000}};
const ErrorTable tau_a3{0.16,
                        {1.056e-1, 4.256e-2, 1.476e-2, 4.810e-3},
                        {4.440e-3, 4.404e-4, 4.039e-5, 1.039e-5},
                        {3.945e-1, 4.599e-1, 4.870e-1},
                        {1.004, 1.038, 5.897e-1}};
const ErrorTable state_a4{0.16,
                          {6.297e-4, 6.160e-5, 6.147e-6, 6.146e-7},
                          {5.442e-4, 5.435e-5, 5.434e-6, 5.434e-7},
                          {1.010, 1.001, 1.000},
                          {1.001, 1.000, 1.000}};

std::vector<ConvergenceSeries> tau_study(double x0) {
    ModelParams p = unit;
    p.x0 = x0;
    return tau_convergence_study(p, AlleeSchedule{Constant{0.5}}, h_list, Reference::closed_form);
}

std::vector<ConvergenceSeries> state_study(double x0) {
    ModelParams p = unit;
    p.x0 = x0;
    StudyOptions opt;
    opt.metric = StateErrorMetric::max_abs;
    return state_convergence_study(p, AlleeSchedule{Constant{0.5}}, h_list, 10.0, Reference::closed_form, opt);
}

// Errors against printed values; rates inside [lo, hi] per scheme.
void check_errors(Verdict& o, const std::string& label, const std::vector<ConvergenceSeries>& s,
                  const ErrorTable& ref, double euler_rel, double cubature_rel) {
    for (std::size_t i = 0; i < 4; ++i) {
        const double e = s[0].rows[i].error;
        const double c = s[1].rows[i].error;
        o.check(within_rel(e, ref.euler[i], euler_rel),
                label + " euler h=" + sci(h_list[i]) + " " + sci(e) + " vs " + sci(ref.euler[i]));
        o.check(within_rel(c, ref.cubature[i], cubature_rel),
                label + " cubature h=" + sci(h_list[i]) + " " + sci(c) + " vs " + sci(ref.cubature[i]));
    }
}

void check_rates(Verdict& o, const std::string& label, const ConvergenceSeries& s, double lo, double hi) {
    for (std::size_t i = 0; i + 1 < s.rows.size(); ++i) {
        const double rate = *s.rows[i].rate;
        o.check(rate >= lo && rate <= hi, label + " " + std::string(to_string(s.scheme)) + " rate h=" +
                                              sci(s.rows[i].h) + " " + format_fixed(rate, 4) + " outside [" +
                                              format_fixed(lo, 3) + ", " + format_fixed(hi, 3) + "]");
    }
}

std::string row_summary(const std::vector<ConvergenceSeries>& s) {
    std::string out;
    for (const auto& series : s) {
        out += " " + std::string(to_string(series.scheme)) + "=";
        for (std::size_t i = 0; i < series.rows.size(); ++i) out += (i ? "," : "") + sci(series.rows[i].error);
    }
    return out;
}

// Printed extinction-time tables.
struct TauRow {
    double x0;
    double euler;
    double cubature;
};

const std::vector<TauRow> table2_increasing{
    {0.04, 0.5299, 0.5448}, {0.08, 0.9721, 0.9871}, {0.12, 1.5756, 1.5910}, {0.16, 2.2155, 2.2310},
    {0.20, 2.9174, 2.9330}, {0.24, 3.7142, 3.7300}, {0.28, 4.6472, 4.6631}, {0.32, 5.7753, 5.7914},
    {0.36, 7.1927, 7.2090}, {0.40, 9.0666, 9.0831}};
const std::vector<TauRow> table2_decreasing{
    {0.04, 0.3011, 0.3159}, {0.08, 0.3897, 0.4045}, {0.12, 0.4690, 0.4839}, {0.16, 0.5473, 0.5622},
    {0.20, 0.6281, 0.6429}, {0.24, 0.7137, 0.7286}, {0.28, 0.8067, 0.8215}, {0.32, 0.9101, 0.9249},
    {0.36, 1.0298, 1.0447}, {0.40, 1.1812, 1.1960}};
const std::vector<TauRow> table3_increasing{
    {0.04, 0.53983, 0.54466}, {0.08, 0.98196, 0.98680}, {0.12, 1.58572, 1.59058}, {0.16, 2.22574, 2.23063},
    {0.20, 2.92767, 2.93257}, {0.24, 3.72458, 3.72950}, {0.28, 4.65765, 4.66258}, {0.32, 5.78589, 5.79083},
    {0.36, 7.20334, 7.20830}, {0.40, 9.07731, 9.08230}};
const std::vector<TauRow> table3_decreasing{
    {0.04, 0.31106, 0.31588}, {0.08, 0.39963, 0.40445}, {0.12, 0.47900, 0.48382}, {0.16, 0.55729, 0.56211},
    {0.20, 0.63804, 0.64286}, {0.24, 0.72370, 0.72852}, {0.28, 0.81664, 0.82146}, {0.32, 0.92003, 0.92485},
    {0.36, 1.03980, 1.04462}, {0.40, 1.19111, 1.19593}};
const std::vector<TauRow> table4_h3{{0.04, 0.378, 0.421}, {0.08, 0.550, 0.593}, {0.12, 0.760, 0.803},
                                    {0.16, 1.007, 1.050}, {0.20, 1.443, 1.484}, {0.24, 2.945, 2.963}};
const std::vector<TauRow> table4_h4{{0.04, 0.4058, 0.4206}, {0.08, 0.5771, 0.5919}, {0.12, 0.7867, 0.8014},
                                    {0.16, 1.0336, 1.0483}, {0.20, 1.4663, 1.4810}, {0.24, 2.9260, 2.9385}};
const std::vector<TauRow> table4_h5{{0.04, 0.41568, 0.42050}, {0.08, 0.58696, 0.59177},
                                    {0.12, 0.79646, 0.80127}, {0.16, 1.04331, 1.04811},
                                    {0.20, 1.47587, 1.48067}, {0.24, 2.93154, 2.93612}};
// Euler minus cubature, h = 1e-3, 1e-4, 1e-5.
const std::vector<std::array<double, 3>> table5{{0.043, 0.0148, 0.00482}, {0.043, 0.0148, 0.00481},
                                                {0.043, 0.0147, 0.00481}, {0.043, 0.0147, 0.00480},
                                                {0.041, 0.0147, 0.00480}, {0.018, 0.0125, 0.00458}};

std::vector<ExtinctionComparisonRow> scenario_table(const std::string& name, const std::vector<TauRow>& printed,
                                                    double h) {
    const auto& sc = find_scenario(name);
    std::vector<double> x0s;
    for (const auto& r : printed) x0s.push_back(r.x0);
    StudyOptions opt;
    opt.horizon = sc.table_horizon;
    opt.euler_sampling = sc.euler_sampling;
    return extinction_table(sc.base, sc.schedule, x0s, h, opt);
}

// Tolerance of two units in the last printed digit.
void check_table(Verdict& o, const std::string& label, const std::vector<ExtinctionComparisonRow>& rows,
                 const std::vector<TauRow>& printed, int decimals) {
    const double tol = 2.0 * std::pow(10.0, -decimals) + 1e-12;
    int worst_units = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const auto& p = printed[i];
        for (const auto& [got, want, scheme] :
             {std::tuple{r.tau_euler, p.euler, "euler"}, std::tuple{r.tau_cubature, p.cubature, "cubature"}}) {
            const int units = static_cast<int>(std::lround(std::abs(got - want) * std::pow(10.0, decimals)));
            worst_units = std::max(worst_units, units);
            o.check(std::abs(got - want) <= tol, label + " x0=" + format_fixed(p.x0, 2) + " " + scheme + " " +
                                                     format_fixed(got, decimals + 2) + " vs " +
                                                     format_fixed(want, decimals));
        }
    }
    o.detail << " " << label << " worst " << worst_units << " unit(s);";
}

// Random schedule with 0 < a_t < K on the whole horizon.
AlleeSchedule random_schedule(std::mt19937_64& rng, double K, double horizon) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto frac = [&](double lo, double hi) { return K * (lo + (hi - lo) * u(rng)); };
    switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
        case 0: return AlleeSchedule{Constant{frac(0.05, 0.95)}};
        case 1: {
            const double lo = frac(0.02, 0.5);
            const double hi = lo + (K * 0.97 - lo) * (0.1 + 0.9 * u(rng));
            const double theta = horizon * u(rng);
            const double eps = 0.05 + 2.0 * u(rng);
            return AlleeSchedule{Sigmoid{hi, lo, theta, eps, u(rng) < 0.5 ? Direction::increasing : Direction::decreasing}};
        }
        case 2: {
            const double base = frac(0.01, 0.3);
            const double amp = (K * 0.97 - base) * (0.1 + 0.9 * u(rng));
            return AlleeSchedule{Oscillatory{amp, base, 0.3 + 3.0 * u(rng)}};
        }
        default: {
            std::vector<Knot> knots;
            const int n = 2 + std::uniform_int_distribution<int>(0, 6)(rng);
            for (int i = 0; i < n; ++i) knots.push_back({horizon * i / (n - 1), frac(0.03, 0.95)});
            return AlleeSchedule{Tabulated{knots, true}};
        }
    }
}

} // namespace

int main() {
    std::printf("acceptance: %zu worker thread(s)\n", detail::worker_count(64));

    report(1, "closed-form extinction time", [](Verdict& o) {
        const double tau = closed_form_tau(1.0, 1.0, 0.5, 0.32);
        ExtinctionOptions eo;
        eo.tol = 1e-12;
        eo.horizon = 10.0;
        eo.allow_closed_form = false;
        const auto bis = extinction_time(unit, AlleeSchedule{Constant{0.5}}, eo);
        o.detail << " closed form " << format_fixed(tau, 7) << ", bisection " << format_fixed(bis.tau, 7);
        o.check(std::abs(tau - 1.35227) <= 1e-4, "closed form not within 1e-4 of 1.35227");
        o.check(bis.method == ExtinctionMethod::bisection, "bisection path not taken");
        o.check(std::abs(bis.tau - tau) <= 1e-6, "bisection differs from closed form by more than 1e-6");
    });

    report(2, "extinction-time convergence, x0=0.32", [](Verdict& o) {
        const auto s = tau_study(0.32);
        o.detail << row_summary(s);
        check_errors(o, "tau", s, tau_a1, 0.05, 0.10);
        check_rates(o, "tau", s[0], 0.37, 0.50);
        check_rates(o, "tau", s[1], 0.85, 1.15);
    });

    report(3, "state-error convergence and reversal", [](Verdict& o) {
        const auto a2 = state_study(0.32);
        const auto a3 = tau_study(0.16);
        const auto a4 = state_study(0.16);
        o.detail << " x0=0.32" << row_summary(a2) << "; x0=0.16" << row_summary(a4) << "; tau x0=0.16"
                 << row_summary(a3);
        check_errors(o, "state 0.32", a2, state_a2, 0.05, 0.05);
        check_errors(o, "state 0.16", a4, state_a4, 0.05, 0.05);
        check_errors(o, "tau 0.16", a3, tau_a3, 0.05, 0.10);
        for (const auto* s : {&a2, &a4}) {
            check_rates(o, "state", (*s)[0], 0.995, 1.005);
            check_rates(o, "state", (*s)[1], 0.995, 1.005);
        }
        for (std::size_t i = 0; i < 4; ++i) {
            o.check(a2[0].rows[i].error < a2[1].rows[i].error, "x0=0.32: euler state error not below cubature");
            o.check(a4[0].rows[i].error > a4[1].rows[i].error, "x0=0.16: reversal missing");
            o.check(a3[0].rows[i].error > a3[1].rows[i].error, "x0=0.16: tau ordering reversed");
        }
    });

    report(4, "sigmoid extinction-time tables", [](Verdict& o) {
        check_table(o, "inc h=1e-4", scenario_table("sigmoid-increasing", table2_increasing, 1e-4), table2_increasing, 4);
        check_table(o, "dec h=1e-4", scenario_table("sigmoid-decreasing", table2_decreasing, 1e-4), table2_decreasing, 4);
        check_table(o, "inc h=1e-5", scenario_table("sigmoid-increasing", table3_increasing, 1e-5), table3_increasing, 5);
        check_table(o, "dec h=1e-5", scenario_table("sigmoid-decreasing", table3_decreasing, 1e-5), table3_decreasing, 5);
    });

    report(5, "oscillatory extinction-time tables", [](Verdict& o) {
        const std::array<const std::vector<TauRow>*, 3> printed{&table4_h3, &table4_h4, &table4_h5};
        for (std::size_t j = 0; j < 3; ++j) {
            const double h = h_list[j + 1];
            const auto rows = scenario_table("oscillatory", *printed[j], h);
            check_table(o, "h=" + format_sci(h, 1), rows, *printed[j], static_cast<int>(j) + 3);
            double worst = 0.0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double gap = std::abs(rows[i].difference);
                const double want = table5[i][j];
                worst = std::max(worst, std::abs(gap - want) / want);
                o.check(within_rel(gap, want, 0.10), "gap x0=" + format_fixed(rows[i].x0, 2) + " h=" + sci(h) +
                                                         " " + sci(gap) + " vs " + sci(want));
                o.check(rows[i].tau_euler < rows[i].tau_cubature,
                        "euler not earlier at x0=" + format_fixed(rows[i].x0, 2) + " h=" + sci(h));
            }
            o.detail << " gap worst rel " << format_fixed(worst, 3) << ";";
        }
    });

    report(6, "cubature stays in [0, K]", [](Verdict& o) {
        std::mt19937_64 rng(20240601);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        struct Case {
            ModelParams p;
            AlleeSchedule s;
            double h;
            double horizon;
        };
        std::vector<Case> cases;
        for (int i = 0; i < 1000; ++i) {
            const double K = std::exp(std::log(0.1) + u(rng) * std::log(1e4));
            const double r = std::exp(std::log(0.05) + u(rng) * std::log(100.0));
            const double h = std::exp(std::log(1e-4) + u(rng) * std::log(1e4));
            const double horizon = std::max(h, std::min(10.0, 2000.0 * h));
            const double x0 = u(rng) < 0.05 ? (u(rng) < 0.5 ? 0.0 : K) : K * u(rng);
            cases.push_back({{r, K, x0}, random_schedule(rng, K, horizon), h, horizon});
        }
        const auto bad = detail::parallel_map(cases.size(), [&](std::size_t i) {
            const auto& c = cases[i];
            const auto tr = cubature_integrate(c.p, c.s, c.h, c.horizon);
            std::size_t n = 0;
            for (double x : tr.states)
                if (!(x >= 0.0 && x <= c.p.K)) ++n;
            return n;
        });
        std::size_t total = 0;
        for (auto b : bad) total += b;
        o.detail << " 1000 runs, " << total << " violation(s)";
        o.check(total == 0, "states left [0, K]");
    });

    report(7, "ordering in the initial state", [](Verdict& o) {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double horizon = 5.0;
        std::vector<AlleeSchedule> schedules;
        std::vector<ModelParams> bases;
        std::vector<double> steps;
        std::vector<std::vector<double>> grids;
        for (int i = 0; i < 100; ++i) {
            const double K = 0.5 + 4.5 * u(rng);
            bases.push_back({0.3 + 2.7 * u(rng), K, 0.0});
            schedules.push_back(random_schedule(rng, K, horizon));
            steps.push_back(std::exp(std::log(1e-3) + u(rng) * std::log(50.0)));
            std::vector<double> x0s;
            for (int j = 0; j < 12; ++j) x0s.push_back(K * (0.02 + 0.96 * u(rng)));
            std::sort(x0s.begin(), x0s.end());
            grids.push_back(std::move(x0s));
        }
        struct Count {
            std::size_t exact = 0;
            std::size_t cubature = 0;
            double worst_exact = 0.0;
        };
        const auto counts = detail::parallel_map(schedules.size(), [&](std::size_t i) {
            Count c;
            const auto& x0s = grids[i];
            std::vector<double> times;
            for (int k = 0; k <= 50; ++k) times.push_back(horizon * k / 50.0);
            std::vector<std::vector<double>> exact;
            std::vector<Trajectory> cub;
            for (double x0 : x0s) {
                ModelParams p = bases[i];
                p.x0 = x0;
                std::vector<double> xs;
                for (const auto& s : exact_samples(p, schedules[i], times)) xs.push_back(s.x);
                exact.push_back(std::move(xs));
                cub.push_back(cubature_integrate(p, schedules[i], steps[i], horizon));
            }
            for (std::size_t j = 0; j + 1 < x0s.size(); ++j) {
                for (std::size_t k = 0; k < times.size(); ++k) {
                    const double d = exact[j][k] - exact[j + 1][k];
                    c.worst_exact = std::max(c.worst_exact, d);
                    if (d > 1e-9) ++c.exact;
                }
                const auto& lo = cub[j];
                const auto& hi = cub[j + 1];
                for (std::size_t k = 0; k < lo.size(); ++k) {
                    if (lo.states[k] <= hi.states[k]) continue;
                    // One cell of slack where the upper run has just died.
                    const bool near = hi.extinction_index && *hi.extinction_index <= k + 1 &&
                                      (!lo.extinction_index || *lo.extinction_index + 1 >= *hi.extinction_index);
                    if (!near) ++c.cubature;
                }
            }
            return c;
        });
        Count total;
        for (const auto& c : counts) {
            total.exact += c.exact;
            total.cubature += c.cubature;
            total.worst_exact = std::max(total.worst_exact, c.worst_exact);
        }
        o.detail << " 100 schedules x 12 states: exact violations " << total.exact << " (worst "
                 << sci(total.worst_exact) << "), cubature violations " << total.cubature;
        o.check(total.exact == 0, "exact engine ordering violated beyond 1e-9");
        o.check(total.cubature == 0, "cubature ordering violated");
    });

    report(8, "exact solution agrees with its oracles", [](Verdict& o) {
        double worst_closed = 0.0;
        for (double x0 : {0.04, 0.16, 0.32, 0.49, 0.51, 0.75, 0.99}) {
            ModelParams p = unit;
            p.x0 = x0;
            std::vector<double> times;
            for (int k = 0; k <= 1000; ++k) times.push_back(0.01 * k);
            const auto samples = exact_samples(p, AlleeSchedule{Constant{0.5}}, times);
            for (const auto& s : samples)
                worst_closed = std::max(worst_closed, std::abs(s.x - closed_form_state(1.0, 1.0, 0.5, x0, s.t)));
        }
        o.detail << " constant: max |exact - closed form| " << sci(worst_closed) << ";";
        o.check(worst_closed <= 1e-8, "exact engine differs from closed form by more than 1e-8");

        struct Job {
            std::string scenario;
            double x0;
        };
        std::vector<Job> jobs;
        for (const char* name : {"sigmoid-increasing", "sigmoid-decreasing", "oscillatory"})
            for (double x0 : {0.04, 0.2, 0.4, 0.6, 0.9}) jobs.push_back({name, x0});
        const auto errors = detail::parallel_map(jobs.size(), [&](std::size_t i) {
            const auto& sc = find_scenario(jobs[i].scenario);
            ModelParams p = sc.base;
            p.x0 = jobs[i].x0;
            const auto tr = cubature_integrate(p, sc.schedule, 1e-5, 10.0);
            const std::size_t end = tr.extinction_index.value_or(tr.size());
            std::vector<double> times;
            std::vector<std::size_t> idx;
            for (std::size_t k = 0; k < end; k += 20) {
                times.push_back(tr.times[k]);
                idx.push_back(k);
            }
            if (end > 0 && idx.back() != end - 1) {
                times.push_back(tr.times[end - 1]);
                idx.push_back(end - 1);
            }
            const auto samples = exact_samples(p, sc.schedule, times);
            double worst = 0.0;
            for (std::size_t j = 0; j < idx.size(); ++j)
                worst = std::max(worst, std::abs(tr.states[idx[j]] - samples[j].x));
            return worst;
        });
        const double worst = *std::max_element(errors.begin(), errors.end());
        o.detail << " time-varying: max |cubature(h=1e-5) - exact| " << sci(worst);
        o.check(worst <= 5e-4, "cubature differs from the exact engine by more than 5e-4");
    });

    report(9, "tipping verdicts and the integral threshold", [](Verdict& o) {
        std::vector<double> grid;
        for (int i = 0; i <= 25; ++i) grid.push_back(0.04 * i);
        const double h = 1e-4;
        const double horizon = 10.0;
        for (const char* name : {"sigmoid-increasing", "sigmoid-decreasing", "oscillatory"}) {
            const auto& sc = find_scenario(name);
            const auto verdicts = basin_scan(sc.base, sc.schedule, grid, h, horizon);
            std::size_t tipped = 0;
            for (const auto& v : verdicts) {
                if (!v.r_tipped) continue;
                ++tipped;
                o.check(v.threshold_margin > 0.0,
                        std::string(name) + " x0=" + format_fixed(v.x0, 2) + " tipped without positive margin");
            }
            o.detail << " " << name << ": " << tipped << " tipped;";
            if (std::string(name) != "sigmoid-increasing") continue;
            const double a0 = sc.schedule(0.0);
            std::string extinct_set;
            for (const auto& v : verdicts) {
                if (v.x0 == 0.0) continue;
                const bool extinct = v.outcome == Outcome::extinct;
                if (extinct) extinct_set += (extinct_set.empty() ? "" : ",") + format_fixed(v.x0, 2);
                const std::string at = " x0=" + format_fixed(v.x0, 2);
                o.check(extinct == (v.x0 <= 0.40 + 1e-12), "extinct set differs from {x0 <= 0.40} at" + at);
                o.check(extinct == v.threshold_satisfied, "extinction and threshold disagree at" + at);
                if (v.x0 > a0)
                    o.check(v.r_tipped == v.threshold_satisfied, "r_tipped and threshold disagree at" + at);
            }
            o.detail << " extinct {" << extinct_set << "};";
        }
    });

    report(10, "fisheries calibration", [](Verdict& o) {
        const auto obs = load_observations(std::string(ALLEE_DATA_DIR) + "/fisheries_jp.csv");
        const auto fr = fit(obs);
        const auto pr = predict(fr, 100.0, 1e-3);
        const double peak = pr.peak_time + pr.time_origin;
        const double ext = pr.extinction.tau + pr.time_origin;
        double crossing = infinity;
        for (const auto& c : pr.crossings)
            if (c.direction == CrossingDirection::downward) {
                crossing = c.t + pr.time_origin;
                break;
            }
        bool rises = false;
        bool falls = false;
        const auto& xs = pr.trajectory.states;
        const auto top = static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
        rises = top > 0 && xs[top] > xs.front();
        falls = top + 1 < xs.size() && xs.back() < xs[top];
        o.detail << " peak " << format_fixed(peak, 2) << ", crossing " << format_fixed(crossing, 2) << ", extinction "
                 << format_fixed(ext, 2) << ", max rel diff " << format_fixed(fr.max_relative_diff(), 4) << ";";
        o.check(rises && falls, "trajectory is not rise-then-fall");
        o.check(std::abs(peak - 1983.0) <= 5.0, "peak outside 1983 +/- 5");
        o.check(std::abs(crossing - 1983.0) <= 2.0, "crossing outside 1983 +/- 2");
        o.check(std::abs(ext - 2051.0) <= 3.0, "extinction outside 2051 +/- 3");
        o.check(fr.max_relative_diff() <= 0.10, "max relative difference above 0.10");

        // Self-consistency: data from the forward model at the fitted values.
        Observations synth = obs;
        const auto model = theoretical_values(fr.params, fr.schedule, obs, 1e-3);
        for (std::size_t i = 0; i < synth.records.size(); ++i) {
            synth.records[i].value = model[i];
            synth.records[i].present = true;
        }
        const auto refit = fit(synth);
        const double scale2 = synth.scale() * synth.scale();
        o.detail << " synthetic refit objective/scale^2 " << sci(refit.objective / scale2);
        o.check(refit.objective <= 1e-6 * scale2, "synthetic refit objective above 1e-6 of scale^2");
    });

    report(11, "nominal model never goes extinct", [](Verdict& o) {
        const auto tr = nominal_euler_integrate(unit, AlleeSchedule{Constant{0.5}}, 1e-3, 50.0);
        const double smallest = *std::min_element(tr.states.begin(), tr.states.end());
        const double tau = closed_form_tau(1.0, 1.0, 0.5, 0.32);
        o.detail << " nominal min state " << sci(smallest) << " over [0, 50]; proposed tau " << format_fixed(tau, 5);
        o.check(smallest > 0.0, "nominal state reached zero");
        o.check(std::abs(tau - 1.35227) <= 1e-4, "proposed model tau differs from 1.35227");
    });

    std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
