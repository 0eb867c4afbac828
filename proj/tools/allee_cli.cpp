// Command-line front end for the Allee-effect extinction model.
//
//   allee_cli <subcommand> [--config PATH] [--set key=value]... [--out DIR]
//             [--scheme euler|cubature] [--h H] [--horizon T]
//             [--scenario NAME] [--seed N] [--stdout]
//
// Exit status: 0 success, 1 invalid input, 2 computation or I/O failure.
// Diagnostics go to stderr; data goes to files under the output directory,
// and additionally to stdout with --stdout.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "allee/allee.hpp"

#ifndef ALLEE_DATA_DIR
#define ALLEE_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace allee;

namespace {

struct Flags {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    std::string scheme;
    std::string h;
    std::string horizon;
    std::string scenario;
    std::string seed;
    bool to_stdout = false;
};

void add_common(CLI::App& cmd, Flags& f) {
    cmd.add_option("--config", f.config, "Run configuration file")->check(CLI::ExistingFile);
    cmd.add_option("--set", f.sets, "Override a configuration key (key=value); repeatable")->take_all();
    cmd.add_option("--out", f.out, "Output directory (output.dir)");
    cmd.add_option("--scheme", f.scheme, "euler or cubature (numerics.scheme)");
    cmd.add_option("--h", f.h, "Step size (numerics.h)");
    cmd.add_option("--horizon", f.horizon, "Integration horizon (numerics.horizon)");
    cmd.add_option("--scenario", f.scenario, "Built-in scenario (task.scenario)");
    cmd.add_option("--seed", f.seed, "Fit seed (task.seed)");
    cmd.add_flag("--stdout", f.to_stdout, "Also write the main result to standard output");
}

RunConfig assemble_config(const std::string& task, const Flags& f) {
    ConfigText text;
    if (!f.config.empty()) text = read_config_text(f.config);
    if (const auto it = text.entries.find("task.kind"); it != text.entries.end() && it->second.value != task)
        detail::fail_validation(it->second.origin + ": task.kind = " + it->second.value +
                                " conflicts with subcommand '" + task + "'");
    apply_override(text, "task.kind=" + task);
    for (const auto& s : f.sets) apply_override(text, s);
    const std::pair<const std::string*, const char*> mapped[] = {
        {&f.out, "output.dir"},   {&f.scheme, "numerics.scheme"}, {&f.h, "numerics.h"},
        {&f.horizon, "numerics.horizon"}, {&f.scenario, "task.scenario"}, {&f.seed, "task.seed"},
    };
    for (const auto& [value, key] : mapped)
        if (!value->empty()) apply_override(text, std::string(key) + "=" + *value);
    return build_config(text);
}

class Output {
public:
    Output(fs::path dir, bool to_stdout) : dir_(std::move(dir)), to_stdout_(to_stdout) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) detail::fail_runtime(dir_.string() + ": cannot create output directory (" + ec.message() + ")");
    }

    /// Writes one artifact; `primary` artifacts are echoed with --stdout.
    template <class Fill>
    void write(const std::string& name, Fill&& fill, bool primary = false) {
        const auto path = (dir_ / name).string();
        write_file(path, fill);
        std::cerr << "wrote " << path << '\n';
        if (primary && to_stdout_) {
            fill(std::cout);
            std::cout.flush();
        }
    }

private:
    fs::path dir_;
    bool to_stdout_;
};

struct Problem {
    ModelParams model;
    AlleeSchedule schedule;
    const Scenario* scenario = nullptr;
};

/// Model and schedule from the configuration, falling back to the scenario.
Problem resolve_problem(const RunConfig& cfg) {
    const Scenario* sc = cfg.task.scenario ? &find_scenario(*cfg.task.scenario) : nullptr;
    if (cfg.model && cfg.schedule) return {*cfg.model, *cfg.schedule, sc};
    if (sc) {
        Problem pb{cfg.model.value_or(sc->base), cfg.schedule.value_or(sc->schedule), sc};
        return pb;
    }
    return {cfg.require_model(), cfg.require_schedule(), nullptr};
}

StepOptions step_options(const RunConfig& cfg) { return {cfg.numerics.sampling, cfg.numerics.refine_tau}; }

int run_simulate(const RunConfig& cfg, Output& out) {
    const auto pb = resolve_problem(cfg);
    const auto& nu = cfg.numerics;
    const auto tr = integrate(nu.scheme, pb.model, pb.schedule, nu.h, nu.horizon, step_options(cfg));
    out.write("trajectory.csv", [&](std::ostream& os) { write_trajectory(tr, pb.schedule, os, {cfg.output.stride, 0.0}); },
              true);
    std::cerr << to_string(nu.scheme) << ": " << tr.size() - 1 << " steps, ";
    if (tr.extinct())
        std::cerr << "extinct at t = " << format_double(*tr.extinction_time) << '\n';
    else
        std::cerr << "x(T) = " << format_double(tr.states.back()) << '\n';
    return 0;
}

int run_exact(const RunConfig& cfg, Output& out) {
    const auto pb = resolve_problem(cfg);
    std::vector<double> times = cfg.task.times;
    if (times.empty()) {
        const auto n = detail::step_count(cfg.task.dt, cfg.numerics.horizon);
        for (std::size_t k = 0; k <= n; ++k) times.push_back(static_cast<double>(k) * cfg.task.dt);
    }
    const auto samples = exact_samples(pb.model, pb.schedule, times, cfg.numerics.quad_tol);
    out.write("exact_samples.csv", [&](std::ostream& os) { write_exact_samples(samples, os); }, true);
    return 0;
}

int run_extinct(const RunConfig& cfg, Output& out) {
    const auto pb = resolve_problem(cfg);
    const auto& nu = cfg.numerics;
    ExtinctionOptions eo;
    eo.tol = nu.tau_tol;
    eo.horizon = nu.horizon;
    eo.quad_tol = nu.quad_tol;
    const auto rep = extinction_time(pb.model, pb.schedule, eo);
    auto kv = extinction_report_fields(rep);
    for (const Scheme s : {Scheme::euler, Scheme::cubature}) {
        const auto tau = numerical_extinction_time(s, pb.model, pb.schedule, nu.h, nu.horizon, step_options(cfg));
        kv.emplace_back(std::string(to_string(s)) + "_tau", format_double(tau.value_or(infinity)));
    }
    kv.emplace_back("h", format_double(nu.h));
    kv.emplace_back("horizon", format_double(nu.horizon));
    out.write("extinction_report.csv", [&](std::ostream& os) { write_key_values(kv, os); }, true);
    std::cerr << "exact tau = " << format_double(rep.tau) << " (" << to_string(rep.method) << ")\n";
    return 0;
}

int run_converge(const RunConfig& cfg, Output& out) {
    const auto pb = resolve_problem(cfg);
    const auto& nu = cfg.numerics;
    StudyOptions so;
    so.horizon = nu.horizon;
    so.euler_sampling = nu.sampling;
    so.quad_tol = nu.quad_tol;
    so.tau_tol = nu.tau_tol;
    so.metric = cfg.task.metric;
    const Reference ref = cfg.task.reference.value_or(pb.schedule.constant_value() ? Reference::closed_form
                                                                                    : Reference::exact_engine);
    const auto tau = tau_convergence_study(pb.model, pb.schedule, cfg.task.h_list, ref, so);
    const auto state = state_convergence_study(pb.model, pb.schedule, cfg.task.h_list, cfg.task.window, ref, so);
    out.write("tau_convergence.csv", [&](std::ostream& os) { write_convergence(tau, os); }, true);
    out.write("state_convergence.csv", [&](std::ostream& os) { write_convergence(state, os); });
    if (cfg.output.text) {
        out.write("tau_convergence.txt", [&](std::ostream& os) {
            os << "Extinction-time error against the " << to_string(ref) << " reference\n";
            write_convergence_text(tau, os);
        });
        out.write("state_convergence.txt", [&](std::ostream& os) {
            os << to_string(so.metric) << " state error on (0, " << format_double(cfg.task.window) << "] against the "
               << to_string(ref) << " reference\n";
            write_convergence_text(state, os);
        });
    }
    return 0;
}

int run_tables(const RunConfig& cfg, Output& out) {
    const auto pb = resolve_problem(cfg);
    std::vector<double> x0s = cfg.task.x0_list;
    if (x0s.empty()) {
        if (!pb.scenario) detail::fail_validation("missing required key task.x0_list (or task.scenario)");
        x0s = pb.scenario->table_x0;
    }
    StudyOptions so;
    so.horizon = cfg.has("numerics.horizon") || !pb.scenario ? cfg.numerics.horizon : pb.scenario->table_horizon;
    so.euler_sampling = cfg.has("numerics.sampling") || !pb.scenario ? cfg.numerics.sampling
                                                                      : pb.scenario->euler_sampling;
    const double h = cfg.has("numerics.h") ? cfg.numerics.h : 1e-4;
    const auto rows = extinction_table(pb.model, pb.schedule, x0s, h, so);
    out.write("extinction_table.csv", [&](std::ostream& os) { write_extinction_table(rows, os); }, true);
    if (cfg.output.text)
        out.write("extinction_table.txt", [&](std::ostream& os) { write_extinction_text(rows, h, os); });
    return 0;
}

int run_tip_check(const RunConfig& cfg, Output& out) {
    const auto pb = resolve_problem(cfg);
    std::vector<double> x0s = cfg.task.x0_list;
    if (x0s.empty()) {
        if (pb.scenario && !cfg.model) {
            for (int i = 0; i <= 25; ++i) x0s.push_back(pb.model.K * i / 25.0);
        } else {
            x0s.push_back(pb.model.x0);
        }
    }
    for (double x0 : x0s)
        if (x0 < 0.0 || x0 > pb.model.K) detail::fail_validation("task.x0_list: values must lie in [0, model.K]");
    const double horizon = cfg.numerics.horizon;
    ClassifyOptions co;
    co.persist_tol = cfg.numerics.persist_tol;
    co.threshold.quad_tol = cfg.numerics.quad_tol;
    const auto verdicts = basin_scan(pb.model, pb.schedule, x0s, cfg.numerics.h, horizon, co);
    out.write("verdicts.csv", [&](std::ostream& os) { write_verdicts(verdicts, os); }, true);
    std::size_t extinct = 0;
    std::size_t tipped = 0;
    for (const auto& v : verdicts) {
        extinct += v.outcome == Outcome::extinct;
        tipped += v.r_tipped;
    }
    std::cerr << verdicts.size() << " initial conditions: " << extinct << " extinct, " << tipped << " tipped\n";
    return 0;
}

Observations observations_for(const RunConfig& cfg) {
    const auto path = cfg.task.data ? cfg.task.data->string() : std::string(ALLEE_DATA_DIR) + "/fisheries_jp.csv";
    return load_observations(path);
}

void write_fit(const FitResult& fr, const Observations& obs, const RunConfig& cfg, Output& out, bool primary) {
    out.write("fit_params.csv", [&](std::ostream& os) { write_key_values(fit_parameter_fields(fr), os); }, primary);
    out.write("fit_report.csv", [&](std::ostream& os) { write_fit_report(fr, obs, os); });
    if (cfg.output.text) out.write("fit_summary.txt", [&](std::ostream& os) { write_fit_summary(fr, obs, os); });
}

FitResult run_fit_step(const RunConfig& cfg, const Observations& obs) {
    FitConfig fc = cfg.task.fit;
    if (cfg.has("numerics.h")) fc.h = cfg.numerics.h;
    std::cerr << "fitting " << obs.present_count() << " records with " << fc.restarts << " starts\n";
    auto fr = fit(obs, fc);
    if (!fr.converged) std::cerr << "warning: evaluation budget exhausted before the simplex converged\n";
    std::cerr << "objective " << format_sci(fr.objective) << ", max relative difference "
              << format_fixed(fr.max_relative_diff(), 4) << '\n';
    return fr;
}

int run_fit(const RunConfig& cfg, Output& out) {
    const auto obs = observations_for(cfg);
    const auto fr = run_fit_step(cfg, obs);
    write_fit(fr, obs, cfg, out, true);
    return 0;
}

int run_predict(const RunConfig& cfg, Output& out) {
    const auto obs = observations_for(cfg);
    FitResult fr;
    if (cfg.task.refit) {
        fr = run_fit_step(cfg, obs);
    } else {
        const auto& sched = cfg.require_schedule();
        const auto* law = sched.get_if<LogSigmoid>();
        if (!law) detail::fail_validation("schedule.kind: predict without refit needs a log-sigmoid schedule");
        fr = evaluate_fit(obs, cfg.require_model(), *law, cfg.numerics.h);
    }
    write_fit(fr, obs, cfg, out, false);
    const double horizon = cfg.has("numerics.horizon") ? cfg.numerics.horizon : 100.0;
    const auto pr = predict(fr, horizon, cfg.numerics.h);
    out.write("prediction.csv", [&](std::ostream& os) {
        write_trajectory(pr.trajectory, fr.schedule, os, {cfg.output.stride, pr.time_origin});
    });
    out.write("events.csv", [&](std::ostream& os) { write_prediction_events(pr, os); }, true);
    std::cerr << "peak " << format_fixed(pr.peak_time + pr.time_origin, 2) << ", extinction "
              << format_fixed(pr.extinction.tau + pr.time_origin, 2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Allee-effect extinction model: exact solution, integrators, tipping and calibration"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    Flags flags;
    using Runner = int (*)(const RunConfig&, Output&);
    const std::pair<const char*, std::pair<const char*, Runner>> commands[] = {
        {"simulate", {"Integrate with the chosen scheme and write the trajectory", run_simulate}},
        {"exact", {"Sample the exact solution and its integrals", run_exact}},
        {"extinct", {"Exact and numerical extinction times", run_extinct}},
        {"converge", {"Convergence of extinction time and state errors in h", run_converge}},
        {"tip-check", {"Classify initial conditions: crossings, outcome, threshold", run_tip_check}},
        {"fit", {"Least-squares calibration against an observation series", run_fit}},
        {"predict", {"Calibrate, then forecast crossing and extinction", run_predict}},
        {"tables", {"Euler versus cubature extinction-time table", run_tables}},
    };
    std::vector<std::pair<CLI::App*, Runner>> subs;
    for (const auto& [name, info] : commands) {
        auto* cmd = app.add_subcommand(name, info.first);
        add_common(*cmd, flags);
        subs.emplace_back(cmd, info.second);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        for (const auto& [cmd, runner] : subs) {
            if (!cmd->parsed()) continue;
            const auto cfg = assemble_config(cmd->get_name(), flags);
            Output out(cfg.output.dir, flags.to_stdout);
            return runner(cfg, out);
        }
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 2;
    }
}
