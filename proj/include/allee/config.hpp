#pragma once

// Run configuration: a line-oriented `section.key = value` format with `#`
// comments. Keys are validated against a fixed table so typos are errors, and
// every error names the offending key.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "allee/calibrate.hpp"
#include "allee/error.hpp"
#include "allee/exact.hpp"
#include "allee/integrators.hpp"
#include "allee/io.hpp"
#include "allee/schedule.hpp"
#include "allee/studies.hpp"

namespace allee {

inline constexpr std::array<std::string_view, 44> config_keys = {
    "model.r",          "model.K",          "model.x0",

    "schedule.kind",    "schedule.a",       "schedule.a_hi",      "schedule.a_lo",     "schedule.log_a_hi",
    "schedule.log_a_lo", "schedule.theta",  "schedule.eps",       "schedule.direction", "schedule.amp",
    "schedule.base",    "schedule.period",  "schedule.knots",     "schedule.clamp",

    "numerics.scheme",  "numerics.h",       "numerics.horizon",   "numerics.quad_tol", "numerics.tau_tol",
    "numerics.sampling", "numerics.refine_tau", "numerics.persist_tol",

    "task.kind",        "task.scenario",    "task.times",         "task.dt",           "task.h_list",
    "task.window",      "task.reference",   "task.metric",        "task.x0_list",      "task.data",
    "task.restarts",    "task.max_evals",   "task.seed",          "task.polish",       "task.explore_h",
    "task.refit",

    "output.dir",       "output.stride",    "output.text",
};

inline constexpr std::array<std::string_view, 8> task_kinds = {"simulate", "exact",    "extinct", "converge",
                                                               "tip-check", "fit",     "predict", "tables"};

struct ConfigEntry {
    std::string value;
    std::string origin;  // "file:line" or "--set"
    std::filesystem::path base_dir;  // for relative paths
};

/// Raw key/value pairs before typing and validation.
struct ConfigText {
    std::map<std::string, ConfigEntry> entries;
};

namespace detail {

inline bool known_key(std::string_view key) {
    return std::find(config_keys.begin(), config_keys.end(), key) != config_keys.end();
}

inline std::string strip_quotes(std::string_view v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
        v = v.substr(1, v.size() - 2);
    return std::string(v);
}

inline void check_key_shape(std::string_view key, const std::string& where) {
    const auto dot = key.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == key.size() ||
        key.find('.', dot + 1) != std::string_view::npos)
        fail_validation(where + "key '" + std::string(key) + "' must have the form section.key");
    if (!known_key(key)) fail_validation(where + "unknown key '" + std::string(key) + "'");
}

} // namespace detail

inline ConfigText parse_config_text(std::istream& in, const std::string& name = "config",
                                    const std::filesystem::path& base_dir = {}) {
    ConfigText cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view text = line;
        if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
        text = detail::trim(text);
        if (text.empty()) continue;
        const auto where = name + ":" + std::to_string(line_no) + ": ";
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) detail::fail_validation(where + "expected 'section.key = value'");
        const auto key = detail::trim(text.substr(0, eq));
        detail::check_key_shape(key, where);
        if (cfg.entries.count(std::string(key)))
            detail::fail_validation(where + std::string(key) + ": set more than once");
        cfg.entries[std::string(key)] = {detail::strip_quotes(detail::trim(text.substr(eq + 1))),
                                         name + ":" + std::to_string(line_no), base_dir};
    }
    return cfg;
}

inline ConfigText read_config_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) detail::fail_validation(path + ": cannot open config file");
    return parse_config_text(in, path, std::filesystem::path(path).parent_path());
}

/// Applies one `key=value` override; later overrides win.
inline void apply_override(ConfigText& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        detail::fail_validation("--set " + std::string(assignment) + ": expected key=value");
    const auto key = detail::trim(assignment.substr(0, eq));
    detail::check_key_shape(key, "--set: ");
    cfg.entries[std::string(key)] = {detail::strip_quotes(detail::trim(assignment.substr(eq + 1))), "--set", {}};
}

struct NumericsConfig {
    Scheme scheme = Scheme::cubature;
    double h = 1e-3;
    double horizon = 10.0;
    double quad_tol = default_quad_tol;
    double tau_tol = 1e-9;
    EulerSampling sampling = EulerSampling::next_step;
    bool refine_tau = false;
    double persist_tol = 1e-3;
};

struct TaskConfig {
    std::optional<std::string> kind;
    std::optional<std::string> scenario;
    std::vector<double> times;  // exact: explicit sample times
    double dt = 0.01;           // exact: sample spacing when no times are given
    std::vector<double> h_list{1e-2, 1e-3, 1e-4, 1e-5};
    double window = 10.0;  // state study window (0, T]
    std::optional<Reference> reference;
    StateErrorMetric metric = StateErrorMetric::max_abs;
    std::vector<double> x0_list;
    std::optional<std::filesystem::path> data;
    FitConfig fit;
    bool refit = true;  // predict: fit first, or use the model and schedule blocks as fitted values
};

struct OutputConfig {
    std::filesystem::path dir = "out";
    std::size_t stride = 1;
    bool text = true;  // also write human-readable tables
};

struct RunConfig {
    std::optional<ModelParams> model;
    std::optional<AlleeSchedule> schedule;
    NumericsConfig numerics;
    TaskConfig task;
    OutputConfig output;
    std::set<std::string> given;  // keys set explicitly

    [[nodiscard]] bool has(std::string_view key) const { return given.count(std::string(key)) > 0; }

    [[nodiscard]] const ModelParams& require_model() const {
        if (!model) detail::fail_validation("missing required key model.r (model block: model.r, model.K, model.x0)");
        return *model;
    }
    [[nodiscard]] const AlleeSchedule& require_schedule() const {
        if (!schedule) detail::fail_validation("missing required key schedule.kind");
        return *schedule;
    }
};

namespace detail {

class ConfigReader {
public:
    explicit ConfigReader(const ConfigText& text) : text_(text) {}

    [[nodiscard]] bool has(std::string_view key) const { return text_.entries.count(std::string(key)) > 0; }

    [[nodiscard]] const ConfigEntry& entry(std::string_view key) const {
        const auto it = text_.entries.find(std::string(key));
        if (it == text_.entries.end()) fail_validation("missing required key " + std::string(key));
        return it->second;
    }

    [[noreturn]] void fail(std::string_view key, const std::string& msg) const {
        const auto it = text_.entries.find(std::string(key));
        const std::string origin = it == text_.entries.end() ? "" : it->second.origin + ": ";
        fail_validation(origin + std::string(key) + ": " + msg);
    }

    [[nodiscard]] double number(std::string_view key) const {
        const auto& e = entry(key);
        const auto v = parse_double(e.value);
        if (!v || !std::isfinite(*v)) fail(key, "expected a finite number, got '" + e.value + "'");
        return *v;
    }

    [[nodiscard]] double positive(std::string_view key) const {
        const double v = number(key);
        if (!(v > 0.0)) fail(key, "must be positive (got " + entry(key).value + ")");
        return v;
    }

    [[nodiscard]] std::uint64_t count(std::string_view key, std::uint64_t min) const {
        const auto& e = entry(key);
        std::uint64_t v = 0;
        const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
        if (res.ec != std::errc{} || res.ptr != e.value.data() + e.value.size())
            fail(key, "expected a non-negative integer, got '" + e.value + "'");
        if (v < min) fail(key, "must be at least " + std::to_string(min) + " (got " + e.value + ")");
        return v;
    }

    [[nodiscard]] bool flag(std::string_view key) const {
        const auto& e = entry(key);
        if (e.value == "true") return true;
        if (e.value == "false") return false;
        fail(key, "expected true or false, got '" + e.value + "'");
    }

    [[nodiscard]] std::string choice(std::string_view key, std::initializer_list<std::string_view> allowed) const {
        const auto& e = entry(key);
        std::string list;
        for (auto a : allowed) {
            if (e.value == a) return e.value;
            list += (list.empty() ? "" : ", ") + std::string(a);
        }
        fail(key, "expected one of " + list + ", got '" + e.value + "'");
    }

    [[nodiscard]] std::vector<double> numbers(std::string_view key) const {
        const auto& e = entry(key);
        std::vector<double> out;
        for (auto cell : split(e.value, ',')) {
            const auto v = parse_double(cell);
            if (!v || !std::isfinite(*v)) fail(key, "malformed list element '" + std::string(cell) + "'");
            out.push_back(*v);
        }
        return out;
    }

    [[nodiscard]] std::filesystem::path path(std::string_view key) const {
        const auto& e = entry(key);
        std::filesystem::path p(e.value);
        if (p.is_relative() && !e.base_dir.empty()) p = e.base_dir / p;
        return p;
    }

private:
    const ConfigText& text_;
};

inline Direction read_direction(const ConfigReader& rd) {
    return rd.choice("schedule.direction", {"increasing", "decreasing"}) == "increasing" ? Direction::increasing
                                                                                          : Direction::decreasing;
}

inline std::vector<Knot> read_knots(const ConfigReader& rd) {
    const auto& e = rd.entry("schedule.knots");
    std::vector<Knot> knots;
    for (auto cell : split(e.value, ',')) {
        const auto colon = cell.find(':');
        std::optional<double> t;
        std::optional<double> a;
        if (colon != std::string_view::npos) {
            t = parse_double(cell.substr(0, colon));
            a = parse_double(cell.substr(colon + 1));
        }
        if (!t || !a) rd.fail("schedule.knots", "expected 't:a' pairs separated by commas, got '" + std::string(cell) + "'");
        knots.push_back({*t, *a});
    }
    return knots;
}

inline AlleeSchedule read_schedule(const ConfigReader& rd) {
    const auto kind =
        rd.choice("schedule.kind", {"constant", "sigmoid", "log-sigmoid", "oscillatory", "tabulated"});
    std::vector<std::string_view> used{"schedule.kind"};
    auto make = [&]() -> AlleeSchedule::Law {
        if (kind == "constant") {
            used.push_back("schedule.a");
            return Constant{rd.number("schedule.a")};
        }
        if (kind == "sigmoid") {
            used.insert(used.end(), {"schedule.a_hi", "schedule.a_lo", "schedule.theta", "schedule.eps",
                                     "schedule.direction"});
            return Sigmoid{rd.number("schedule.a_hi"), rd.number("schedule.a_lo"), rd.number("schedule.theta"),
                           rd.number("schedule.eps"), read_direction(rd)};
        }
        if (kind == "log-sigmoid") {
            used.insert(used.end(), {"schedule.log_a_hi", "schedule.log_a_lo", "schedule.theta", "schedule.eps",
                                     "schedule.direction"});
            return LogSigmoid{rd.number("schedule.log_a_hi"), rd.number("schedule.log_a_lo"),
                              rd.number("schedule.theta"), rd.number("schedule.eps"), read_direction(rd)};
        }
        if (kind == "oscillatory") {
            used.insert(used.end(), {"schedule.amp", "schedule.base", "schedule.period"});
            return Oscillatory{rd.number("schedule.amp"), rd.number("schedule.base"), rd.number("schedule.period")};
        }
        used.insert(used.end(), {"schedule.knots", "schedule.clamp"});
        return Tabulated{read_knots(rd), rd.has("schedule.clamp") ? rd.flag("schedule.clamp") : true};
    };
    AlleeSchedule::Law law = make();
    for (auto key : config_keys) {
        if (!key.starts_with("schedule.") || !rd.has(key)) continue;
        if (std::find(used.begin(), used.end(), key) == used.end())
            rd.fail(key, "not used by schedule.kind = " + kind);
    }
    try {
        return AlleeSchedule(std::move(law));
    } catch (const ValidationError& e) {
        rd.fail("schedule.kind", e.what());
    }
}

} // namespace detail

/// Types and validates raw entries. Blocks are optional as a whole, but a
/// block that is present must be complete.
inline RunConfig build_config(const ConfigText& text) {
    const detail::ConfigReader rd(text);
    RunConfig cfg;
    for (const auto& [key, entry] : text.entries) cfg.given.insert(key);

    auto any_in = [&](std::string_view section) {
        for (const auto& [key, entry] : text.entries)
            if (key.starts_with(section)) return true;
        return false;
    };

    // numerics
    auto& nu = cfg.numerics;
    if (rd.has("numerics.scheme")) {
        const auto s = rd.choice("numerics.scheme", {"euler", "cubature", "nominal-euler"});
        nu.scheme = s == "euler" ? Scheme::euler : s == "cubature" ? Scheme::cubature : Scheme::nominal_euler;
    }
    if (rd.has("numerics.h")) nu.h = rd.positive("numerics.h");
    if (rd.has("numerics.horizon")) nu.horizon = rd.positive("numerics.horizon");
    if (nu.horizon < nu.h) rd.fail(rd.has("numerics.horizon") ? "numerics.horizon" : "numerics.h", "horizon must be at least one step h");
    if (rd.has("numerics.quad_tol")) nu.quad_tol = rd.positive("numerics.quad_tol");
    if (rd.has("numerics.tau_tol")) nu.tau_tol = rd.positive("numerics.tau_tol");
    if (rd.has("numerics.sampling"))
        nu.sampling = rd.choice("numerics.sampling", {"next-step", "current-step"}) == "next-step"
                          ? EulerSampling::next_step
                          : EulerSampling::current_step;
    if (rd.has("numerics.refine_tau")) nu.refine_tau = rd.flag("numerics.refine_tau");
    if (rd.has("numerics.persist_tol")) nu.persist_tol = rd.positive("numerics.persist_tol");

    // model
    if (any_in("model.")) {
        const double r = rd.positive("model.r");
        const double K = rd.positive("model.K");
        const double x0 = rd.number("model.x0");
        if (x0 < 0.0 || x0 > K) rd.fail("model.x0", "must lie in [0, model.K]");
        cfg.model = ModelParams{r, K, x0};
    }

    // schedule
    if (any_in("schedule.")) {
        cfg.schedule = detail::read_schedule(rd);
        if (cfg.model) {
            const auto check = validate(*cfg.schedule, cfg.model->K, nu.horizon);
            if (!check) rd.fail("schedule.kind", check.message);
        }
    }

    // task
    auto& tk = cfg.task;
    if (rd.has("task.kind")) {
        const auto& v = rd.entry("task.kind").value;
        if (std::find(task_kinds.begin(), task_kinds.end(), v) == task_kinds.end())
            rd.fail("task.kind", "unknown task '" + v + "'");
        tk.kind = v;
    }
    if (rd.has("task.scenario")) {
        const auto& name = rd.entry("task.scenario").value;
        try {
            (void)find_scenario(name);
        } catch (const ValidationError& e) {
            rd.fail("task.scenario", e.what());
        }
        tk.scenario = name;
    }
    if (rd.has("task.times")) {
        tk.times = rd.numbers("task.times");
        for (std::size_t i = 0; i < tk.times.size(); ++i)
            if (tk.times[i] < 0.0 || (i > 0 && tk.times[i] < tk.times[i - 1]))
                rd.fail("task.times", "times must be non-negative and ascending");
    }
    if (rd.has("task.dt")) tk.dt = rd.positive("task.dt");
    if (rd.has("task.h_list")) {
        tk.h_list = rd.numbers("task.h_list");
        for (std::size_t i = 0; i < tk.h_list.size(); ++i)
            if (!(tk.h_list[i] > 0.0) || (i > 0 && !(tk.h_list[i] < tk.h_list[i - 1])))
                rd.fail("task.h_list", "step sizes must be positive and strictly decreasing");
    }
    if (rd.has("task.window")) tk.window = rd.positive("task.window");
    if (rd.has("task.reference"))
        tk.reference = rd.choice("task.reference", {"closed-form", "exact-engine"}) == "closed-form"
                           ? Reference::closed_form
                           : Reference::exact_engine;
    if (rd.has("task.metric"))
        tk.metric = rd.choice("task.metric", {"max", "mean"}) == "max" ? StateErrorMetric::max_abs
                                                                        : StateErrorMetric::mean_abs;
    if (rd.has("task.x0_list")) {
        tk.x0_list = rd.numbers("task.x0_list");
        if (tk.x0_list.empty()) rd.fail("task.x0_list", "must not be empty");
    }
    if (rd.has("task.data")) {
        tk.data = rd.path("task.data");
        if (!std::filesystem::is_regular_file(*tk.data))
            rd.fail("task.data", "file '" + tk.data->string() + "' does not exist");
    }
    if (rd.has("task.restarts")) tk.fit.restarts = rd.count("task.restarts", 1);
    if (rd.has("task.max_evals")) tk.fit.max_evals = rd.count("task.max_evals", 1);
    if (rd.has("task.seed")) tk.fit.seed = rd.count("task.seed", 0);
    if (rd.has("task.polish")) tk.fit.polish = rd.count("task.polish", 1);
    if (rd.has("task.explore_h")) tk.fit.explore_h = rd.positive("task.explore_h");
    if (rd.has("numerics.h") && (tk.kind == "fit" || tk.kind == "predict")) tk.fit.h = nu.h;
    if (rd.has("task.refit")) tk.refit = rd.flag("task.refit");

    // output
    if (rd.has("output.dir")) {
        cfg.output.dir = rd.path("output.dir");
        if (cfg.output.dir.empty()) rd.fail("output.dir", "must not be empty");
    }
    if (rd.has("output.stride")) cfg.output.stride = rd.count("output.stride", 1);
    if (rd.has("output.text")) cfg.output.text = rd.flag("output.text");
    return cfg;
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    auto text = read_config_text(path);
    for (const auto& o : overrides) apply_override(text, o);
    return build_config(text);
}

inline RunConfig parse_config(std::string_view source, const std::vector<std::string>& overrides = {}) {
    std::istringstream in{std::string(source)};
    auto text = parse_config_text(in);
    for (const auto& o : overrides) apply_override(text, o);
    return build_config(text);
}

} // namespace allee
