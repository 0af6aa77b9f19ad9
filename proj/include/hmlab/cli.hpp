#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dynamics.hpp"
#include "fields.hpp"
#include "hierarchy.hpp"
#include "monodromy.hpp"
#include "suites.hpp"

namespace hmlab::cli {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error, 3 boundary violation or instability
enum ExitCode { ok = 0, check_failed = 1, usage_error = 2, run_aborted = 3 };

struct DataConfig {
    DataKind kind = DataKind::twist;
    double amplitude = 0.1;
    std::string input;  // grid CSV; overrides kind when set
};

struct RunConfig {
    std::string command;
    GridSpec grid{};
    bool axis_given = false;
    cplx c{1.0};
    FlowKind flow = FlowKind::hm;
    Convention convention = Convention::real;
    DataConfig data{};
    std::optional<BoundaryPair> boundary;
    unsigned long seed = SuiteOptions{}.seed;
    std::string out = "hmlab_out";
    double end = 1.0;   // evolution length along the flow direction
    double step = 0.0;  // 0: flow default
    int checkpoints = 4;
    int k_max = 2;
    std::vector<cplx> lambdas;
    TransportOptions transport{};
    std::vector<std::string> suites;
    int samples = 100;
    std::map<std::string, double> tolerances;
    bool perturb_r_matrix = false;
    double rhs_perturbation = 0.0;

    double tol(const std::string& key, double fallback) const {
        const auto it = tolerances.find(key);
        return it == tolerances.end() ? fallback : it->second;
    }
};

// ---- config parsing --------------------------------------------------------------

namespace detail {

inline void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError("unknown config key '" + (where.empty() ? k : where + "." + k) + "'");
}

inline cplx to_complex(const json& j, const std::string& where) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError(where + " must be a number or [re, im]");
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + where + key + "' has the wrong type");
    }
}

inline BoundaryParams to_boundary(const json& j, Side side, const std::string& where) {
    only_keys(j, {"alpha", "beta", "gamma", "delta"}, where);
    BoundaryParams p;
    p.side = side;
    if (j.contains("alpha")) p.alpha = to_complex(j["alpha"], where + ".alpha");
    if (j.contains("beta")) p.beta = to_complex(j["beta"], where + ".beta");
    if (j.contains("gamma")) p.gamma = to_complex(j["gamma"], where + ".gamma");
    if (j.contains("delta")) p.delta = to_complex(j["delta"], where + ".delta");
    return p;
}

template <class F>
auto wrap(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

}  // namespace detail

inline const std::set<std::string>& commands() {
    static const std::set<std::string> c{"verify", "simulate", "charges", "scan", "report"};
    return c;
}

inline RunConfig parse_config(const json& j) {
    using detail::get;
    detail::only_keys(j, {"command", "grid", "c", "flow", "convention", "data", "boundary", "seed", "out", "evolution",
                          "charges", "scan", "transport", "suites", "samples", "tolerances", "test_hooks"},
                      "");
    RunConfig r;
    if (j.contains("command")) {
        r.command = get<std::string>(j, "command", "");
        if (!commands().count(r.command)) throw ConfigError("unknown command '" + r.command + "'");
    }
    if (j.contains("flow")) r.flow = detail::wrap("flow", [&] { return parse_flow_kind(get<std::string>(j, "flow", "")); });
    if (j.contains("grid")) {
        const json& g = j["grid"];
        detail::only_keys(g, {"n_points", "half_length", "boundary", "axis"}, "grid");
        if (g.contains("n_points")) r.grid.n_points = get<std::size_t>(g, "n_points", "grid.");
        if (g.contains("half_length")) r.grid.half_length = get<double>(g, "half_length", "grid.");
        if (g.contains("boundary")) {
            const auto b = get<std::string>(g, "boundary", "grid.");
            if (b != "periodic" && b != "open") throw ConfigError("grid.boundary must be 'periodic' or 'open'");
            r.grid.boundary = b == "open" ? Boundary::open : Boundary::periodic;
        }
        if (g.contains("axis")) {
            const auto a = get<std::string>(g, "axis", "grid.");
            if (a != "space" && a != "time") throw ConfigError("grid.axis must be 'space' or 'time'");
            r.grid.axis = a == "time" ? Axis::time : Axis::space;
            r.axis_given = true;
        }
    }
    if (!r.axis_given) r.grid.axis = (r.flow == FlowKind::dual || r.flow == FlowKind::higher) ? Axis::time : Axis::space;
    detail::wrap("grid", [&] { r.grid.validate(); return 0; });
    if (j.contains("c")) r.c = detail::to_complex(j["c"], "c");
    if (std::abs(r.c) == 0.0) throw ConfigError("c must be nonzero");
    if (j.contains("convention")) {
        const auto c = get<std::string>(j, "convention", "");
        if (c != "euclidean" && c != "real") throw ConfigError("convention must be 'euclidean' or 'real'");
        r.convention = c == "euclidean" ? Convention::euclidean : Convention::real;
    }
    if (j.contains("data")) {
        const json& d = j["data"];
        detail::only_keys(d, {"kind", "amplitude", "input"}, "data");
        if (d.contains("kind")) r.data.kind = detail::wrap("data.kind", [&] { return parse_data_kind(get<std::string>(d, "kind", "data.")); });
        if (d.contains("amplitude")) r.data.amplitude = get<double>(d, "amplitude", "data.");
        if (d.contains("input")) r.data.input = get<std::string>(d, "input", "data.");
    }
    if (j.contains("boundary")) {
        const json& b = j["boundary"];
        detail::only_keys(b, {"plus", "minus"}, "boundary");
        if (!b.contains("plus") || !b.contains("minus")) throw ConfigError("boundary needs both 'plus' and 'minus'");
        r.boundary = BoundaryPair{detail::to_boundary(b["plus"], Side::plus, "boundary.plus"),
                                  detail::to_boundary(b["minus"], Side::minus, "boundary.minus")};
    }
    if (j.contains("seed")) r.seed = get<unsigned long>(j, "seed", "");
    if (j.contains("out")) r.out = get<std::string>(j, "out", "");
    if (j.contains("evolution")) {
        const json& e = j["evolution"];
        detail::only_keys(e, {"end", "step", "checkpoints"}, "evolution");
        if (e.contains("end")) r.end = get<double>(e, "end", "evolution.");
        if (e.contains("step")) r.step = get<double>(e, "step", "evolution.");
        if (e.contains("checkpoints")) r.checkpoints = get<int>(e, "checkpoints", "evolution.");
        if (!(r.end >= 0.0) || r.step < 0.0 || r.checkpoints < 1) throw ConfigError("evolution values out of range");
    }
    if (j.contains("charges")) {
        detail::only_keys(j["charges"], {"k_max"}, "charges");
        if (j["charges"].contains("k_max")) r.k_max = get<int>(j["charges"], "k_max", "charges.");
        if (r.k_max < 0 || r.k_max > max_k_order) throw ConfigError("charges.k_max must lie in 0..4");
    }
    if (j.contains("scan")) {
        detail::only_keys(j["scan"], {"lambdas"}, "scan");
        if (j["scan"].contains("lambdas")) {
            const json& l = j["scan"]["lambdas"];
            if (!l.is_array()) throw ConfigError("scan.lambdas must be an array");
            for (const auto& v : l) r.lambdas.push_back(detail::to_complex(v, "scan.lambdas[]"));
        }
    }
    if (j.contains("transport")) {
        const json& t = j["transport"];
        detail::only_keys(t, {"scheme", "substeps"}, "transport");
        if (t.contains("scheme")) {
            const auto s = get<std::string>(t, "scheme", "transport.");
            if (s == "midpoint") r.transport.scheme = Scheme::midpoint;
            else if (s == "midpoint_richardson") r.transport.scheme = Scheme::midpoint_richardson;
            else if (s == "magnus4") r.transport.scheme = Scheme::magnus4;
            else throw ConfigError("transport.scheme must be midpoint, midpoint_richardson or magnus4");
        }
        if (t.contains("substeps")) r.transport.substeps = get<int>(t, "substeps", "transport.");
    }
    if (j.contains("suites")) {
        r.suites = get<std::vector<std::string>>(j, "suites", "");
        for (const auto& s : r.suites) detail::wrap("suites", [&] { return suites::find(s).name; });
    }
    if (j.contains("samples")) r.samples = get<int>(j, "samples", "");
    if (r.samples < 1) throw ConfigError("samples must be positive");
    if (j.contains("tolerances")) r.tolerances = get<std::map<std::string, double>>(j, "tolerances", "");
    if (j.contains("test_hooks")) {
        const json& h = j["test_hooks"];
        detail::only_keys(h, {"perturb_r_matrix", "rhs_perturbation"}, "test_hooks");
        if (h.contains("perturb_r_matrix")) r.perturb_r_matrix = get<bool>(h, "perturb_r_matrix", "test_hooks.");
        if (h.contains("rhs_perturbation")) r.rhs_perturbation = get<double>(h, "rhs_perturbation", "test_hooks.");
    }
    return r;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(j);
}

// ---- output helpers ------------------------------------------------------------------

// write to a temporary name and rename, so readers never see partial files
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << content;
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline std::string charges_csv(const ChargeSeries& q) {
    std::ostringstream os;
    os << std::setprecision(17) << "k,re,im\n";
    for (const auto& [k, v] : q.values) os << k << ',' << v.real() << ',' << v.imag() << '\n';
    return os.str();
}

inline json checks_json(const std::vector<Check>& checks) {
    json a = json::array();
    for (const auto& c : checks)
        a.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"kind", c.at_least ? "min" : "max"},
                     {"passed", c.passed()}});
    return a;
}

// ---- initial data ----------------------------------------------------------------

inline DualGrid initial_grid(const RunConfig& cfg, bool with_sigma) {
    if (!cfg.data.input.empty()) {
        std::ifstream is(cfg.data.input);
        if (!is) throw ConfigError("cannot open data.input " + cfg.data.input);
        if (with_sigma) return read_dual_csv(is, cfg.grid, cfg.c);
        return lift(read_spin_csv(is, cfg.grid, cfg.c));
    }
    if (with_sigma) return make_dual_data(cfg.grid, cfg.c, cfg.data.kind, cfg.seed, cfg.data.amplitude);
    return lift(make_spin_data(cfg.grid, cfg.c, cfg.data.kind, cfg.seed, cfg.data.amplitude));
}

inline Orientation grid_orientation(const RunConfig& cfg) {
    return cfg.grid.axis == Axis::space ? Orientation::space : Orientation::time;
}

inline std::string to_string(Orientation o) { return o == Orientation::space ? "space" : "time"; }

// ---- commands ----------------------------------------------------------------------

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

inline int cmd_verify(const RunConfig& cfg, const std::string& only, Streams io) {
    std::vector<const suites::SuiteEntry*> run;
    if (!only.empty()) {
        try {
            run.push_back(&suites::find(only));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--only: ") + e.what());
        }
    } else if (!cfg.suites.empty()) {
        for (const auto& s : cfg.suites) run.push_back(&suites::find(s));
    } else {
        for (const auto& e : suites::registry())
            if (e.identity) run.push_back(&e);
    }
    json report;
    report["command"] = "verify";
    report["seed"] = cfg.seed;
    report["suites"] = json::array();
    std::vector<std::string> failed;
    for (const auto* e : run) {
        SuiteOptions o;
        o.seed = cfg.seed;
        o.samples = cfg.samples;
        o.tolerances = cfg.tolerances;
        if (cfg.perturb_r_matrix && (e->name == "cybe" || e->name == "reflection" || e->name == "push_through"))
            o.inject = 1e-3;
        if (cfg.rhs_perturbation != 0.0 && (e->name == "conservation_hm" || e->name == "conservation_dual"))
            o.inject = cfg.rhs_perturbation;
        const SuiteResult r = e->run(o);
        io.out << (r.passed() ? "PASS " : "FAIL ") << r.name;
        for (const auto& c : r.checks)
            io.out << "  " << c.name << "=" << std::setprecision(3) << std::scientific << c.value << std::defaultfloat;
        io.out << '\n';
        for (const auto& i : r.info) io.out << "  info: " << i << '\n';
        if (!r.passed()) failed.push_back(r.name);
        report["suites"].push_back(r.to_json());
    }
    report["passed"] = failed.empty();
    write_atomic(std::filesystem::path(cfg.out) / "verify.json", dump(report));
    if (!failed.empty()) {
        io.err << "verify failed in suite(s):";
        for (const auto& f : failed) io.err << ' ' << f;
        io.err << '\n';
        return check_failed;
    }
    return ok;
}

inline int cmd_simulate(const RunConfig& cfg, Streams io) {
    const DualGrid init = initial_grid(cfg, flow_has_sigma(cfg.flow));
    EvolutionConfig e;
    e.flow = cfg.flow;
    e.convention = cfg.convention;
    const double h = cfg.step > 0.0 ? cfg.step : default_step(cfg.flow, cfg.grid);
    e.n_steps = static_cast<long>(std::ceil(cfg.end / h - 1e-9));
    e.step = e.n_steps > 0 ? cfg.end / static_cast<double>(e.n_steps) : h;
    e.monitor_stride = std::max(1L, (e.n_steps + cfg.checkpoints - 1) / cfg.checkpoints);
    e.boundary = cfg.boundary;
    e.rhs_perturbation = cfg.rhs_perturbation;
    e.charge_k_max = cfg.k_max;
    e.scan_lambdas = cfg.lambdas;
    e.transport = cfg.transport;
    e.keep_trajectory = true;
    const std::filesystem::path out(cfg.out);
    EvolutionResult r;
    try {
        r = evolve(init, e);
    } catch (const BoundaryViolation& ex) {
        write_atomic(out / "report.json", dump({{"command", "simulate"}, {"violation", ex.what()}, {"passed", false}}));
        io.err << "boundary violation: " << ex.what() << '\n';
        return run_aborted;
    } catch (const InstabilityError& ex) {
        write_atomic(out / "report.json", dump({{"command", "simulate"}, {"instability", ex.what()}, {"passed", false}}));
        io.err << "instability: " << ex.what() << '\n';
        return run_aborted;
    }
    for (std::size_t i = 0; i < r.trajectory.states.size(); ++i) {
        std::ostringstream os;
        if (flow_has_sigma(cfg.flow))
            write_grid_csv(os, r.trajectory.states[i]);
        else
            write_grid_csv(os, static_cast<const SpinGrid&>(r.trajectory.states[i]));
        std::ostringstream name;
        name << "checkpoint_" << std::setw(4) << std::setfill('0') << i << ".csv";
        write_atomic(out / name.str(), os.str());
    }
    std::vector<Check> checks;
    checks.push_back({"casimir_drift", r.report.casimir_drift(), cfg.tol("simulate.casimir", 1e-8)});
    if (flow_has_sigma(cfg.flow))
        checks.push_back({"dual_casimir_drift", r.report.dual_casimir_drift(), cfg.tol("simulate.casimir", 1e-8)});
    for (const auto& [k, d] : r.report.charge_drifts())
        if (k == 0 || k == 1) checks.push_back({"charge_" + std::to_string(k) + "_drift", d, cfg.tol("simulate.charge", 1e-6)});
    if (!r.report.scan_lambdas.empty())
        checks.push_back({"transfer_drift", r.report.transfer_drift(), cfg.tol("simulate.transfer", 1e-5)});
    if (const auto b = r.report.boundary_residual_max())
        checks.push_back({"boundary_residual", *b, cfg.tol("simulate.boundary", 1e-8)});
    json j = r.report.to_json();
    j["command"] = "simulate";
    j["seed"] = cfg.seed;
    j["checks"] = checks_json(checks);
    bool pass = true;
    for (const auto& c : checks) pass = pass && c.passed();
    j["passed"] = pass;
    write_atomic(out / "report.json", dump(j));
    for (const auto& c : checks)
        io.out << (c.passed() ? "PASS " : "FAIL ") << c.name << ' ' << std::setprecision(17) << c.value << '\n';
    return pass ? ok : check_failed;
}

inline ChargeSeries grid_charges(const RunConfig& cfg, const DualGrid& g) {
    const Orientation o = grid_orientation(cfg);
    if (cfg.grid.boundary == Boundary::open) {
        if (!cfg.boundary) throw ConfigError("open grids need boundary parameters");
        return o == Orientation::space ? open_space_charges(g, cfg.boundary->first, cfg.boundary->second)
                                       : open_time_charges(g, cfg.boundary->first, cfg.boundary->second, cfg.convention);
    }
    return o == Orientation::space ? charges(static_cast<const SpinGrid&>(g), cfg.k_max) : charges(g, cfg.k_max, cfg.convention);
}

inline int cmd_charges(const RunConfig& cfg, Streams io) {
    const Orientation o = grid_orientation(cfg);
    const DualGrid g = initial_grid(cfg, o == Orientation::time);
    const ChargeSeries q = grid_charges(cfg, g);
    const std::string csv = charges_csv(q);
    write_atomic(std::filesystem::path(cfg.out) / ("charges_" + to_string(o) + ".csv"), csv);
    io.out << csv;
    return ok;
}

inline int cmd_scan(const RunConfig& cfg, Streams io) {
    const Orientation o = grid_orientation(cfg);
    const DualGrid g = initial_grid(cfg, o == Orientation::time);
    TransportOptions t = cfg.transport;
    t.convention = o == Orientation::time ? cfg.convention : Convention::euclidean;
    const std::vector<cplx> l = cfg.lambdas.empty() ? default_scan_lambdas(o) : cfg.lambdas;
    const bool open = cfg.grid.boundary == Boundary::open;
    if (open && !cfg.boundary) throw ConfigError("open grids need boundary parameters");
    const TransferScan s = open ? transfer_scan(g, o, l, t, &cfg.boundary->first, &cfg.boundary->second)
                                : transfer_scan(g, o, l, t);
    std::ostringstream os;
    write_scan_csv(os, s);
    write_atomic(std::filesystem::path(cfg.out) / ("scan_" + to_string(o) + ".csv"), os.str());
    io.out << os.str();
    return ok;
}

// merges verify.json and report.json from the output directory into summary.json
inline int cmd_report(const RunConfig& cfg, Streams io) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out);
    if (!fs::is_directory(dir)) throw ConfigError("report: output directory " + dir.string() + " does not exist");
    json summary;
    summary["inputs"] = json::array();
    summary["criteria"] = json::object();
    bool pass = true;
    auto record = [&](const std::string& key, const json& check) {
        const double v = check.at("value").is_number() ? check.at("value").get<double>() : NAN;
        const double t = check.at("threshold").get<double>();
        const bool ok_ = std::isfinite(v) && (check.at("kind") == "min" ? v >= t : v <= t);
        summary["criteria"][key] = ok_;
        pass = pass && ok_;
    };
    for (const char* name : {"verify.json", "report.json"}) {
        const fs::path p = dir / name;
        if (!fs::exists(p)) continue;
        std::ifstream is(p);
        json j;
        try {
            is >> j;
        } catch (const json::parse_error& e) {
            throw std::runtime_error("report: cannot parse " + p.string() + ": " + e.what());
        }
        summary["inputs"].push_back(name);
        if (j.contains("suites"))
            for (const auto& s : j["suites"])
                for (const auto& c : s["checks"]) record("verify." + s["suite"].get<std::string>() + "." + c["name"].get<std::string>(), c);
        if (j.contains("checks"))
            for (const auto& c : j["checks"]) record("simulate." + c["name"].get<std::string>(), c);
        if (j.contains("violation") || j.contains("instability")) {
            summary["criteria"]["simulate.completed"] = false;
            pass = false;
        }
    }
    if (summary["inputs"].empty()) throw ConfigError("report: no verify.json or report.json in " + dir.string());
    summary["passed"] = pass;
    write_atomic(dir / "summary.json", dump(summary));
    for (const auto& [k, v] : summary["criteria"].items()) io.out << (v.get<bool>() ? "PASS " : "FAIL ") << k << '\n';
    return pass ? ok : check_failed;
}

// ---- entry point -------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"hmlab: Heisenberg magnet lab"};
    std::string command, config, only, out_dir;
    std::optional<unsigned long> seed;
    app.add_option("command", command, "verify | simulate | charges | scan | report")
        ->required()
        ->check(CLI::IsMember(commands()));
    app.add_option("--config", config, "JSON run configuration");
    app.add_option("--only", only, "run a single suite (verify)");
    app.add_option("--seed", seed, "random seed (overrides the config)");
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage_error;
    }
    Streams io{out, err};
    try {
        RunConfig cfg = config.empty() ? parse_config(json::object()) : load_config(config);
        if (!cfg.command.empty() && cfg.command != command)
            throw ConfigError("config command '" + cfg.command + "' does not match '" + command + "'");
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.out = out_dir;
        if (command == "verify") return cmd_verify(cfg, only, io);
        if (!only.empty()) throw ConfigError("--only applies to verify");
        if (command == "simulate") return cmd_simulate(cfg, io);
        if (command == "charges") return cmd_charges(cfg, io);
        if (command == "scan") return cmd_scan(cfg, io);
        return cmd_report(cfg, io);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::exception& e) {
        err << "error in " << command << ": " << e.what() << '\n';
        return usage_error;
    }
}

}  // namespace hmlab::cli
