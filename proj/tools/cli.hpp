#pragma once

// Command-line front end. Kept in a header so the unit tests can drive it
// in-process; tools/cirexp.cpp only forwards argv.

#include <cirexp/cirexp.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cirexp::cli {

using nlohmann::json;

/// Defaults of every config key. `threads`, `batch`, `out` and `config` only
/// affect scheduling or plumbing and are never echoed.
inline json default_config()
{
    return json{
        {"k", 0.4},        {"theta", 0.12},   {"xi", 0.3},       {"y0", 0.12},
        {"lambda", -1.0},  {"mu", 2.0},       {"heston", false}, {"omega", 2.0},
        {"rho", 0.5},      {"S0", 1.0},       {"r", 0.0},        {"scheme", "bem"},
        {"T", {1.0}},      {"steps", 0},      {"dt", 0.02},      {"paths", 100000},
        {"seed", 0},       {"format", ""},    {"axis", "rho"},   {"from", -1.0},
        {"to", 1.0},       {"points", 101},   {"estimator", "conditional"},
        {"antithetic", false}, {"suite", "all"},
    };
}

/// Config document from a file: plain JSON, a JSON output of this tool (its
/// "config" member), or a CSV output (its "# config: " header line).
inline json read_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const std::string marker = "# config: ";
    std::istringstream lines(text);
    for (std::string ln; std::getline(lines, ln);)
        if (ln.rfind(marker, 0) == 0)
            return json::parse(ln.substr(marker.size()));
    json doc = json::parse(text);
    if (doc.contains("config") && doc["config"].is_object())
        return doc["config"];
    return doc;
}

inline json real(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    return x;
}

struct Output {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    json document; // used instead of the table when non-null
};

class Runner {
public:
    explicit Runner(json cfg) : cfg_(std::move(cfg)) {}

    CirParams cir() const { return {num("k"), num("theta"), num("xi"), num("y0")}; }

    FunctionalCoeffs coeffs() const
    {
        if (cfg_["heston"].get<bool>())
            return moment_coeffs(num("omega"), num("rho"));
        return {num("lambda"), num("mu")};
    }

    std::vector<double> maturities() const
    {
        std::vector<double> t = cfg_["T"].get<std::vector<double>>();
        if (t.empty())
            throw std::invalid_argument("--T needs at least one maturity");
        for (double x : t)
            if (!(x > 0.0))
                throw std::invalid_argument("maturities must be > 0");
        return t;
    }

    Output explosion() const
    {
        const CirParams p = cir();
        const FunctionalCoeffs f = coeffs();
        json doc;
        doc["lambda"] = f.lambda();
        doc["mu"] = f.mu();
        doc["delta"] = f.delta();
        const ExplosionTime exact = exact_explosion_time(p, f);
        doc["exact"] = real(exact.value);
        json cases{{"exact", exact.case_label}};
        if (exact.aux)
            doc[exact.case_label == "real-roots" ? "nu" : "nu_hat"] = *exact.aux;
        json eta = json::object();
        for (SchemeKind kind : kAllSchemes) {
            const std::string name(to_string(kind));
            const ExplosionTime b = scheme_explosion_bound(kind, p, f);
            doc[name] = real(b.value);
            cases[name] = b.case_label;
            json intervals = json::array();
            if (f.delta() > 0.0) {
                for (double t : maturities()) {
                    const EtaInterval iv = eta_feasible(kind, p, f, t);
                    intervals.push_back({{"T", t},
                                         {"empty", iv.empty},
                                         {"lower", iv.empty ? json(nullptr) : real(iv.lower)},
                                         {"upper", iv.empty ? json(nullptr) : real(iv.upper)},
                                         {"closed", iv.lemma == EtaLemma::Truncation}});
                }
            }
            eta[name] = intervals;
        }
        doc["cases"] = cases;
        doc["eta"] = eta;
        if (cfg_["heston"].get<bool>() && num("omega") > 1.0) {
            const HestonParams h(num("S0"), num("r"), p, num("rho"));
            doc["critical_rho"] = critical_correlation(h, num("omega")).value;
        }
        return {{}, {}, doc};
    }

    Output sweep() const
    {
        const std::string axis = cfg_["axis"].get<std::string>();
        const int points = cfg_["points"].get<int>();
        if (points < 1)
            throw std::invalid_argument("--points must be >= 1");
        const double from = num("from"), to = num("to");
        if (!std::isfinite(from) || !std::isfinite(to) || (points > 1 && !(to > from)))
            throw std::invalid_argument("sweep range needs finite from < to");
        if (axis != "omega" && axis != "rho" && axis != "k" && axis != "xi")
            throw std::invalid_argument("--axis must be one of omega, rho, k, xi");

        Output out;
        out.columns = {"axis_value", "exact"};
        for (SchemeKind kind : kAllSchemes)
            out.columns.emplace_back(to_string(kind));
        for (int i = 0; i < points; ++i) {
            const double v = points == 1 ? from : from + (to - from) * i / (points - 1);
            double omega = num("omega"), rho = num("rho");
            CirParams p = cir();
            if (axis == "omega")
                omega = v;
            else if (axis == "rho")
                rho = v;
            else if (axis == "k")
                p = p.with_k(v);
            else
                p = p.with_xi(v);
            if (std::abs(rho) > 1.0)
                throw std::invalid_argument("rho must lie in [-1, 1]");
            const FunctionalCoeffs f = moment_coeffs(omega, rho);
            std::vector<double> row{v, exact_explosion_time(p, f).value};
            for (SchemeKind kind : kAllSchemes)
                row.push_back(scheme_explosion_bound(kind, p, f).value);
            out.rows.push_back(std::move(row));
        }
        return out;
    }

    Output moment(unsigned threads, std::size_t batch) const
    {
        const CirParams p = cir();
        std::vector<double> ts = maturities();
        const double horizon = *std::max_element(ts.begin(), ts.end());
        const int steps_opt = cfg_["steps"].get<int>();
        int steps;
        if (steps_opt > 0) {
            steps = steps_opt;
        } else {
            const double dt = num("dt");
            if (!(dt > 0.0))
                throw std::invalid_argument("--dt must be > 0");
            steps = static_cast<int>(std::llround(horizon / dt));
            if (steps < 1 || std::abs(steps * dt - horizon) > 1e-9 * horizon)
                throw std::invalid_argument("the largest maturity must be a multiple of --dt");
        }
        const GridSpec g(horizon, steps);

        McConfig mc;
        mc.paths = cfg_["paths"].get<std::size_t>();
        mc.seed = cfg_["seed"].get<std::uint64_t>();
        mc.threads = threads;
        mc.batch_size = batch;
        mc.antithetic = cfg_["antithetic"].get<bool>();
        mc.record_grid = ts;

        const std::string scheme = cfg_["scheme"].get<std::string>();
        const bool heston = cfg_["heston"].get<bool>();
        McResult res;
        if (scheme == "exact") {
            McResult raw = estimate_exact_functional(p, coeffs(), horizon, steps, mc);
            if (heston) {
                const double omega = num("omega"), s0 = num("S0"), r = num("r");
                for (std::size_t j = 0; j < raw.at_records.size(); ++j)
                    raw.at_records[j] = cirexp::detail::scale_estimate(
                        raw.at_records[j], omega * (std::log(s0) + r * raw.record_times[j]));
            }
            res = raw;
        } else {
            const auto kind = parse_scheme(scheme);
            if (!kind)
                throw std::invalid_argument("unknown scheme '" + scheme + "'");
            if (heston) {
                const std::string est = cfg_["estimator"].get<std::string>();
                if (est != "conditional" && est != "joint")
                    throw std::invalid_argument("--estimator must be conditional or joint");
                const HestonParams h(num("S0"), num("r"), p, num("rho"));
                res = estimate_heston_moment(h, num("omega"), *kind, g, mc,
                                             est == "joint" ? HestonEstimator::Joint
                                                            : HestonEstimator::Conditional);
            } else {
                res = estimate_exp_functional(*kind, p, coeffs(), g, mc);
            }
        }

        Output out;
        out.columns = {"T", "estimate", "stderr", "saturated_paths", "max_log_weight"};
        for (std::size_t j = 0; j < ts.size(); ++j) {
            const McEstimate& e = res.at_records[j];
            out.rows.push_back({ts[j], e.mean, e.std_error, static_cast<double>(e.saturated_paths),
                                e.max_log_weight});
        }
        return out;
    }

    Output verify(bool& all_ok) const
    {
        const std::string suite = cfg_["suite"].get<std::string>();
        std::vector<std::string> names;
        if (suite == "all")
            for (auto n : verify::suite_names())
                names.emplace_back(n);
        else
            names.push_back(suite);
        json doc;
        json reports = json::array();
        all_ok = true;
        for (const auto& n : names) {
            const verify::Report r = verify::run_suite(n);
            all_ok = all_ok && r.ok();
            reports.push_back({{"suite", r.suite},
                               {"total", r.total},
                               {"passed", r.passed},
                               {"ok", r.ok()},
                               {"failures", r.failures}});
        }
        doc["suites"] = reports;
        doc["ok"] = all_ok;
        return {{}, {}, doc};
    }

private:
    double num(const char* key) const { return cfg_.at(key).get<double>(); }

    json cfg_;
};

inline std::string render(const Output& o, const std::string& command, const json& echo,
                          const std::string& format)
{
    if (format == "json") {
        json doc = o.document.is_null() ? json::object() : o.document;
        if (o.document.is_null()) {
            doc["columns"] = o.columns;
            json rows = json::array();
            for (const auto& r : o.rows) {
                json row = json::object();
                for (std::size_t i = 0; i < r.size(); ++i)
                    row[o.columns[i]] = real(r[i]);
                rows.push_back(row);
            }
            doc["rows"] = rows;
        }
        doc["cirexp"] = kVersion;
        doc["command"] = command;
        doc["config"] = echo;
        return doc.dump(2) + "\n";
    }

    csv::Table t;
    t.comments = {std::string("cirexp ") + kVersion, "command: " + command, "config: " + echo.dump()};
    if (!o.document.is_null()) {
        // flatten a report document into key,value rows
        t.columns = {"key", "value"};
        const json flat = o.document.flatten();
        for (const auto& [key, value] : flat.items()) {
            std::string v;
            if (value.is_number_float())
                v = csv::format_real(value.get<double>());
            else if (value.is_string())
                v = value.get<std::string>();
            else
                v = value.dump();
            t.add_row({key, v});
        }
    } else {
        t.columns = o.columns;
        for (const auto& r : o.rows) {
            std::vector<std::string> cells;
            for (std::size_t i = 0; i < r.size(); ++i) {
                const bool integral = o.columns[i] == "saturated_paths";
                cells.push_back(integral ? std::to_string(static_cast<long long>(r[i])) : csv::format_real(r[i]));
            }
            t.add_row(std::move(cells));
        }
    }
    return t.str();
}

/// Entry point. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Moment explosion of CIR exponential functionals and their Euler discretizations", "cirexp"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    json cfg = default_config();
    std::map<std::string, CLI::Option*> given;
    double k, theta, xi, y0, lambda, mu, omega, rho, s0, r, dt, from, to;
    int steps, points;
    std::size_t paths = 0, batch = 16384;
    std::uint64_t seed;
    unsigned threads = 0;
    std::vector<double> maturities;
    std::string scheme, format, axis, estimator, suite, config_path, out_path;
    bool heston = false, antithetic = false;

    given["k"] = app.add_option("--k", k, "mean reversion speed");
    given["theta"] = app.add_option("--theta", theta, "long-run mean");
    given["xi"] = app.add_option("--xi", xi, "volatility of the CIR process");
    given["y0"] = app.add_option("--y0", y0, "initial value");
    given["lambda"] = app.add_option("--lambda", lambda, "coefficient of int y dt");
    given["mu"] = app.add_option("--mu", mu, "coefficient of int sqrt(y) dW");
    given["heston"] = app.add_flag("--heston", heston, "take lambda, mu from the Heston moment (omega, rho)");
    given["omega"] = app.add_option("--omega", omega, "moment order");
    given["rho"] = app.add_option("--rho", rho, "spot/variance correlation");
    given["S0"] = app.add_option("--S0", s0, "initial spot");
    given["r"] = app.add_option("--r", r, "interest rate");
    given["scheme"] = app.add_option("--scheme", scheme, "pte|fte|abs|ref|sym|bem|exact");
    given["T"] = app.add_option("--T", maturities, "maturities")->delimiter(',');
    given["steps"] = app.add_option("--steps", steps, "time steps up to the largest maturity");
    given["dt"] = app.add_option("--dt", dt, "time step (ignored when --steps is set)");
    given["paths"] = app.add_option("--paths", paths, "Monte Carlo paths");
    given["seed"] = app.add_option("--seed", seed, "master seed");
    given["format"] = app.add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    given["axis"] = app.add_option("--axis", axis, "sweep axis: omega|rho|k|xi");
    given["from"] = app.add_option("--from", from, "sweep start");
    given["to"] = app.add_option("--to", to, "sweep end");
    given["points"] = app.add_option("--points", points, "sweep points");
    given["estimator"] = app.add_option("--estimator", estimator, "Heston estimator: conditional|joint");
    given["antithetic"] = app.add_flag("--antithetic", antithetic, "antithetic normals");
    given["suite"] = app.add_option("--suite", suite, "riccati|eta|monotone|bounds|all");
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    app.add_option("--batch", batch, "paths per work item");
    app.add_option("--config", config_path, "JSON config or a previous output file");
    app.add_option("--out", out_path, "output file (default stdout)");

    auto* c_explosion = app.add_subcommand("explosion", "critical times, scheme bounds and eta intervals");
    auto* c_sweep = app.add_subcommand("sweep", "critical times along one parameter (Heston mapping)");
    auto* c_moment = app.add_subcommand("moment", "Monte Carlo estimates at each maturity");
    auto* c_verify = app.add_subcommand("verify", "built-in property suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (!config_path.empty()) {
            const json file = read_config_file(config_path);
            if (!file.is_object())
                throw std::runtime_error("config file must hold a JSON object");
            for (const auto& [key, value] : file.items())
                if (cfg.contains(key))
                    cfg[key] = value;
        }
        auto set = [&](const char* key, auto value) {
            if (given.at(key)->count() > 0)
                cfg[key] = value;
        };
        set("k", k);
        set("theta", theta);
        set("xi", xi);
        set("y0", y0);
        set("lambda", lambda);
        set("mu", mu);
        set("heston", heston);
        set("omega", omega);
        set("rho", rho);
        set("S0", s0);
        set("r", r);
        set("scheme", scheme);
        set("T", maturities);
        set("steps", steps);
        set("dt", dt);
        set("paths", paths);
        set("seed", seed);
        set("format", format);
        set("axis", axis);
        set("from", from);
        set("to", to);
        set("points", points);
        set("estimator", estimator);
        set("antithetic", antithetic);
        set("suite", suite);

        if (cfg["format"].get<std::string>().empty())
            cfg["format"] = c_explosion->parsed() || c_verify->parsed() ? "json" : "csv";
        const Runner runner(cfg);
        std::string command;
        Output result;
        bool ok = true;
        if (c_explosion->parsed()) {
            command = "explosion";
            result = runner.explosion();
        } else if (c_sweep->parsed()) {
            command = "sweep";
            result = runner.sweep();
        } else if (c_moment->parsed()) {
            command = "moment";
            result = runner.moment(threads, batch);
        } else if (c_verify->parsed()) {
            command = "verify";
            result = runner.verify(ok);
        }

        const std::string text = render(result, command, cfg, cfg["format"].get<std::string>());
        if (out_path.empty()) {
            out << text;
        } else {
            std::ofstream f(out_path, std::ios::binary);
            if (!f)
                throw std::runtime_error("cannot write '" + out_path + "'");
            f << text;
        }
        return ok ? 0 : 1;
    } catch (const std::exception& e) {
        err << "cirexp: " << e.what() << "\n";
        return 2;
    }
}

} // namespace cirexp::cli
