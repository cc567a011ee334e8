// besq: command-line surface over the library. Subcommands:
//   project   -- evaluate f, f_x and the PDE residual on a (t, x) grid (CSV)
//   simulate  -- exact squared Bessel paths with Z and local time (CSV)
//   verify    -- run one verification experiment, emit a JSON report
// Exit codes: 0 pass, 1 fail, 2 usage/validation error, 3 inconclusive,
// 4 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "besq/verify.hpp"

namespace {

struct Options {
    double n = 4.0, m = 1.0;
    std::vector<double> ts, xs, a_values;
    double x0 = 1.0;
    long long paths = -1, steps = -1;  // -1: experiment-specific default
    std::uint64_t seed = 12345;
    double tol = -1.0;   // quadrature rel_tol override
    double eps = -1.0;   // occupation-estimator epsilon override
    int workers = 1;
    std::string out, config;
    double kappa = 2.0, s_level = 0.5, z_rate = 1.0, window = 1.0, tail = 2000.0;
    int windows = 10;
    std::string experiment;
};

struct Registered {
    CLI::App* cmd;
    std::map<std::string, CLI::Option*> opts;
};

Registered add_common(CLI::App& app, const std::string& name, const std::string& desc,
                      Options& o) {
    Registered r;
    r.cmd = app.add_subcommand(name, desc);
    auto opt = [&r](const std::string& key, CLI::Option* p) { r.opts[key] = p; };
    opt("n", r.cmd->add_option("--n", o.n, "dimension n (>= 2)"));
    opt("m", r.cmd->add_option("--m", o.m, "dimension m (0 <= m < n)"));
    opt("t", r.cmd->add_option("--t", o.ts, "time grid (comma separated)")->delimiter(','));
    opt("x", r.cmd->add_option("--x", o.xs, "space grid (comma separated)")->delimiter(','));
    opt("x0", r.cmd->add_option("--x0", o.x0, "initial value of X"));
    opt("paths", r.cmd->add_option("--paths", o.paths, "number of Monte Carlo paths"));
    opt("steps", r.cmd->add_option("--steps", o.steps, "grid steps per unit experiment"));
    opt("seed", r.cmd->add_option("--seed", o.seed, "RNG seed"));
    opt("tol", r.cmd->add_option("--tol", o.tol, "quadrature relative tolerance"));
    opt("eps", r.cmd->add_option("--eps", o.eps, "occupation local-time epsilon"));
    opt("workers", r.cmd->add_option("--workers", o.workers, "worker threads"));
    opt("out", r.cmd->add_option("--out", o.out, "output file (default stdout)"));
    opt("config", r.cmd->add_option("--config", o.config, "JSON config file (flags override)"));
    opt("kappa", r.cmd->add_option("--kappa", o.kappa, "stopping level 1/kappa"));
    opt("s", r.cmd->add_option("--s", o.s_level, "local-time level s"));
    opt("z", r.cmd->add_option("--z", o.z_rate, "Laplace rate z"));
    opt("window", r.cmd->add_option("--window", o.window, "laplace window length"));
    opt("windows", r.cmd->add_option("--windows", o.windows, "fine-grid windows"));
    opt("tail", r.cmd->add_option("--tail", o.tail, "coarse-tail horizon for laplace"));
    opt("a", r.cmd->add_option("--a", o.a_values, "compensator levels")->delimiter(','));
    return r;
}

// Config file values fill in everything the command line did not set.
void merge_config(const Registered& reg, Options& o) {
    if (o.config.empty()) return;
    std::ifstream in(o.config);
    if (!in) throw std::domain_error("config: cannot open " + o.config);
    nlohmann::json cfg = nlohmann::json::parse(in);
    auto unset = [&reg](const char* key) {
        auto it = reg.opts.find(key);
        return it != reg.opts.end() && it->second->count() == 0;
    };
    if (cfg.contains("n") && unset("n")) o.n = cfg["n"].get<double>();
    if (cfg.contains("m") && unset("m")) o.m = cfg["m"].get<double>();
    if (cfg.contains("t") && unset("t")) o.ts = cfg["t"].get<std::vector<double>>();
    if (cfg.contains("x") && unset("x")) o.xs = cfg["x"].get<std::vector<double>>();
    if (cfg.contains("x0") && unset("x0")) o.x0 = cfg["x0"].get<double>();
    if (cfg.contains("paths") && unset("paths")) o.paths = cfg["paths"].get<long long>();
    if (cfg.contains("steps") && unset("steps")) o.steps = cfg["steps"].get<long long>();
    if (cfg.contains("seed") && unset("seed")) o.seed = cfg["seed"].get<std::uint64_t>();
    if (cfg.contains("tol") && unset("tol")) o.tol = cfg["tol"].get<double>();
    if (cfg.contains("eps") && unset("eps")) o.eps = cfg["eps"].get<double>();
    if (cfg.contains("workers") && unset("workers")) o.workers = cfg["workers"].get<int>();
    if (cfg.contains("out") && unset("out")) o.out = cfg["out"].get<std::string>();
    if (cfg.contains("kappa") && unset("kappa")) o.kappa = cfg["kappa"].get<double>();
    if (cfg.contains("s") && unset("s")) o.s_level = cfg["s"].get<double>();
    if (cfg.contains("z") && unset("z")) o.z_rate = cfg["z"].get<double>();
    if (cfg.contains("window") && unset("window")) o.window = cfg["window"].get<double>();
    if (cfg.contains("windows") && unset("windows")) o.windows = cfg["windows"].get<int>();
    if (cfg.contains("tail") && unset("tail")) o.tail = cfg["tail"].get<double>();
    if (cfg.contains("a") && unset("a")) o.a_values = cfg["a"].get<std::vector<double>>();
}

class Output {
  public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw std::domain_error("cannot open output file: " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

  private:
    std::ofstream file_;
};

void csv_cell(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

besq::QuadratureSpec quad_from(const Options& o) {
    besq::QuadratureSpec spec;
    if (o.tol > 0.0) spec.rel_tol = o.tol;
    return spec;
}

int run_project(const Options& o) {
    besq::ProjectionContext ctx(besq::ModelParams(o.n, o.m), quad_from(o));
    const std::vector<double> ts = o.ts.empty() ? std::vector<double>{1.0} : o.ts;
    const std::vector<double> xs = o.xs.empty() ? std::vector<double>{1.0} : o.xs;
    Output out(o.out);
    std::ostream& os = out.stream();
    os << "t,x,f,f_x,pde_residual\n";
    for (double t : ts) {
        for (double x : xs) {
            const double f = besq::f_proj(t, x, ctx);
            const double fx = x > 0.0 ? besq::f_x_derivative(t, x, ctx)
                                      : std::numeric_limits<double>::quiet_NaN();
            const double res = x > 0.0 ? besq::pde_residual(t, x, ctx)
                                       : std::numeric_limits<double>::quiet_NaN();
            csv_cell(os, t);
            os << ",";
            csv_cell(os, x);
            os << ",";
            csv_cell(os, f);
            os << ",";
            csv_cell(os, fx);
            os << ",";
            csv_cell(os, res);
            os << "\n";
        }
    }
    return 0;
}

int run_simulate(const Options& o) {
    besq::ModelParams params(o.n, o.m);
    besq::ProjectionContext ctx(params, quad_from(o));
    const double horizon = o.ts.empty() ? 1.0 : o.ts.back();
    const long long steps = o.steps > 0 ? o.steps : 100;
    const long long paths = o.paths > 0 ? o.paths : 10;
    const auto grid = besq::uniform_grid(horizon, static_cast<std::size_t>(steps));
    const bool with_lambda = params.regime() == besq::Regime::reflected;
    const double dt = horizon / static_cast<double>(steps);
    const double eps = o.eps > 0.0 ? o.eps : std::sqrt(dt);

    Output out(o.out);
    std::ostream& os = out.stream();
    os << (with_lambda ? "path_id,t,x,z,lambda\n" : "path_id,t,x,z\n");
    for (long long p = 0; p < paths; ++p) {
        besq::RngStream rng(o.seed, static_cast<std::uint64_t>(p));
        const auto path = besq::simulate_path(o.x0, o.m, grid, rng);
        const auto z = besq::z_along_path(path, ctx);
        besq::LocalTimeEstimate lam;
        if (with_lambda) lam = besq::local_time_occupation(path, eps, o.m);
        for (std::size_t i = 0; i < path.times.size(); ++i) {
            os << p << ",";
            csv_cell(os, path.times[i]);
            os << ",";
            csv_cell(os, path.values[i]);
            os << ",";
            csv_cell(os, z[i]);
            if (with_lambda) {
                os << ",";
                csv_cell(os, lam.lambda_values[i]);
            }
            os << "\n";
        }
    }
    return 0;
}

int exit_code_for(besq::McReport::Verdict v) {
    switch (v) {
        case besq::McReport::Verdict::pass: return 0;
        case besq::McReport::Verdict::fail: return 1;
        default: return 3;
    }
}

int run_verify(const Options& o) {
    static const std::set<std::string> known{
        "pde",      "decomposition", "closed-forms",      "supermartingale",
        "martingale-stopped", "dm",  "laplace",           "compensator",
        "sampler-moments"};
    if (!known.count(o.experiment))
        throw std::domain_error("unknown experiment: " + o.experiment);

    const std::vector<double> grid_t = o.ts.empty() ? std::vector<double>{0.1, 0.5, 1.0, 2.0} : o.ts;
    const std::vector<double> grid_x =
        o.xs.empty() ? std::vector<double>{0.01, 0.1, 1.0, 5.0} : o.xs;
    std::optional<double> eps_opt;
    if (o.eps > 0.0) eps_opt = o.eps;

    besq::McReport rep;
    if (o.experiment == "pde") {
        besq::ProjectionContext ctx(besq::ModelParams(o.n, o.m), quad_from(o));
        rep = besq::verify_pde(ctx, grid_t, grid_x);
    } else if (o.experiment == "decomposition") {
        besq::ProjectionContext ctx(besq::ModelParams(o.n, o.m), quad_from(o));
        rep = besq::verify_decomposition(ctx, grid_t, grid_x);
    } else if (o.experiment == "closed-forms") {
        rep = besq::verify_closed_forms(quad_from(o));
    } else if (o.experiment == "compensator") {
        besq::ProjectionContext ctx(besq::ModelParams(o.n, o.m), quad_from(o));
        const std::vector<double> a =
            o.a_values.empty() ? std::vector<double>{0.25, 0.5, 1.0, 4.0} : o.a_values;
        rep = besq::verify_compensator(ctx, a);
    } else if (o.experiment == "sampler-moments") {
        rep = besq::verify_sampler(o.seed, o.paths > 0 ? o.paths : 100000, o.workers);
    } else if (o.experiment == "supermartingale") {
        besq::ProjectionContext ctx(besq::ModelParams(o.n, o.m), quad_from(o));
        const std::vector<double> times =
            o.ts.empty() ? std::vector<double>{0.25, 0.5, 1.0} : o.ts;
        const auto series = besq::verify_supermartingale(
            ctx, times, o.paths > 0 ? o.paths : 100000, o.seed, o.workers);
        rep = series.back();
        nlohmann::json rows = nlohmann::json::array();
        bool all_pass = true, decreasing = true;
        for (std::size_t i = 0; i < series.size(); ++i) {
            const auto& r = series[i];
            all_pass = all_pass && r.verdict == besq::McReport::Verdict::pass;
            if (i > 0)
                decreasing =
                    decreasing && r.estimate + 3.0 * r.std_err < series[i - 1].estimate;
            rows.push_back({{"T", r.T},
                            {"estimate", r.estimate},
                            {"stderr", r.std_err},
                            {"target", *r.target},
                            {"verdict", besq::McReport::verdict_name(r.verdict)}});
        }
        rep.extras["series"] = rows;
        rep.extras["decreasing_beyond_noise"] = decreasing;
        rep.verdict = (all_pass && (series.size() < 2 || decreasing))
                          ? besq::McReport::Verdict::pass
                          : besq::McReport::Verdict::fail;
    } else if (o.experiment == "martingale-stopped") {
        besq::ProjectionContext ctx(besq::ModelParams(o.n, o.m), quad_from(o));
        rep = besq::verify_martingale_stopped(ctx, o.kappa, o.ts.empty() ? 1.0 : o.ts.back(),
                                              o.paths > 0 ? o.paths : 100000,
                                              o.steps > 0 ? o.steps : 512, o.seed, o.workers);
    } else if (o.experiment == "dm") {
        besq::ProjectionContext ctx(besq::ModelParams(o.n, o.m), quad_from(o));
        const bool absorbed = ctx.params().regime() == besq::Regime::absorbed;
        const long long paths = o.paths > 0 ? o.paths : (absorbed ? 40000 : 10000);
        const long long steps = o.steps > 0 ? o.steps : (absorbed ? 4096 : 10000);
        rep = besq::verify_dm(ctx, o.ts.empty() ? 1.0 : o.ts.back(), paths, steps, o.seed,
                              o.workers, eps_opt);
    } else {  // laplace
        rep = besq::verify_laplace(o.m, o.s_level, o.z_rate, o.paths > 0 ? o.paths : 10000,
                                   o.steps > 0 ? o.steps : 10000, o.seed, o.window, o.workers,
                                   o.windows, eps_opt, o.tail);
    }

    Output out(o.out);
    out.stream() << rep.to_json().dump(2) << "\n";
    return exit_code_for(rep.verdict);
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"squared Bessel projection toolkit: exact simulation, local time, "
                 "and verification experiments"};
    app.require_subcommand(1);
    auto project = add_common(app, "project", "evaluate f, f_x, PDE residual on a grid", o);
    auto simulate = add_common(app, "simulate", "simulate exact paths with Z and local time", o);
    auto verify = add_common(app, "verify", "run a verification experiment", o);
    verify.cmd->add_option("experiment", o.experiment,
                           "one of: pde decomposition closed-forms supermartingale "
                           "martingale-stopped dm laplace compensator sampler-moments")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (o.paths != -1 && o.paths <= 0) throw std::domain_error("paths must be positive");
        if (o.steps != -1 && o.steps <= 0) throw std::domain_error("steps must be positive");
        if (o.workers <= 0) throw std::domain_error("workers must be positive");
        if (project.cmd->parsed()) {
            merge_config(project, o);
            return run_project(o);
        }
        if (simulate.cmd->parsed()) {
            merge_config(simulate, o);
            return run_simulate(o);
        }
        merge_config(verify, o);
        return run_verify(o);
    } catch (const besq::numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
