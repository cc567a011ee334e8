// End-to-end checks of the CLI surface: CSV shapes, exit codes, seeded
// reproducibility, config-file override semantics, and JSON reports
// validating against the shipped schema.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "besq/projection.hpp"

#ifndef BESQ_CLI_PATH
#error "BESQ_CLI_PATH must be defined by the build"
#endif
#ifndef BESQ_SCHEMA_PATH
#error "BESQ_SCHEMA_PATH must be defined by the build"
#endif

namespace {

struct RunResult {
    int exit_code;
    std::string stdout_text;
    std::string stderr_text;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args) {
    const std::string out = std::string(BESQ_CLI_PATH) + ".out.tmp";
    const std::string err = std::string(BESQ_CLI_PATH) + ".err.tmp";
    const std::string cmd =
        std::string(BESQ_CLI_PATH) + " " + args + " > " + out + " 2> " + err;
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.stdout_text = slurp(out);
    r.stderr_text = slurp(err);
    std::remove(out.c_str());
    std::remove(err.c_str());
    return r;
}

// Minimal structural validator for the subset of JSON Schema the report
// schema uses: type / required / properties / enum, with integer <= number.
bool type_matches(const nlohmann::json& value, const std::string& type) {
    if (type == "object") return value.is_object();
    if (type == "string") return value.is_string();
    if (type == "integer") return value.is_number_integer() || value.is_number_unsigned();
    if (type == "number") return value.is_number();
    if (type == "null") return value.is_null();
    return false;
}

bool validates(const nlohmann::json& value, const nlohmann::json& schema) {
    if (schema.contains("type")) {
        const auto& t = schema["type"];
        bool ok = false;
        if (t.is_string()) {
            ok = type_matches(value, t.get<std::string>());
        } else {
            for (const auto& alt : t) ok = ok || type_matches(value, alt.get<std::string>());
        }
        if (!ok) return false;
    }
    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& allowed : schema["enum"]) ok = ok || value == allowed;
        if (!ok) return false;
    }
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!value.contains(key.get<std::string>())) return false;
        if (schema.contains("properties"))
            for (const auto& [key, sub] : schema["properties"].items())
                if (value.contains(key) && !validates(value[key], sub)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("cli project: grid CSV with the reference value") {
    const auto r = run_cli("project --n 3 --m 1 --t 1 --x 0,1");
    CHECK(r.exit_code == 0);
    REQUIRE(r.stdout_text.substr(0, 23) == "t,x,f,f_x,pde_residual\n");
    // the x = 1 row carries f ~= 0.65568
    CHECK(r.stdout_text.find("0.6556795") != std::string::npos);
    // x = 0: f = sqrt(pi/2), derivative column degenerates to nan
    CHECK(r.stdout_text.find("1.2533141") != std::string::npos);
    CHECK(r.stdout_text.find("nan") != std::string::npos);
}

TEST_CASE("cli project: validation failures exit 2 with a message") {
    const auto bad_n = run_cli("project --n 1.5 --m 1 --t 1 --x 1");
    CHECK(bad_n.exit_code == 2);
    CHECK(bad_n.stderr_text.find("n must be") != std::string::npos);

    const auto bad_m = run_cli("project --n 3 --m 3.5 --t 1 --x 1");
    CHECK(bad_m.exit_code == 2);

    const auto bad_cmd = run_cli("transmogrify");
    CHECK(bad_cmd.exit_code == 2);

    const auto bad_exp = run_cli("verify nonsense --n 4 --m 1");
    CHECK(bad_exp.exit_code == 2);

    const auto bad_paths = run_cli("simulate --n 4 --m 1 --paths 0");
    CHECK(bad_paths.exit_code == 2);
}

TEST_CASE("cli simulate: reproducible bytes, absorbed z follows f(t,0)") {
    const std::string args = "simulate --n 4 --m 0 --t 1 --paths 5 --steps 40 --seed 7";
    const auto a = run_cli(args);
    const auto b = run_cli(args);
    CHECK(a.exit_code == 0);
    CHECK(a.stdout_text == b.stdout_text);
    REQUIRE(a.stdout_text.substr(0, 14) == "path_id,t,x,z\n");

    // absorbed rows (x = 0) repeat the boundary series z = f(t, 0)
    besq::ProjectionContext ctx(besq::ModelParams(4.0, 0.0));
    std::istringstream lines(a.stdout_text);
    std::string line;
    std::getline(lines, line);  // header
    int absorbed_rows = 0;
    while (std::getline(lines, line)) {
        double id, t, x, z;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &id, &t, &x, &z) == 4);
        if (x == 0.0 && t > 0.0) {
            ++absorbed_rows;
            CHECK(z == doctest::Approx(besq::f_at_zero(t, ctx)).epsilon(1e-9));
        }
    }
    CHECK(absorbed_rows > 0);

    // m in (0,2) adds the lambda column
    const auto refl = run_cli("simulate --n 4 --m 1 --t 1 --paths 2 --steps 10 --seed 7");
    CHECK(refl.stdout_text.substr(0, 21) == "path_id,t,x,z,lambda\n");
}

TEST_CASE("cli verify: deterministic experiments pass and reports validate") {
    const nlohmann::json schema = nlohmann::json::parse(slurp(BESQ_SCHEMA_PATH));
    for (const std::string args :
         {std::string("verify pde --n 4 --m 1 --t 0.5,1 --x 0.1,1"),
          std::string("verify compensator --n 4 --m 1 --a 0.5,1"),
          std::string("verify decomposition --n 3 --m 1 --t 0.5,1 --x 0.1,1")}) {
        const auto r = run_cli(args);
        CAPTURE(args);
        CHECK(r.exit_code == 0);
        const auto report = nlohmann::json::parse(r.stdout_text);
        CHECK(validates(report, schema));
        CHECK(report["verdict"] == "pass");
    }
}

TEST_CASE("cli verify: monte carlo experiment with config file and overrides") {
    const std::string cfg_path = std::string(BESQ_CLI_PATH) + ".cfg.tmp";
    {
        std::ofstream cfg(cfg_path);
        cfg << R"({"n": 4.0, "m": 2.5, "kappa": 2.0, "paths": 4000, "steps": 128, "seed": 99})";
    }
    const auto r = run_cli("verify martingale-stopped --config " + cfg_path + " --paths 3000");
    std::remove(cfg_path.c_str());
    CHECK(r.exit_code == 0);
    const auto report = nlohmann::json::parse(r.stdout_text);
    CHECK(report["n_paths"] == 3000);  // flag overrides config
    CHECK(report["n_steps"] == 128);   // config fills the rest
    CHECK(report["params"]["m"] == 2.5);
    const nlohmann::json schema = nlohmann::json::parse(slurp(BESQ_SCHEMA_PATH));
    CHECK(validates(report, schema));
}

TEST_CASE("cli verify: starved laplace horizon reports inconclusive (exit 3)") {
    const auto r =
        run_cli("verify laplace --m 1 --s 0.5 --z 1 --paths 300 --steps 200 --windows 1 --tail 1");
    CHECK(r.exit_code == 3);
    const auto report = nlohmann::json::parse(r.stdout_text);
    CHECK(report["verdict"] == "inconclusive");
    CHECK(report["extras"]["flagged_fraction"].get<double>() > 0.01);
}

TEST_CASE("cli verify: --out writes the report file") {
    const std::string out_path = std::string(BESQ_CLI_PATH) + ".report.tmp";
    const auto r = run_cli("verify closed-forms --out " + out_path);
    CHECK(r.exit_code == 0);
    const auto report = nlohmann::json::parse(slurp(out_path));
    std::remove(out_path.c_str());
    CHECK(report["experiment"] == "closed-forms");
    CHECK(report["verdict"] == "pass");
}
