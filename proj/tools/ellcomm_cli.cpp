#include "ellcomm/elliptic.hpp"
#include "ellcomm/errors.hpp"
#include "ellcomm/runner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

using namespace ellcomm;
using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitCriterionFailed = 2;

json read_json(const std::string &path, const char *what)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigInvalid(std::string(what) + ": cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigInvalid(std::string(what) + ": " + path + ": " + e.what());
    }
}

int run_command(const std::string &config_path, const std::string &out_dir, std::optional<long> seed)
{
    json config = read_json(config_path, "config");
    if (seed) {
        if (!config.is_object()) {
            throw ConfigInvalid("config: expected an object");
        }
        config["seed"] = *seed;
    }
    const ExperimentResult result = run_experiment(config);
    std::string dir = out_dir;
    if (dir.empty()) {
        dir = result.output_dir.empty() ? "runs/" + result.experiment : result.output_dir;
    }
    write_artifacts(result, dir);

    for (const Criterion &c : result.criteria) {
        std::printf("%s %-28s %.3e %s %.1e\n", c.pass() ? "PASS" : "FAIL", c.name.c_str(), c.value,
                    c.bound == Criterion::Bound::Below ? "<" : ">", c.threshold);
    }
    std::printf("%s: %s, artifacts in %s\n", result.experiment.c_str(), result.passed() ? "passed" : "FAILED",
                dir.c_str());
    return result.passed() ? kExitPass : kExitCriterionFailed;
}

int diff_command(const std::string &a_path, const std::string &b_path, double rel_tol)
{
    const json a = read_json(a_path, "report");
    const json b = read_json(b_path, "report");
    const auto entries = diff_reports(a, b, rel_tol);
    for (const DiffEntry &e : entries) {
        if (e.relative > 0) {
            std::printf("%s: %s -> %s (rel %.2e)\n", e.path.c_str(), e.a.c_str(), e.b.c_str(), e.relative);
        } else {
            std::printf("%s: %s -> %s\n", e.path.c_str(), e.a.c_str(), e.b.c_str());
        }
    }
    std::printf("%zu field(s) differ; pass/fail verdicts %s\n", entries.size(),
                same_verdicts(a, b) ? "identical" : "differ");
    return entries.empty() ? kExitPass : kExitCriterionFailed;
}

int eval_command(const std::string &function, const std::vector<double> &omega,
                 const std::vector<double> &omega_prime, const std::vector<double> &z)
{
    const Torus t({omega[0], omega[1]}, {omega_prime[0], omega_prime[1]});
    const cplx at(z[0], z[1]);
    cplx value;
    if (function == "wp") {
        value = wp(t, at);
    } else if (function == "zeta") {
        value = zeta_w(t, at);
    } else {
        value = sigma_w(t, at);
    }
    std::printf("%.17g %.17g\n", value.real(), value.imag());
    return kExitPass;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Elliptic commuting difference operators: experiment runner"};
    app.require_subcommand(1);

    auto *run = app.add_subcommand("run", "Run an experiment from a JSON config");
    std::string config_path, out_dir;
    std::optional<long> seed;
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    run->add_option("--seed", seed, "Seed (overrides the config)");

    auto *diff = app.add_subcommand("diff", "Field-wise comparison of two report.json files");
    std::string a_path, b_path;
    double rel_tol = 1e-12;
    diff->add_option("a", a_path)->required();
    diff->add_option("b", b_path)->required();
    diff->add_option("--rel-tol", rel_tol, "Relative tolerance for numeric fields")->capture_default_str();

    auto *eval = app.add_subcommand("eval", "Spot evaluation of a Weierstrass function");
    std::string function;
    std::vector<double> omega{1.0, 0.0}, omega_prime{0.0, 1.0}, z;
    eval->add_option("function", function)->required()->check(CLI::IsMember({"wp", "zeta", "sigma"}));
    eval->add_option("--omega", omega, "Half-period ω as re im")->expected(2);
    eval->add_option("--omega-prime", omega_prime, "Half-period ω' as re im")->expected(2);
    eval->add_option("--z", z, "Argument as re im")->expected(2)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? kExitPass : kExitError;
    }

    try {
        if (*run) {
            return run_command(config_path, out_dir, seed);
        }
        if (*diff) {
            return diff_command(a_path, b_path, rel_tol);
        }
        return eval_command(function, omega, omega_prime, z);
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
}
