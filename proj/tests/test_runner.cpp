#include "ellcomm/errors.hpp"
#include "ellcomm/runner.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ellcomm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json config(const std::string &experiment, json params = json::object())
{
    return {{"experiment", experiment},
            {"torus", {{"omega", {1.0, 0.0}}, {"omega_prime", {0.0, 1.3}}}},
            {"seed", 1},
            {"params", params}};
}

const Criterion &criterion(const ExperimentResult &r, const std::string &name)
{
    for (const Criterion &c : r.criteria) {
        if (c.name == name) {
            return c;
        }
    }
    throw std::out_of_range(name);
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string &name)
{
    const fs::path dir = fs::temp_directory_path() / ("ellcomm_test_runner_" + name);
    fs::remove_all(dir);
    return dir;
}

void expect_config_error(const json &cfg, const std::string &path)
{
    try {
        run_experiment(cfg);
        ADD_FAILURE() << "no ConfigInvalid for " << path;
    } catch (const ConfigInvalid &e) {
        EXPECT_NE(std::string(e.what()).find(path), std::string::npos) << e.what();
    }
}

int cli(const std::string &args)
{
    const int status = std::system((std::string(ELLCOMM_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Runner, EllipticCheckOnSquareLattice)
{
    json cfg = config("elliptic-check");
    cfg["torus"]["omega_prime"] = {0.0, 1.0};
    const ExperimentResult r = run_experiment(cfg);
    EXPECT_GE(r.criteria.size(), 8u);
    for (const Criterion &c : r.criteria) {
        EXPECT_TRUE(c.pass()) << c.name << " " << c.value;
    }
    EXPECT_TRUE(r.passed());
}

TEST(Runner, ConfigEchoFillsDefaults)
{
    const ExperimentResult r = run_experiment(config("rank1-demo"));
    const json &params = r.config["params"];
    EXPECT_EQ(params["n_min"], -8);
    EXPECT_EQ(params["samples"], 16);
    EXPECT_DOUBLE_EQ(params["p_plus"][0].get<double>(), 0.31);
    EXPECT_EQ(r.config["seed"], 1);

    // Feeding the echo back in reproduces the run.
    const ExperimentResult again = run_experiment(r.config);
    EXPECT_EQ(again.report().dump(), r.report().dump());
}

TEST(Runner, UnknownKeysNamePath)
{
    json cfg = config("elltoda-run", {{"dtt", 1e-3}});
    expect_config_error(cfg, "params.dtt");
    cfg = config("elltoda-run");
    cfg["torus"]["omega_3"] = {0.0, 1.0};
    expect_config_error(cfg, "torus.omega_3");
    cfg = config("elltoda-run");
    cfg["extra"] = 1;
    expect_config_error(cfg, "extra");
}

TEST(Runner, InvalidValuesNamePath)
{
    expect_config_error(config("elltoda-run", {{"dt", -1e-3}}), "params.dt");
    expect_config_error(config("tyurin-run", {{"mode", "sideways"}}), "params.mode");
    expect_config_error(config("rank1-demo", {{"gamma", {1.0}}}), "params.gamma");
    expect_config_error(config("no-such-experiment"), "experiment");

    json cfg = config("rank1-demo");
    cfg["torus"]["omega_prime"] = {0.0, -1.0};
    expect_config_error(cfg, "torus");

    cfg = config("rank1-demo");
    cfg["tolerances"] = {{"commutator", -1.0}};
    expect_config_error(cfg, "tolerances.commutator");
    cfg["tolerances"] = {{"no_such_criterion", 1.0}};
    expect_config_error(cfg, "tolerances.no_such_criterion");
}

TEST(Runner, ToleranceOverrideChangesVerdict)
{
    json cfg = config("rank1-demo");
    cfg["tolerances"] = {{"commutator", 1e-30}};
    const ExperimentResult r = run_experiment(cfg);
    EXPECT_FALSE(criterion(r, "commutator").pass());
    EXPECT_FALSE(r.passed());
    EXPECT_EQ(r.config["tolerances"]["commutator"], 1e-30);
}

TEST(Runner, TyurinEqualResidueDirectionsIsAnError)
{
    EXPECT_THROW(run_experiment(config("tyurin-run", {{"a1", {0.5, 0.0}}, {"a2", {0.5, 0.0}}})), DegenerateState);
}

TEST(Runner, TyurinRunPasses)
{
    const ExperimentResult r = run_experiment(config("tyurin-run"));
    EXPECT_TRUE(r.passed());
    ASSERT_EQ(r.csv.size(), 2u);
    EXPECT_LT(r.results["symmetric"]["partner_residual"].get<double>(), 1e-8);
}

TEST(Runner, EllTodaDtHalvingIsFourthOrder)
{
    std::vector<double> drift;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        const ExperimentResult r = run_experiment(config("elltoda-run", {{"dt", dt}}));
        EXPECT_TRUE(criterion(r, "energy_drift").pass()) << dt;
        drift.push_back(r.results["energy_drift"].get<double>());
    }
    for (std::size_t k = 0; k + 1 < drift.size(); ++k) {
        const double ratio = drift[k] / drift[k + 1];
        EXPECT_GE(ratio, 12.0);
        EXPECT_LE(ratio, 20.0);
    }
}

TEST(Runner, ForwardTwiceCouplingFailsCompatibility)
{
    const ExperimentResult r =
        run_experiment(config("elltoda-run", {{"T", 2.0}, {"coupling", "forward-twice"}}));
    EXPECT_FALSE(criterion(r, "R_c").pass());
    EXPECT_GT(criterion(r, "R_c").value, 1e-2);
}

TEST(Runner, TrajectoryCsvColumns)
{
    const ExperimentResult r = run_experiment(config("elltoda-run", {{"T", 0.1}, {"stride", 5}}));
    ASSERT_EQ(r.csv.size(), 1u);
    const std::string &csv = r.csv[0].contents;
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,site,re_x,im_x,re_p,im_p,re_H,im_H");
    // 21 samples of 4 sites plus the header.
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21 * 4 + 1);
}

TEST(Runner, PartnerSolveWithInlineOperator)
{
    const ExperimentResult generated = run_experiment(config("partner-solve", {{"instances", 1}}));
    ASSERT_TRUE(generated.passed());

    // T + T⁻¹ commutes with T³ + T⁻³.
    json op = {{"n_min", 0}, {"n_max", 20}, {"lower_span", 1}, {"upper_span", 1}, {"coeffs", json::array()}};
    for (int n = 0; n <= 20; ++n) {
        op["coeffs"].push_back({1.0, 0.0});
        op["coeffs"].push_back({0.0, 0.0});
        op["coeffs"].push_back({1.0, 0.0});
    }
    const ExperimentResult r = run_experiment(config("partner-solve", {{"operator", op}}));
    EXPECT_EQ(r.criteria.size(), 1u);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.config["params"]["n_max"], 20);

    expect_config_error(config("partner-solve", {{"operator", {{"n_min", 0}}}}), "params.operator");
}

TEST(Runner, SeparatedRank2ReportsSingleComponentGap)
{
    const ExperimentResult r = run_experiment(config("seprank2-demo"));
    EXPECT_TRUE(criterion(r, "normalization").pass());
    EXPECT_TRUE(criterion(r, "commutator").pass());
    EXPECT_FALSE(criterion(r, "single_component_agreement").pass());
    EXPECT_FALSE(r.results["single_component_error"].get<std::string>().empty());
}

TEST(Runner, ArtifactsAreDeterministic)
{
    for (const char *experiment : {"rank1-demo", "tyurin-run", "elltoda-run", "partner-solve"}) {
        json cfg = config(experiment);
        if (std::string(experiment) == "elltoda-run") {
            cfg["params"]["T"] = 2.0;
        }
        const fs::path a = scratch(std::string(experiment) + "_a");
        const fs::path b = scratch(std::string(experiment) + "_b");
        write_artifacts(run_experiment(cfg), a);
        write_artifacts(run_experiment(cfg), b);
        for (const auto &entry : fs::directory_iterator(a)) {
            EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
        }
        fs::remove_all(a);
        fs::remove_all(b);
    }
}

TEST(Diff, IdenticalReportsAreEmpty)
{
    const json report = run_experiment(config("rank1-demo")).report();
    EXPECT_TRUE(diff_reports(report, report).empty());
}

TEST(Diff, OtherSeedKeepsVerdicts)
{
    json cfg = config("rank1-demo");
    const json a = run_experiment(cfg).report();
    cfg["seed"] = 7;
    const json b = run_experiment(cfg).report();
    const auto entries = diff_reports(a, b);
    EXPECT_FALSE(entries.empty());
    EXPECT_TRUE(same_verdicts(a, b));
}

TEST(Diff, RelativeThreshold)
{
    json a = {{"experiment", "x"}, {"results", {{"r", 1.0}, {"s", "same"}}}};
    json b = a;
    b["results"]["r"] = 1.0 + 1e-9;
    EXPECT_EQ(diff_reports(a, b, 1e-6).size(), 0u);
    const auto entries = diff_reports(a, b, 1e-12);
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0].path, "results.r");
    EXPECT_NEAR(entries[0].relative, 1e-9, 1e-12);

    b["results"].erase("r");
    ASSERT_EQ(diff_reports(a, b).size(), 1u);
    EXPECT_EQ(diff_reports(a, b)[0].b, "<missing>");
}

TEST(Diff, SchemaMismatch)
{
    const json a = {{"experiment", "rank1-demo"}, {"results", {{"r", 1.0}}}};
    json b = a;
    b["experiment"] = "tyurin-run";
    EXPECT_THROW(diff_reports(a, b), SchemaMismatch);
    b = a;
    b["results"]["r"] = "text";
    EXPECT_THROW(diff_reports(a, b), SchemaMismatch);
    EXPECT_THROW(diff_reports(a, json::array()), SchemaMismatch);
}

TEST(Cli, ExitCodes)
{
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    auto write = [&](const std::string &name, const json &j) {
        std::ofstream(dir / name) << j.dump();
        return (dir / name).string();
    };
    const std::string good = write("good.json", config("rank1-demo"));
    const std::string failing = write("fail.json", config("seprank2-demo"));
    const std::string degenerate =
        write("degenerate.json", config("tyurin-run", {{"a1", {0.5, 0.0}}, {"a2", {0.5, 0.0}}}));
    const std::string unknown = write("unknown.json", config("rank1-demo", {{"bogus", 1}}));

    EXPECT_EQ(cli("run --config " + good + " --out " + (dir / "a").string()), 0);
    EXPECT_EQ(cli("run --config " + good + " --out " + (dir / "b").string() + " --seed 4"), 0);
    EXPECT_EQ(cli("run --config " + failing + " --out " + (dir / "c").string()), 2);
    EXPECT_EQ(cli("run --config " + degenerate + " --out " + (dir / "d").string()), 1);
    EXPECT_EQ(cli("run --config " + unknown + " --out " + (dir / "e").string()), 1);
    EXPECT_EQ(cli("run --config " + (dir / "missing.json").string()), 1);
    EXPECT_FALSE(fs::exists(dir / "d" / "report.json"));

    const std::string ra = (dir / "a" / "report.json").string();
    const std::string rb = (dir / "b" / "report.json").string();
    const std::string rc = (dir / "c" / "report.json").string();
    EXPECT_EQ(cli("diff " + ra + " " + ra), 0);
    EXPECT_EQ(cli("diff " + ra + " " + rb), 2);
    EXPECT_EQ(cli("diff " + ra + " " + rc), 1);

    EXPECT_EQ(cli("eval wp --omega 1 0 --omega-prime 0 1 --z 0.3 0.2"), 0);
    EXPECT_EQ(cli("eval wp --z 0 0"), 1);
    EXPECT_EQ(cli("eval theta --z 0.3 0.2"), 1);
    fs::remove_all(dir);
}

TEST(Cli, EvalPrintsSeventeenDigits)
{
    const std::string cmd = std::string(ELLCOMM_CLI) + " eval zeta --omega 1 0 --omega-prime 0 1 --z 0.3 0.2";
    FILE *pipe = popen(cmd.c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    char buf[256] = {};
    ASSERT_NE(fgets(buf, sizeof buf, pipe), nullptr);
    pclose(pipe);
    double re = 0, im = 0;
    ASSERT_EQ(std::sscanf(buf, "%lf %lf", &re, &im), 2);
    const cplx expected = zeta_w(Torus(1.0, cplx(0.0, 1.0)), cplx(0.3, 0.2));
    EXPECT_EQ(re, expected.real());
    EXPECT_EQ(im, expected.imag());
}
