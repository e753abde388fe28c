#include "ellcomm/runner.hpp"

#include "ellcomm/elltoda.hpp"
#include "ellcomm/errors.hpp"
#include "ellcomm/operators.hpp"
#include "ellcomm/rank1.hpp"
#include "ellcomm/sampling.hpp"
#include "ellcomm/seprank2.hpp"
#include "ellcomm/tyurin.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace ellcomm {

using nlohmann::json;

namespace {

constexpr const char *kVersion = "0.1.0";

json to_pair(cplx z)
{
    return json::array({z.real(), z.imag()});
}

// --- config reading -------------------------------------------------------

// Typed access to one JSON object of the config. Every key read is recorded
// (with its effective value) in `echo`; finish() rejects the rest.
class Block
{
public:
    Block(const json *src, std::string path) : src_(src), path_(std::move(path))
    {
        if (src_ && !src_->is_object()) {
            fail("", "expected an object");
        }
    }

    bool has(const std::string &key) const { return src_ && src_->contains(key); }

    double number(const std::string &key, double fallback, bool positive = false)
    {
        double value = fallback;
        if (const json *j = take(key)) {
            if (!j->is_number()) {
                fail(key, "expected a number");
            }
            value = j->get<double>();
        }
        if (!std::isfinite(value) || (positive && !(value > 0))) {
            fail(key, positive ? "must be positive" : "must be finite");
        }
        echo[key] = value;
        return value;
    }

    long integer(const std::string &key, long fallback, long minimum)
    {
        long value = fallback;
        if (const json *j = take(key)) {
            if (!j->is_number_integer()) {
                fail(key, "expected an integer");
            }
            value = j->get<long>();
        }
        if (value < minimum) {
            fail(key, "must be at least " + std::to_string(minimum));
        }
        echo[key] = value;
        return value;
    }

    std::string choice(const std::string &key, const std::string &fallback, const std::vector<std::string> &allowed)
    {
        std::string value = fallback;
        if (const json *j = take(key)) {
            if (!j->is_string()) {
                fail(key, "expected a string");
            }
            value = j->get<std::string>();
        }
        if (std::find(allowed.begin(), allowed.end(), value) == allowed.end()) {
            std::string list;
            for (const auto &a : allowed) {
                list += (list.empty() ? "" : ", ") + a;
            }
            fail(key, "'" + value + "' is not one of " + list);
        }
        echo[key] = value;
        return value;
    }

    cplx complex(const std::string &key, cplx fallback)
    {
        cplx value = fallback;
        if (const json *j = take(key)) {
            value = parse_complex(*j, key);
        }
        echo[key] = to_pair(value);
        return value;
    }

    std::optional<std::vector<cplx>> complex_list(const std::string &key)
    {
        const json *j = take(key);
        if (!j) {
            return std::nullopt;
        }
        if (!j->is_array() || j->empty()) {
            fail(key, "expected a non-empty array of [re, im] pairs");
        }
        std::vector<cplx> out;
        json copy = json::array();
        for (std::size_t k = 0; k < j->size(); ++k) {
            out.push_back(parse_complex((*j)[k], key + "[" + std::to_string(k) + "]"));
            copy.push_back(to_pair(out.back()));
        }
        echo[key] = copy;
        return out;
    }

    // Raw sub-document, echoed as given.
    const json *raw(const std::string &key)
    {
        const json *j = take(key);
        if (j) {
            echo[key] = *j;
        }
        return j;
    }

    void finish() const
    {
        if (!src_) {
            return;
        }
        for (const auto &item : src_->items()) {
            if (!seen_.count(item.key())) {
                fail(item.key(), "unknown key");
            }
        }
    }

    [[noreturn]] void fail(const std::string &key, const std::string &why) const
    {
        throw ConfigInvalid(field(key) + ": " + why);
    }

    std::string field(const std::string &key) const
    {
        if (key.empty()) {
            return path_.empty() ? "config" : path_;
        }
        return path_.empty() ? key : path_ + "." + key;
    }

    json echo = json::object();

private:
    const json *take(const std::string &key)
    {
        seen_.insert(key);
        if (!src_) {
            return nullptr;
        }
        auto it = src_->find(key);
        return it == src_->end() ? nullptr : &*it;
    }

    cplx parse_complex(const json &j, const std::string &key) const
    {
        if (j.is_number()) {
            return {j.get<double>(), 0.0};
        }
        if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
            fail(key, "expected [re, im]");
        }
        return {j[0].get<double>(), j[1].get<double>()};
    }

    const json *src_;
    std::string path_;
    std::set<std::string> seen_;
};

// --- criteria -------------------------------------------------------------

class Scorecard
{
public:
    void below(const std::string &name, double value, double threshold)
    {
        add(name, value, threshold, Criterion::Bound::Below);
    }
    void above(const std::string &name, double value, double threshold)
    {
        add(name, value, threshold, Criterion::Bound::Above);
    }

    std::vector<Criterion> take() { return std::move(criteria_); }

private:
    void add(const std::string &name, double value, double threshold, Criterion::Bound bound)
    {
        criteria_.push_back({name, value, threshold, bound});
    }

    std::vector<Criterion> criteria_;
};

// --- CSV --------------------------------------------------------------------

class Csv
{
public:
    explicit Csv(const std::vector<std::string> &header)
    {
        for (std::size_t k = 0; k < header.size(); ++k) {
            out_ << (k ? "," : "") << header[k];
        }
        out_ << '\n';
    }

    Csv &cell(const std::string &s)
    {
        sep();
        out_ << s;
        return *this;
    }
    Csv &cell(long n)
    {
        sep();
        out_ << n;
        return *this;
    }
    Csv &cell(double x)
    {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        sep();
        out_ << buf;
        return *this;
    }
    Csv &cell(cplx z) { return cell(z.real()).cell(z.imag()); }

    void end_row()
    {
        out_ << '\n';
        fresh_ = true;
    }

    std::string str() const { return out_.str(); }

private:
    void sep()
    {
        if (!fresh_) {
            out_ << ',';
        }
        fresh_ = false;
    }

    std::ostringstream out_;
    bool fresh_ = true;
};

void write_operator_rows(Csv &csv, const std::string &label, const BandedOperator &L)
{
    for (long n = L.n_min(); n <= L.n_max(); ++n) {
        for (int i = -L.lower_span(); i <= L.upper_span(); ++i) {
            csv.cell(label).cell(n).cell(static_cast<long>(i)).cell(L.coeff(n, i));
            csv.end_row();
        }
    }
}

double relative(cplx a, cplx b)
{
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

double coefficient_gap(const BandedOperator &a, const BandedOperator &b)
{
    const int lower = std::max(a.lower_span(), b.lower_span());
    const int upper = std::max(a.upper_span(), b.upper_span());
    double worst = 0;
    for (long n = a.n_min(); n <= a.n_max(); ++n) {
        for (int i = -lower; i <= upper; ++i) {
            const cplx x = a.coeff(n, i);
            worst = std::max(worst, std::abs(x - b.coeff(n, i)) / std::max(1.0, std::abs(x)));
        }
    }
    return worst;
}

// --- experiments ------------------------------------------------------------

struct Context
{
    const Torus &torus;
    std::uint64_t seed;
    Block &params;
    Scorecard &score;
    ExperimentResult &out;
};

void run_elliptic_check(Context &cx)
{
    const auto points = static_cast<std::size_t>(cx.params.integer("points", 100, 1));
    cx.params.finish();
    for (Criterion &c : elliptic_identity_suite(cx.torus, points, cx.seed)) {
        cx.score.below(c.name, c.value, c.threshold);
    }
    cx.out.results = {{"points", points},
                      {"g2", to_pair(cx.torus.g2())},
                      {"g3", to_pair(cx.torus.g3())},
                      {"eta", to_pair(cx.torus.eta())},
                      {"eta_prime", to_pair(cx.torus.eta_prime())}};
}

void run_rank1_demo(Context &cx)
{
    Block &p = cx.params;
    const cplx p_plus = p.complex("p_plus", {0.31, 0.17});
    const cplx p_minus = p.complex("p_minus", {-0.42, 0.23});
    const cplx gamma = p.complex("gamma", {0.93, 0.61});
    const long n_min = p.integer("n_min", -8, std::numeric_limits<long>::min());
    const long n_max = p.integer("n_max", 8, n_min);
    const auto samples = static_cast<std::size_t>(p.integer("samples", 16, 1));
    const auto held_out = static_cast<std::size_t>(p.integer("held_out", 5, 1));
    p.finish();

    const Rank1Function psi(cx.torus, p_plus, p_minus, gamma);
    const Torus &t = cx.torus;
    const auto pts = sample_points(t, 10, cx.seed + 1, [&](cplx z) {
        return clear_of(t, z, {p_plus, p_minus, gamma}, 0.1 * std::abs(t.omega()));
    });
    double periodicity = 0;
    for (long n = -3; n <= 3; ++n) {
        for (cplx z : pts) {
            const cplx value = psi(n, z);
            periodicity = std::max({periodicity, relative(psi(n, z + 2.0 * t.omega()), value),
                                    relative(psi(n, z + 2.0 * t.omega_prime()), value)});
        }
    }

    const Rank1PairReport rep = rank1_pair_check(psi, n_min, n_max, samples, held_out, cx.seed);
    cx.score.below("psi_periodicity", periodicity, 1e-9);
    cx.score.below("eigen_residual_f", rep.eigen_residual_f, 1e-8);
    cx.score.below("eigen_residual_g", rep.eigen_residual_g, 1e-8);
    cx.score.below("commutator", rep.commutator_norm, 1e-8);

    cx.out.results = rep.to_json();
    cx.out.results["psi_periodicity"] = periodicity;
    cx.out.results["L_f"] = rep.L_f.to_json();
    cx.out.results["L_g"] = rep.L_g.to_json();

    Csv csv({"operator", "n", "i", "re", "im"});
    write_operator_rows(csv, "L_f", rep.L_f);
    write_operator_rows(csv, "L_g", rep.L_g);
    cx.out.csv.push_back({"operators.csv", csv.str()});
}

void run_seprank2_demo(Context &cx)
{
    Block &p = cx.params;
    SepRank2Data d;
    d.z0 = p.complex("z0", {0.23, 0.11});
    d.gamma1 = p.complex("gamma1", {0.61, 0.0});
    d.gamma2 = p.complex("gamma2", {1.17, 0.4});
    d.a1 = p.complex("a1", {1.3, 0.0});
    d.a2 = p.complex("a2", {-0.7, 0.0});
    const long n_min = p.integer("n_min", -8, std::numeric_limits<long>::min());
    const long n_max = p.integer("n_max", 8, n_min);
    const auto samples = static_cast<std::size_t>(p.integer("samples", 16, 1));
    const auto held_out = static_cast<std::size_t>(p.integer("held_out", 5, 1));
    p.finish();

    const SepRank2Function psi(cx.torus, d);
    const SepRank2Report rep = seprank2_operator_check(psi, n_min, n_max, samples, held_out, cx.seed);
    cx.score.below("normalization", rep.normalization_residual, 1e-9);
    cx.score.below("tu_residual", rep.tu_residual, 1e-6);
    cx.score.below("eigen_residual_f", rep.eigen_residual_f, 1e-8);
    cx.score.below("eigen_residual_g", rep.eigen_residual_g, 1e-8);
    cx.score.below("commutator", rep.commutator_norm, 1e-8);
    cx.score.below("single_component_agreement", rep.single_component_agreement, 1e-7);

    cx.out.results = rep.to_json();
    cx.out.results["L_f"] = rep.L_f.to_json();
    cx.out.results["L_g"] = rep.L_g.to_json();

    Csv csv({"operator", "n", "i", "re", "im"});
    write_operator_rows(csv, "L_f", rep.L_f);
    write_operator_rows(csv, "L_g", rep.L_g);
    cx.out.csv.push_back({"operators.csv", csv.str()});
}

void run_tyurin(Context &cx)
{
    Block &p = cx.params;
    const std::string mode = p.choice("mode", "both", {"general", "symmetric", "both"});
    const long steps = p.integer("steps", 40, 4);
    const cplx c_const = p.complex("c", {0.13, 0.07});
    const cplx a1 = p.complex("a1", {0.8, 0.3});
    const cplx a2 = p.complex("a2", {-0.4, 0.6});
    const double margin = p.number("margin", 0.5, true);
    const double s_half = p.number("s_half", 0.5, true);
    p.finish();
    const Torus &t = cx.torus;
    json results = json::object();

    if (mode != "symmetric") {
        const SymmetricParams data = random_symmetric_params(t, 0, steps, cx.seed, margin, s_half);
        std::mt19937_64 rng(cx.seed + 100);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<cplx> v;
        for (long k = 0; k < steps; ++k) {
            v.emplace_back(u(rng), u(rng));
        }
        const GeneralRun run = run_general(t, 0, data.gamma, v, c_const, a1, a2);
        cx.score.below("chi1_zero", run.max_chi1_zero_residual, 1e-9);
        cx.score.below("a_two_route", run.max_a_two_route_residual, 1e-9);
        results["general"] = {{"steps", steps},
                              {"max_chi1_zero_residual", run.max_chi1_zero_residual},
                              {"max_a_two_route_residual", run.max_a_two_route_residual}};

        Csv csv({"n", "re_gamma", "im_gamma", "re_a1", "im_a1", "re_a2", "im_a2", "re_c_next", "im_c_next",
                 "re_v_next", "im_v_next", "re_xi11", "im_xi11", "re_xi12", "im_xi12", "re_xi21", "im_xi21"});
        for (std::size_t k = 0; k < run.c.size(); ++k) {
            const TyurinState &s = run.states[k];
            csv.cell(run.n0 + static_cast<long>(k)).cell(s.gamma).cell(s.a1).cell(s.a2);
            csv.cell(run.c[k]).cell(run.v[k]).cell(run.xi[k].xi11).cell(run.xi[k].xi12).cell(run.xi[k].xi21);
            csv.end_row();
        }
        cx.out.csv.push_back({"general.csv", csv.str()});
    }

    if (mode != "general") {
        const SymmetricParams data = random_symmetric_params(t, -3, steps + 1, cx.seed, margin, s_half);
        const GeneralRun run = symmetric_as_general(t, data);
        double xi11 = 0, xi12 = 0, xi21 = 0;
        for (std::size_t k = 0; k < run.xi.size(); ++k) {
            const long n = run.n0 + static_cast<long>(k);
            const Xi &xi = run.xi[k];
            const cplx two_route = wp(t, data.gamma_at(n)) - wp(t, data.gamma_at(n + 1));
            xi11 = std::max(xi11, std::abs(xi.xi11));
            xi12 = std::max(xi12, std::abs(xi.xi12 - two_route) / std::max(1.0, std::abs(two_route)));
            xi21 = std::max(xi21, std::abs(xi.xi21 - wp(t, data.gamma_at(n))) / std::max(1.0, std::abs(xi.xi21)));
        }
        const BandedOperator general = general_L4(run);
        const BandedOperator symmetric = symmetric_L4(t, data, general.n_min(), general.n_max());
        const double gap = coefficient_gap(general, symmetric);
        const PartnerResult partner =
            find_commuting_partner(symmetric_L4(t, data, 0, steps), 3, 3, 0, steps);

        cx.score.below("xi11_zero", xi11, 1e-12);
        cx.score.below("xi12_two_route", xi12, 1e-9);
        cx.score.below("xi21_wp", xi21, 1e-9);
        cx.score.below("L4_general_vs_symmetric", gap, 1e-9);
        results["symmetric"] = {{"window", {0, steps}},
                                {"max_abs_xi11", xi11},
                                {"xi12_two_route", xi12},
                                {"xi21_wp", xi21},
                                {"L4_coefficient_gap", gap},
                                {"partner_residual", partner.residual}};

        Csv csv({"n", "re_gamma", "im_gamma", "re_s", "im_s", "re_c_next", "im_c_next", "re_v_next", "im_v_next",
                 "re_xi11", "im_xi11", "re_xi12", "im_xi12", "re_xi21", "im_xi21", "partner_residual"});
        for (std::size_t k = 0; k < run.c.size(); ++k) {
            const long n = run.n0 + static_cast<long>(k);
            csv.cell(n).cell(data.gamma_at(n)).cell(data.s_at(n)).cell(run.c[k]).cell(run.v[k]);
            csv.cell(run.xi[k].xi11).cell(run.xi[k].xi12).cell(run.xi[k].xi21).cell(partner.residual);
            csv.end_row();
        }
        cx.out.csv.push_back({"symmetric.csv", csv.str()});
    }
    cx.out.results = results;
}

void run_elltoda(Context &cx)
{
    Block &p = cx.params;
    const bool explicit_state = p.has("x") || p.has("xdot");
    const auto x = p.complex_list("x");
    const auto xdot = p.complex_list("xdot");
    if (explicit_state && (!x || !xdot)) {
        p.fail(x ? "xdot" : "x", "x and xdot must be given together");
    }
    if (x && x->size() != xdot->size()) {
        p.fail("xdot", "length differs from x");
    }
    const long sites = p.integer("sites", x ? static_cast<long>(x->size()) : 4, 2);
    if (x && static_cast<std::size_t>(sites) != x->size()) {
        p.fail("sites", "does not match the length of x");
    }
    IntegrationOptions opt;
    opt.T = p.number("T", 10.0, true);
    opt.dt = p.number("dt", 1e-3, true);
    opt.stride = static_cast<int>(p.integer("stride", 5, 1));
    opt.coupling =
        p.choice("coupling", "nearest", {"nearest", "forward-twice"}) == "nearest" ? Coupling::Nearest
                                                                                  : Coupling::ForwardTwice;
    const int calibration_states = static_cast<int>(p.integer("calibration_states", 50, 1));
    p.finish();

    const Torus &t = cx.torus;
    const auto N = static_cast<std::size_t>(sites);
    const ChainState initial = x ? ChainState{*x, *xdot} : sample_chain(t, N, cx.seed);
    const Calibration cal = calibrate_hamiltonian(t, N, calibration_states, cx.seed);
    const Trajectory tr = integrate(t, initial, opt);
    if (!tr.completed) {
        throw SingularConfiguration("integration stopped at t = " + std::to_string(tr.times.back()) + ": "
                                    + tr.stop_reason);
    }
    const CompatibilityReport compat = compatibility_check(t, tr);
    const cplx H0 = tr.energy.front();
    const double drift_rel = tr.energy_drift / (1.0 + std::abs(H0));

    cx.score.below("energy_drift", drift_rel, 1e-8);
    cx.score.below("calibration_spread", cal.spread, 1e-6);
    cx.score.below("R_c", compat.R_c, 1e-5);
    cx.score.below("R_v", compat.R_v, 1e-5);

    cx.out.results = {{"energy_drift", tr.energy_drift},
                      {"energy_drift_relative", drift_rel},
                      {"H0", to_pair(H0)},
                      {"branch_crossings", tr.branch_crossings},
                      {"calibration_constant", to_pair(cal.constant)},
                      {"calibration_spread", cal.spread},
                      {"R_c_max", compat.R_c},
                      {"R_v_max", compat.R_v},
                      {"compatibility_samples", compat.samples},
                      {"dt", opt.dt},
                      {"T", opt.T},
                      {"N", sites}};

    Csv csv({"t", "site", "re_x", "im_x", "re_p", "im_p", "re_H", "im_H"});
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        const ChainState &s = tr.states[k];
        for (std::size_t n = 0; n < N; ++n) {
            csv.cell(tr.times[k]).cell(static_cast<long>(n)).cell(s.x[n]);
            csv.cell(momentum_from_velocity(s.xdot[n])).cell(tr.energy[k]);
            csv.end_row();
        }
    }
    cx.out.csv.push_back({"trajectory.csv", csv.str()});
}

void run_partner_solve(Context &cx)
{
    Block &p = cx.params;
    std::optional<BandedOperator> given;
    if (const json *op = p.raw("operator")) {
        try {
            given = BandedOperator::from_json(*op);
        } catch (const std::exception &e) {
            p.fail("operator", e.what());
        }
    }
    const long n_min = p.integer("n_min", given ? given->n_min() : 0, std::numeric_limits<long>::min());
    const long n_max = p.integer("n_max", given ? given->n_max() : 40, n_min);
    const int lower = static_cast<int>(p.integer("lower", 3, 0));
    const int upper = static_cast<int>(p.integer("upper", 3, 1));
    const long instances = given ? 1 : p.integer("instances", 3, 1);
    const double perturbation = given ? 0.0 : p.number("perturbation", 1e-3, true);
    const double margin = given ? 0.0 : p.number("margin", 0.5, true);
    const double s_half = given ? 0.0 : p.number("s_half", 0.5, true);
    p.finish();

    const Torus &t = cx.torus;
    Csv csv({"instance", "n", "i", "re", "im"});
    json runs = json::array();
    double worst = 0;
    double weakest_control = std::numeric_limits<double>::infinity();
    double weakest_ratio = std::numeric_limits<double>::infinity();

    for (long k = 0; k < instances; ++k) {
        json entry;
        PartnerResult r;
        if (given) {
            r = find_commuting_partner(*given, lower, upper, n_min, n_max);
        } else {
            const std::uint64_t seed = cx.seed + static_cast<std::uint64_t>(k);
            const SymmetricParams data = random_symmetric_params(t, n_min - 3, n_max + 1, seed, margin, s_half);
            r = find_commuting_partner(symmetric_L4(t, data, n_min, n_max), lower, upper, n_min, n_max);

            BandedOperator L2 = symmetric_L2(t, data, n_min - 1, n_max + 1);
            for (long n = L2.n_min(); n <= L2.n_max(); ++n) {
                L2.set(n, -1, L2.coeff(n, -1) + perturbation);
            }
            const PartnerResult control = find_commuting_partner(
                assemble_symmetric_L4(t, data, L2, n_min, n_max), lower, upper, n_min, n_max);
            const double ratio = control.residual / std::max(r.residual, std::numeric_limits<double>::min());
            weakest_control = std::min(weakest_control, control.residual);
            weakest_ratio = std::min(weakest_ratio, ratio);
            entry["seed"] = seed;
            entry["control_residual"] = control.residual;
            entry["control_ratio"] = ratio;
        }
        worst = std::max(worst, r.residual);
        entry["residual"] = r.residual;
        entry["commutator"] = r.commutator;
        entry["unknowns"] = r.unknowns;
        entry["equations"] = r.equations;
        entry["nullity"] = r.nullity;
        entry["has_partner"] = r.has_partner;
        runs.push_back(entry);
        write_operator_rows(csv, std::to_string(k), r.op);
    }

    cx.score.below("partner_residual", worst, 1e-8);
    if (!given) {
        cx.score.above("control_residual", weakest_control, 1e-4);
        cx.score.above("control_ratio", weakest_ratio, 1e4);
    }
    cx.out.results = {{"instances", runs}, {"max_partner_residual", worst}};
    if (!given) {
        cx.out.results["min_control_residual"] = weakest_control;
        cx.out.results["min_control_ratio"] = weakest_ratio;
    }
    cx.out.csv.push_back({"partners.csv", csv.str()});
}

const std::map<std::string, std::function<void(Context &)>> &experiments()
{
    static const std::map<std::string, std::function<void(Context &)>> table{
        {"elliptic-check", run_elliptic_check}, {"rank1-demo", run_rank1_demo},
        {"seprank2-demo", run_seprank2_demo},   {"tyurin-run", run_tyurin},
        {"elltoda-run", run_elltoda},           {"partner-solve", run_partner_solve},
    };
    return table;
}

json version_block()
{
    std::string compiler;
#if defined(__clang__)
    compiler = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
    compiler = std::string("g++ ") + __VERSION__;
#endif
    return {{"ellcomm", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "."
                          + std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", compiler}};
}

// --- diff -------------------------------------------------------------------

const char *kind(const json &j)
{
    if (j.is_number()) {
        return "number";
    }
    return j.type_name();
}

void diff_values(const json &a, const json &b, const std::string &path, double rel_tol,
                 std::vector<DiffEntry> &out)
{
    if (std::string(kind(a)) != kind(b)) {
        throw SchemaMismatch(path + ": " + kind(a) + " vs " + kind(b));
    }
    if (a.is_object()) {
        std::set<std::string> keys;
        for (const auto &item : a.items()) {
            keys.insert(item.key());
        }
        for (const auto &item : b.items()) {
            keys.insert(item.key());
        }
        for (const auto &key : keys) {
            const std::string sub = path.empty() ? key : path + "." + key;
            if (!a.contains(key) || !b.contains(key)) {
                out.push_back({sub, a.contains(key) ? a[key].dump() : "<missing>",
                               b.contains(key) ? b[key].dump() : "<missing>", 0.0});
                continue;
            }
            diff_values(a[key], b[key], sub, rel_tol, out);
        }
    } else if (a.is_array()) {
        if (a.size() != b.size()) {
            out.push_back({path, "length " + std::to_string(a.size()), "length " + std::to_string(b.size()), 0.0});
            return;
        }
        for (std::size_t k = 0; k < a.size(); ++k) {
            diff_values(a[k], b[k], path + "[" + std::to_string(k) + "]", rel_tol, out);
        }
    } else if (a.is_number()) {
        const double x = a.get<double>();
        const double y = b.get<double>();
        const double scale = std::max(std::abs(x), std::abs(y));
        const double gap = std::abs(x - y);
        if (gap > rel_tol * scale) {
            out.push_back({path, a.dump(), b.dump(), scale > 0 ? gap / scale : 0.0});
        }
    } else if (a != b) {
        out.push_back({path, a.dump(), b.dump(), 0.0});
    }
}

} // namespace

// --- public ----------------------------------------------------------------

bool Criterion::pass() const
{
    return bound == Bound::Below ? value < threshold : value > threshold;
}

json Criterion::to_json() const
{
    json j{{"name", name},
           {"threshold", threshold},
           {"bound", bound == Bound::Below ? "below" : "above"},
           {"pass", pass()}};
    if (std::isfinite(value)) {
        j["value"] = value;
    } else {
        j["value"] = std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
    }
    return j;
}

bool ExperimentResult::passed() const
{
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion &c) { return c.pass(); });
}

json ExperimentResult::report() const
{
    json list = json::array();
    for (const Criterion &c : criteria) {
        list.push_back(c.to_json());
    }
    return {{"experiment", experiment}, {"version", version_block()}, {"config", config},
            {"criteria", list},         {"results", results},         {"passed", passed()}};
}

ExperimentResult run_experiment(const json &config)
{
    Block top(&config, "");
    ExperimentResult out;
    std::vector<std::string> names;
    for (const auto &entry : experiments()) {
        names.push_back(entry.first);
    }
    if (!config.is_object() || !config.contains("experiment")) {
        throw ConfigInvalid("experiment: missing");
    }
    out.experiment = top.choice("experiment", "", names);

    Block torus_block(top.raw("torus"), "torus");
    const cplx omega = torus_block.complex("omega", 1.0);
    const cplx omega_prime = torus_block.complex("omega_prime", {0.0, 1.0});
    torus_block.finish();
    std::optional<Torus> torus;
    try {
        torus.emplace(omega, omega_prime);
    } catch (const InvalidTorus &e) {
        throw ConfigInvalid(std::string("torus: ") + e.what());
    }

    const long seed = top.integer("seed", 0, 0);
    std::string output_dir;
    if (top.has("output_dir")) {
        if (!config["output_dir"].is_string()) {
            top.fail("output_dir", "expected a string");
        }
        output_dir = config["output_dir"].get<std::string>();
    }
    top.raw("output_dir");
    out.output_dir = output_dir;

    const json *tolerances = top.raw("tolerances");
    if (tolerances && !tolerances->is_object()) {
        top.fail("tolerances", "expected an object");
    }
    Block params(top.raw("params"), "params");
    top.finish();

    Scorecard score;
    Context cx{*torus, static_cast<std::uint64_t>(seed), params, score, out};
    experiments().at(out.experiment)(cx);
    out.criteria = score.take();

    json applied = json::object();
    if (tolerances) {
        for (const auto &item : tolerances->items()) {
            const std::string path = "tolerances." + item.key();
            if (!item.value().is_number() || !(item.value().get<double>() > 0)) {
                throw ConfigInvalid(path + ": must be a positive number");
            }
            auto it = std::find_if(out.criteria.begin(), out.criteria.end(),
                                   [&](const Criterion &c) { return c.name == item.key(); });
            if (it == out.criteria.end()) {
                throw ConfigInvalid(path + ": no such criterion in " + out.experiment);
            }
            it->threshold = item.value().get<double>();
            applied[item.key()] = it->threshold;
        }
    }

    out.config = {{"experiment", out.experiment},
                  {"torus", torus_block.echo},
                  {"seed", seed},
                  {"tolerances", applied},
                  {"params", params.echo}};
    return out;
}

void write_artifacts(const ExperimentResult &result, const std::filesystem::path &dir)
{
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string &name, const std::string &contents) {
        std::ofstream f(dir / name, std::ios::binary);
        f << contents;
        if (!f) {
            throw std::runtime_error("cannot write " + (dir / name).string());
        }
    };
    write("report.json", result.report().dump(2) + "\n");
    for (const CsvFile &csv : result.csv) {
        write(csv.name, csv.contents);
    }
}

std::vector<Criterion> elliptic_identity_suite(const Torus &t, std::size_t points, std::uint64_t seed)
{
    const double w = std::abs(t.omega());
    const auto zs = sample_points(t, points, seed, [&](cplx z) { return t.lattice_distance(z) > 0.05 * w; });

    double ode = 0, wp_d = 0, zeta_d = 0, sigma_d = 0, wp_per = 0, zeta_per = 0, sigma_per = 0;
    for (cplx z : zs) {
        const cplx p = wp(t, z);
        const cplx dp = wp_prime(t, z);
        const cplx zz = zeta_w(t, z);
        const cplx s = sigma_w(t, z);
        ode = std::max(ode, std::abs(dp * dp - (4.0 * p * p * p - t.g2() * p - t.g3())) / (1.0 + std::pow(std::abs(p), 3)));
        wp_d = std::max(wp_d, relative(complex_derivative([&](cplx x) { return wp(t, x); }, z), dp));
        zeta_d = std::max(zeta_d, relative(complex_derivative([&](cplx x) { return zeta_w(t, x); }, z), -p));
        sigma_d = std::max(sigma_d, relative(complex_derivative([&](cplx x) { return sigma_w(t, x); }, z) / s, zz));
        for (const auto &[half, eta] : {std::pair{t.omega(), t.eta()}, std::pair{t.omega_prime(), t.eta_prime()}}) {
            wp_per = std::max(wp_per, relative(wp(t, z + 2.0 * half), p));
            zeta_per = std::max(zeta_per, std::abs(zeta_w(t, z + 2.0 * half) - zz - 2.0 * eta) / std::max(1.0, std::abs(zz)));
            const cplx shifted = sigma_w(t, z + 2.0 * half);
            sigma_per = std::max(sigma_per, std::abs(shifted + s * std::exp(2.0 * eta * (z + half))) / std::abs(shifted));
        }
    }

    // Pairs (u, v) run through the points forwards and backwards; pairs too
    // close to the singular set of F or of its logarithmic derivatives are
    // skipped.
    double two_forms = 0, log_u = 0, log_v = 0;
    for (std::size_t k = 0; k < zs.size(); ++k) {
        const cplx u = zs[k];
        const cplx v = zs[zs.size() - 1 - k];
        if (t.lattice_distance(u) < 0.1 * w || t.lattice_distance(v) < 0.1 * w || t.lattice_distance(u - v) < 0.1 * w
            || t.lattice_distance(u + v) < 0.1 * w || t.lattice_distance(2.0 * v) < 0.1 * w) {
            continue;
        }
        const cplx f = F(t, u, v);
        two_forms = std::max(two_forms, std::abs(f - F_quotient(t, u, v)) / (1.0 + std::abs(f)));
        const LogFResiduals r = logF_derivative_identities(t, u, v);
        log_u = std::max(log_u, r.residual_u);
        log_v = std::max(log_v, r.residual_v);
    }

    using B = Criterion::Bound;
    return {{"wp_ode", ode, 1e-9, B::Below},
            {"wp_derivative", wp_d, 1e-6, B::Below},
            {"zeta_derivative", zeta_d, 1e-6, B::Below},
            {"sigma_log_derivative", sigma_d, 1e-6, B::Below},
            {"wp_periodicity", wp_per, 1e-10, B::Below},
            {"zeta_quasi_period", zeta_per, 1e-10, B::Below},
            {"sigma_quasi_period", sigma_per, 1e-10, B::Below},
            {"legendre", t.legendre_residual(), 1e-10, B::Below},
            {"F_two_forms", two_forms, 1e-9, B::Below},
            {"logF_du", log_u, 1e-6, B::Below},
            {"logF_dv", log_v, 1e-6, B::Below}};
}

std::vector<DiffEntry> diff_reports(const json &a, const json &b, double rel_tol)
{
    auto experiment_of = [](const json &r) -> std::string {
        if (!r.is_object() || !r.contains("experiment") || !r["experiment"].is_string()) {
            throw SchemaMismatch("not a report: missing experiment");
        }
        return r["experiment"].get<std::string>();
    };
    const std::string ea = experiment_of(a);
    const std::string eb = experiment_of(b);
    if (ea != eb) {
        throw SchemaMismatch("experiment " + ea + " vs " + eb);
    }
    std::vector<DiffEntry> out;
    diff_values(a, b, "", rel_tol, out);
    return out;
}

bool same_verdicts(const json &a, const json &b)
{
    auto verdicts = [](const json &r) {
        std::map<std::string, bool> m;
        for (const json &c : r.at("criteria")) {
            m[c.at("name").get<std::string>()] = c.at("pass").get<bool>();
        }
        return m;
    };
    return verdicts(a) == verdicts(b);
}

} // namespace ellcomm
