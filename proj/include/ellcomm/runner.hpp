#pragma once

#include "ellcomm/elliptic.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ellcomm {

/// One pass/fail line: `value` compared against `threshold` from below
/// (value < threshold) or above (value > threshold).
struct Criterion
{
    enum class Bound
    {
        Below,
        Above
    };

    std::string name;
    double value = 0;
    double threshold = 0;
    Bound bound = Bound::Below;

    bool pass() const;
    nlohmann::json to_json() const;
};

struct CsvFile
{
    std::string name;
    std::string contents;
};

struct ExperimentResult
{
    std::string experiment;
    nlohmann::json config;   // effective configuration, defaults filled in
    std::string output_dir;  // from the config; not part of the echo
    std::vector<Criterion> criteria;
    nlohmann::json results = nlohmann::json::object();
    std::vector<CsvFile> csv;

    bool passed() const;
    /// report.json contents: experiment, versions, config echo, criteria,
    /// results and the overall flag.
    nlohmann::json report() const;
};

/// Validates `config` and runs the named experiment. Throws ConfigInvalid
/// (message carries the field path) for schema problems; module errors
/// propagate unchanged.
ExperimentResult run_experiment(const nlohmann::json &config);

/// Writes report.json and every CSV into `dir`, creating it if needed.
void write_artifacts(const ExperimentResult &result, const std::filesystem::path &dir);

/// Residuals of the Weierstrass identities at `points` deterministic points
/// of one torus: ODE for ℘, derivative relations checked by differences,
/// quasi-periodicity, Legendre relation, the two forms of F and the
/// logarithmic derivatives of F.
std::vector<Criterion> elliptic_identity_suite(const Torus &t, std::size_t points, std::uint64_t seed);

struct DiffEntry
{
    std::string path;
    std::string a, b;    // serialized values ("<missing>" if absent)
    double relative = 0; // numeric fields only
};

/// Field-wise comparison of two reports of the same experiment; numbers
/// differing by more than rel_tol·max(|a|, |b|) are listed. Throws
/// SchemaMismatch when the experiments differ or a field changes type.
std::vector<DiffEntry> diff_reports(const nlohmann::json &a, const nlohmann::json &b, double rel_tol = 1e-12);

/// True when both reports have the same criterion names with the same
/// pass flags.
bool same_verdicts(const nlohmann::json &a, const nlohmann::json &b);

} // namespace ellcomm
