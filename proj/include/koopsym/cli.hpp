#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "koopsym/analysis.hpp"
#include "koopsym/dictionaries.hpp"
#include "koopsym/dynamics.hpp"
#include "koopsym/edmd.hpp"
#include "koopsym/error.hpp"
#include "koopsym/groups.hpp"
#include "koopsym/kdmd.hpp"

namespace koopsym::cli {

using json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 2,
    kNumericalFailure = 3,
    kSymmetryFailure = 4,
};

int exit_code(ErrorKind kind);

struct SystemConfig {
    std::string kind = "duffing";  ///< duffing | file | z2_linear
    std::string scheme = "equal";  ///< equal | ring | swap, ignored when eta is given
    double a = 1.0;
    double b = 0.5;
    double alpha = 1.0;
    double beta = -1.0;
    double sigma = 0.5;
    std::optional<RMatrix> eta;
    int initial_conditions = 500;
    int steps = 10;
    double dt = 0.01;
    double half_width = 2.0;
    std::string path;  ///< snapshot file for kind = file
    /// "auto" (the scheme's own group for duffing, none otherwise), "none",
    /// or a network group name.
    std::string symmetrize = "auto";
};

/// Either a network preset name or an explicit construction.
struct GroupConfig {
    std::string preset = "Z2xD3";
    std::string kind;  ///< cyclic | dihedral | product | file; empty means preset
    int n = 0;
    std::vector<GroupConfig> factors;
    std::vector<RMatrix> generators;  ///< state matrices, one per generator
    std::string path;                 ///< serialized group for kind = file
};

struct DictionaryConfig {
    std::string type = "rbf";  ///< rbf | monomial | linear
    int centers = 10;
    int max_degree = 3;
};

struct MethodConfig {
    std::string algorithm = "edmd";  ///< edmd | kdmd
    std::string mode = "dense";      ///< dense | block
    std::string solver = "direct";   ///< direct | gram
    std::string kernel = "poly2";    ///< polyN | dictionary
    bool verify = false;
    int max_kernel_pairs = 20000;
};

struct NoiseConfig {
    double scale = 0.01;
    int realizations = 200;
    double sigmas = 4.0;
};

struct SeedConfig {
    std::uint64_t initial_conditions = 0;
    std::uint64_t centers = 1;
    std::uint64_t noise = 0;
};

struct ExperimentConfig {
    int format_version = kFormatVersion;
    SystemConfig system;
    GroupConfig group;
    DictionaryConfig dictionary;
    MethodConfig method;
    double rcond = 1e-10;
    double tau = 1e-6;
    /// Candidate groups for analyze; empty means every network group that
    /// embeds into the assumed group.
    std::vector<std::string> candidates;
    NoiseConfig noise;
    SeedConfig seeds;
    std::string output = "koopsym_out";
};

json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::string& path);
/// Throws Config on unknown names, missing files and dimension mismatches.
void validate(const ExperimentConfig& c);

groups::GroupAction build_group(const GroupConfig& g);
json group_to_json(const groups::GroupAction& action);
groups::GroupAction group_from_json(const json& j);

json complex_list(const std::vector<cplx>& v);
json matrix_json(const RMatrix& m);

/// Snapshots described by the config, before symmetrization.
dynamics::SnapshotSet base_snapshots(const ExperimentConfig& c);
/// Base snapshots symmetrized as the config says.
dynamics::SnapshotSet prepared_snapshots(const ExperimentConfig& c, const dynamics::SnapshotSet& base);
dictionaries::Dictionary build_dictionary(const ExperimentConfig& c, const dynamics::SnapshotSet& base,
                                          const groups::GroupAction& action);

json model_json(const edmd::KoopmanModel& m, const groups::FiniteGroup* group);
json dual_model_json(const kdmd::DualModel& m);
json pattern_json(const analysis::BlockPattern& p);
json noise_json(const analysis::NoiseReport& r);

/// Runs the command line; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace koopsym::cli
