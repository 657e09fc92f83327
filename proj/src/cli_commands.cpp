#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "koopsym/cli.hpp"
#include "koopsym/error.hpp"
#include "koopsym/io.hpp"
#include "koopsym/linalg.hpp"
#include "koopsym/parallel.hpp"
#include "koopsym/presets.hpp"

namespace fs = std::filesystem;

namespace koopsym::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Files are collected in memory and written only once a command succeeded,
/// so a failing run leaves nothing behind.
class Outputs {
public:
    void add(const std::string& path, std::string content) { files_.emplace_back(path, std::move(content)); }
    void add_json(const std::string& path, const json& j) { add(path, j.dump(2) + "\n"); }
    void add_matrix(const std::string& path, const CMatrix& m) {
        std::ostringstream s;
        io::write_matrix(s, m);
        add(path, s.str());
    }

    void commit() const {
        for (const auto& [path, content] : files_) {
            const fs::path p(path);
            if (p.has_parent_path()) fs::create_directories(p.parent_path());
            std::ofstream out(p, std::ios::binary);
            require(out.good(), ErrorKind::Io, "cannot write '" + path + "'");
            out << content;
            require(out.good(), ErrorKind::Io, "write to '" + path + "' failed");
        }
    }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string eigenvalue_csv(const std::vector<cplx>& values) {
    std::string out;
    for (const auto& z : values) out += io::format_double(z.real()) + "," + io::format_double(z.imag()) + "\n";
    return out;
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

ExperimentConfig config_or_default(const std::string& path) {
    return path.empty() ? ExperimentConfig{} : load_config(path);
}

void use_snapshot_file(ExperimentConfig& c, const std::string& data) {
    if (data.empty()) return;
    c.system.kind = "file";
    c.system.path = data;
}

/// Defaults of the noise command: Z2 linear benchmark.
ExperimentConfig noise_defaults() {
    ExperimentConfig c;
    c.system.kind = "z2_linear";
    c.system.initial_conditions = 200;
    c.system.half_width = 1.0;
    c.group.preset.clear();
    c.group.kind = "cyclic";
    c.group.n = 2;
    c.group.generators = {-RMatrix::Identity(2, 2)};
    c.dictionary.type = "monomial";
    c.dictionary.max_degree = 3;
    return c;
}

struct Problem {
    ExperimentConfig config;
    dynamics::SnapshotSet base;
    dynamics::SnapshotSet data;
    groups::GroupAction action;
};

Problem load_problem(const ExperimentConfig& c) {
    validate(c);
    auto base = base_snapshots(c);
    auto data = prepared_snapshots(c, base);
    return {c, std::move(base), std::move(data), build_group(c.group)};
}

edmd::Solver solver_of(const ExperimentConfig& c) {
    return c.method.solver == "gram" ? edmd::Solver::Gram : edmd::Solver::Direct;
}

struct EdmdRun {
    dictionaries::Dictionary dict;
    edmd::KoopmanModel model;
    std::optional<groups::IsotypicTransform> transform;
};

EdmdRun fit_edmd(const Problem& p, bool block) {
    auto dict = build_dictionary(p.config, p.base, p.action);
    const auto& index_action = dict.group()->index_action;
    if (!block) {
        auto model = edmd::edmd_fit(dict.evaluate(p.data.X), dict.evaluate(p.data.Y), p.config.rcond, solver_of(p.config));
        model.basis_ref = "dictionary";
        model.assumed_group = p.action.group().name();
        model.commutant_residual = edmd::commutant_residual(model.K, index_action);
        return {std::move(dict), std::move(model), std::nullopt};
    }
    auto t = groups::unitary_isotypic_transform(index_action);
    const auto xi = dictionaries::apply_isotypic(dict, t);
    edmd::BlockOptions opts;
    opts.rcond = p.config.rcond;
    opts.solver = solver_of(p.config);
    auto model = edmd::block_edmd_fit(xi.evaluate(p.data.X), xi.evaluate(p.data.Y), t.layout, opts);
    model.basis_ref = "isotypic";
    model.assumed_group = p.action.group().name();
    for (const auto& w : t.warnings) model.warnings.push_back(w);
    return {std::move(dict), std::move(model), std::move(t)};
}

int cmd_simulate(const std::string& config_path, const std::string& out_path, std::optional<int> ics,
                 std::optional<std::uint64_t> seed, std::ostream& out) {
    auto c = config_or_default(config_path);
    if (ics) c.system.initial_conditions = *ics;
    if (seed) c.seeds.initial_conditions = *seed;
    require(c.system.kind != "file", ErrorKind::Config, "simulate needs a duffing or z2_linear system");
    validate(c);
    const auto base = base_snapshots(c);
    std::ostringstream s;
    io::write_snapshots(s, base);
    Outputs o;
    o.add(out_path, s.str());
    o.commit();
    out << "wrote " << base.pairs() << " snapshot pairs to " << out_path << "\n";
    return kSuccess;
}

int cmd_symmetrize(const std::string& in_path, const std::string& out_path, const std::string& group,
                   const std::string& config_path, std::ostream& out) {
    const auto base = io::read_snapshots(in_path);
    const auto action = [&] {
        if (!group.empty()) {
            GroupConfig g;
            g.preset = group;
            return build_group(g);
        }
        return build_group(config_or_default(config_path).group);
    }();
    require(action.dim() == base.dim(), ErrorKind::Config, "group does not act on the snapshot dimension");
    const auto sym = dynamics::symmetrize_snapshots(base, action);
    std::ostringstream s;
    io::write_snapshots(s, sym);
    Outputs o;
    o.add(out_path, s.str());
    o.commit();
    out << "wrote " << sym.pairs() << " symmetrized pairs (residual "
        << dynamics::symmetry_residual(sym, action) << ") to " << out_path << "\n";
    return kSuccess;
}

int cmd_dict(const std::string& config_path, const std::string& data, const std::string& out_path,
             const std::string& eval_path, std::ostream& out) {
    auto c = config_or_default(config_path);
    use_snapshot_file(c, data);
    const auto p = load_problem(c);
    const auto dict = build_dictionary(c, p.base, p.action);
    const auto t = groups::unitary_isotypic_transform(dict.group()->index_action);

    json labels = json::array(), centers = json::array();
    for (const auto& ob : dict.observables()) {
        labels.push_back(ob.label);
        if (ob.kind == dictionaries::ObservableKind::Rbf) {
            json row = json::array();
            for (Eigen::Index k = 0; k < ob.center.size(); ++k) row.push_back(ob.center(k));
            centers.push_back(row);
        }
    }
    json layout = json::array();
    for (const auto& s : t.layout)
        layout.push_back({{"irrep", s.irrep}, {"irrep_name", p.action.group().irrep(s.irrep).name},
                          {"copy", s.copy}, {"size", s.size}});
    json j{{"format_version", kFormatVersion},
           {"type", dict.kind_name()},
           {"state_dim", dict.state_dim()},
           {"size", dict.size()},
           {"orbits", dict.group()->orbit_count},
           {"labels", labels},
           {"centers", centers},
           {"group", group_to_json(p.action)},
           {"block_layout", layout},
           {"warnings", t.warnings}};
    Outputs o;
    o.add_json(out_path, j);
    if (!eval_path.empty()) o.add_matrix(eval_path, dict.evaluate(p.data.X));
    o.commit();
    out << "dictionary of " << dict.size() << " observables, " << t.layout.size() << " blocks\n";
    return kSuccess;
}

int fit_kdmd(const Problem& p, const std::string& dir, std::ostream& out) {
    const auto& c = p.config;
    require(p.data.pairs() <= c.method.max_kernel_pairs, ErrorKind::Config,
            "kernel fit on " + std::to_string(p.data.pairs()) + " pairs exceeds max_kernel_pairs = " +
                std::to_string(c.method.max_kernel_pairs));
    std::optional<dictionaries::Dictionary> dict;
    if (c.method.kernel == "dictionary") dict = build_dictionary(c, p.base, p.action);
    const auto kernel = kdmd::Kernel::parse(c.method.kernel, dict ? &*dict : nullptr);
    const auto t0 = Clock::now();
    kdmd::DualModel model = [&] {
        if (c.method.mode == "block") {
            kdmd::BlockKdmdOptions opts;
            opts.rcond = c.rcond;
            return kdmd::block_kdmd_fit(kernel, p.data, p.action, opts);
        }
        return kdmd::kdmd_fit(kernel, p.data, c.rcond);
    }();
    const double fit_seconds = seconds_since(t0);

    json mj = dual_model_json(model);
    Outputs o;
    if (c.method.verify && c.method.mode == "block") {
        const auto dense = kdmd::kdmd_fit(kernel, p.data, c.rcond);
        const double dev = multiset_distance(model.eigenvalues(), dense.eigenvalues());
        mj["verification"] = {{"dense_rank", dense.rank()}, {"eigenvalue_deviation", dev}};
        require(dense.rank() == model.rank() && dev < 1e-6, ErrorKind::Symmetry,
                "block kernel fit disagrees with the dense fit (deviation " + std::to_string(dev) + ")");
    }
    o.add_json(path_in(dir, "model.json"), mj);
    o.add_matrix(path_in(dir, "Khat.csv"), model.Khat());
    o.add(path_in(dir, "eigenvalues.csv"), eigenvalue_csv(model.eigenvalues()));
    o.add_matrix(path_in(dir, "sigma.csv"), model.sigma.cast<cplx>());
    o.add_matrix(path_in(dir, "modes.csv"), kdmd::dual_modes(model));
    o.add_json(path_in(dir, "timing.json"), {{"fit_seconds", fit_seconds}});
    o.commit();
    out << "kernel fit: rank " << model.rank() << ", " << model.eigenvalues().size() << " eigenvalues\n";
    return kSuccess;
}

int cmd_fit(ExperimentConfig c, const std::string& data, const std::string& dir, std::ostream& out) {
    use_snapshot_file(c, data);
    const auto p = load_problem(c);
    if (c.method.algorithm == "kdmd") return fit_kdmd(p, dir, out);

    const bool block = c.method.mode == "block";
    const auto t0 = Clock::now();
    auto run = fit_edmd(p, block);
    const double fit_seconds = seconds_since(t0);
    const auto& m = run.model;

    json mj = model_json(m, &p.action.group());
    json timing{{"fit_seconds", fit_seconds}, {"eig_seconds", m.eig_seconds}, {"block_seconds", m.block_seconds}};
    if (c.method.verify && block) {
        const auto t1 = Clock::now();
        const auto dense = fit_edmd(p, false);
        timing["dense_fit_seconds"] = seconds_since(t1);
        const double dev = multiset_distance(m.eigenvalues, dense.model.eigenvalues);
        const CMatrix k_source = edmd::to_source_basis(m.K, run.transform->matrix);
        const double kdiff = (k_source - dense.model.K).norm() / std::max(dense.model.K.norm(), 1e-300);
        mj["verification"] = {{"blocks", m.layout.size()},
                              {"dense_rank_of_G", dense.model.rank_of_G},
                              {"eigenvalue_deviation", dev},
                              {"relative_K_difference", kdiff},
                              {"dense_commutant_residual", dense.model.commutant_residual}};
        require(dev < 1e-6, ErrorKind::Symmetry,
                "block fit disagrees with the dense fit (eigenvalue deviation " + std::to_string(dev) + ")");
    }
    Outputs o;
    o.add_json(path_in(dir, "model.json"), mj);
    o.add_matrix(path_in(dir, "K.csv"), m.K);
    if (block) o.add_matrix(path_in(dir, "transform.csv"), run.transform->matrix);
    o.add(path_in(dir, "eigenvalues.csv"), eigenvalue_csv(m.eigenvalues));
    o.add_matrix(path_in(dir, "right_eigenvectors.csv"), m.right_eigenvectors);
    o.add_matrix(path_in(dir, "left_eigenvectors.csv"), m.left_eigenvectors);
    o.add_json(path_in(dir, "timing.json"), timing);
    o.commit();
    out << (block ? "block" : "dense") << " fit: " << m.size() << " observables";
    if (block) out << ", " << m.layout.size() << " blocks";
    out << ", rank " << m.rank_of_G << "\n";
    for (const auto& w : m.warnings) out << "warning: " << w << "\n";
    return kSuccess;
}

int cmd_analyze(ExperimentConfig c, const std::string& data, const std::string& dir, const std::string& tau_arg,
                std::ostream& out) {
    use_snapshot_file(c, data);
    const auto p = load_problem(c);
    const auto dict = build_dictionary(c, p.base, p.action);
    const auto t = groups::isotypic_transform(dict.group()->index_action);
    const CMatrix tt = t.matrix.transpose();
    const CMatrix xx = dict.evaluate(p.data.X) * tt, xy = dict.evaluate(p.data.Y) * tt;
    const auto model = edmd::edmd_fit(xx, xy, c.rcond, solver_of(c));

    double tau = c.tau;
    bool tau_auto = false;
    if (tau_arg == "auto") {
        tau_auto = true;
        tau = analysis::bootstrap_noise_floor(xx, xy, t.component_sizes(), 50, c.seeds.noise);
    } else if (!tau_arg.empty()) {
        try {
            tau = std::stod(tau_arg);
        } catch (const std::exception&) {
            fail(ErrorKind::Config, "--tau must be a number or auto");
        }
        require(tau > 0.0, ErrorKind::Config, "--tau must be positive");
    }
    const auto observed = analysis::component_pattern(model.K, t, p.action.group(), tau);

    std::vector<analysis::InteractionPrediction> predictions;
    const auto names = c.candidates.empty() ? presets::network_group_names() : c.candidates;
    for (const auto& name : names) {
        const auto gamma = presets::network_action(name);
        if (gamma.dim() != p.action.dim()) continue;
        try {
            predictions.push_back(analysis::predict_interactions(p.action, gamma));
        } catch (const Error& e) {
            if (!c.candidates.empty())
                fail(ErrorKind::Config, "candidate '" + name + "' is not a subgroup of the assumed group");
        }
    }
    const auto ranked = analysis::infer_symmetry(observed, predictions);

    json cands = json::array();
    for (const auto& r : ranked)
        cands.push_back({{"group", r.name},
                         {"score", r.score},
                         {"tied", r.tied},
                         {"predicted_zero", r.predicted_zero},
                         {"matched_zero", r.matched_zero},
                         {"predicted_nonzero", r.predicted_nonzero},
                         {"missing_nonzero", r.missing_nonzero}});
    json report{{"format_version", kFormatVersion}, {"assumed_group", p.action.group().name()},
                {"tau_auto", tau_auto}};
    report.update(pattern_json(observed));
    report["rank_of_G"] = model.rank_of_G;
    report["candidates"] = cands;
    report["warnings"] = model.warnings;

    Outputs o;
    o.add_json(path_in(dir, "report.json"), report);
    o.add_matrix(path_in(dir, "residuals.csv"), observed.residuals.cast<cplx>());
    o.commit();
    if (!ranked.empty()) {
        out << "best candidate: " << ranked.front().name << " (score " << ranked.front().score << ")";
        if (ranked.front().tied) out << ", tied";
        out << "\n";
    }
    return kSuccess;
}

int cmd_noise(const std::string& config_path, const std::string& out_path, std::optional<double> scale,
              std::optional<int> realizations, std::optional<std::uint64_t> seed, std::ostream& out) {
    auto c = config_path.empty() ? noise_defaults() : load_config(config_path);
    if (scale) c.noise.scale = *scale;
    if (realizations) c.noise.realizations = *realizations;
    if (seed) c.seeds.noise = *seed;
    const auto p = load_problem(c);
    auto dict = build_dictionary(c, p.base, p.action);
    auto t = groups::isotypic_transform(dict.group()->index_action);
    const analysis::NoiseSetup setup{p.data, p.action, std::move(dict), std::move(t)};
    analysis::NoiseOptions opts;
    opts.noise_scale = c.noise.scale;
    opts.realizations = c.noise.realizations;
    opts.seed = c.seeds.noise;
    opts.rcond = c.rcond;
    opts.sigmas = c.noise.sigmas;
    const auto report = analysis::noise_experiment(setup, opts);
    Outputs o;
    o.add_json(out_path, noise_json(report));
    o.commit();
    out << "noise " << report.noise_scale << ": " << report.used << " realizations, fraction consistent "
        << report.fraction_consistent << (report.consistent ? "" : " (inconsistent)") << "\n";
    for (const auto& w : report.warnings) out << "warning: " << w << "\n";
    return kSuccess;
}

int cmd_verify(ExperimentConfig c, const std::string& data, const std::string& out_path, std::ostream& out) {
    use_snapshot_file(c, data);
    const auto p = load_problem(c);
    const double data_residual = dynamics::symmetry_residual(p.data, p.action);
    const auto block = fit_edmd(p, true);
    const auto dense = fit_edmd(p, false);
    const double dev = multiset_distance(block.model.eigenvalues, dense.model.eigenvalues);
    const double scale = std::max(1.0, p.data.X.cwiseAbs().maxCoeff());
    const bool ok = data_residual <= 1e-10 * scale && dev < 1e-6 && dense.model.commutant_residual < 1e-6;
    json j{{"format_version", kFormatVersion},
           {"assumed_group", p.action.group().name()},
           {"data_symmetry_residual", data_residual},
           {"eigenvalue_deviation", dev},
           {"dense_commutant_residual", dense.model.commutant_residual},
           {"block_commutant_residual", block.model.commutant_residual >= 0 ? json(block.model.commutant_residual)
                                                                           : json(nullptr)},
           {"blocks", block.model.layout.size()},
           {"passed", ok}};
    if (!out_path.empty()) {
        Outputs o;
        o.add_json(out_path, j);
        o.commit();
    }
    out << j.dump(2) << "\n";
    require(ok, ErrorKind::Symmetry, "data or fitted operator is not symmetric under " + p.action.group().name());
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Symmetry-aware Koopman operator approximation"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    std::string config, data, out_path, in_path, group, eval_path, tau_arg;
    std::optional<int> ics, realizations;
    std::optional<std::uint64_t> seed;
    std::optional<double> scale, rcond;
    std::string mode, method, kernel, solver;
    bool verify = false;

    auto* sim = app.add_subcommand("simulate", "integrate the configured system and write snapshot pairs");
    sim->add_option("--config", config, "experiment config (JSON)");
    sim->add_option("--out", out_path, "snapshot file")->required();
    sim->add_option("--ics", ics, "number of initial conditions");
    sim->add_option("--seed", seed, "initial condition seed");

    auto* sym = app.add_subcommand("symmetrize", "add the group images of every snapshot pair");
    sym->add_option("--in", in_path, "snapshot file")->required();
    sym->add_option("--out", out_path, "output snapshot file")->required();
    sym->add_option("--group", group, "network group name");
    sym->add_option("--config", config, "take the group from this config");

    auto* dic = app.add_subcommand("dict", "build the symmetry-closed dictionary");
    dic->add_option("--config", config, "experiment config (JSON)");
    dic->add_option("--data", data, "snapshot file overriding the configured system");
    dic->add_option("--out", out_path, "dictionary JSON")->required();
    dic->add_option("--eval", eval_path, "also write the dictionary evaluated on the data (CSV)");

    auto* fit = app.add_subcommand("fit", "fit a Koopman approximation");
    fit->add_option("--config", config, "experiment config (JSON)");
    fit->add_option("--data", data, "snapshot file overriding the configured system");
    fit->add_option("--out", out_path, "output directory")->required();
    fit->add_option("--mode", mode, "dense | block");
    fit->add_option("--method", method, "edmd | kdmd");
    fit->add_option("--kernel", kernel, "polyN | dictionary");
    fit->add_option("--solver", solver, "direct | gram");
    fit->add_option("--rcond", rcond, "relative pseudoinverse cutoff");
    fit->add_flag("--verify", verify, "compare a block fit against the dense fit");

    auto* ana = app.add_subcommand("analyze", "block pattern and symmetry inference");
    ana->add_option("--config", config, "experiment config (JSON)");
    ana->add_option("--data", data, "snapshot file overriding the configured system");
    ana->add_option("--out", out_path, "output directory")->required();
    ana->add_option("--tau", tau_arg, "interaction threshold, a number or auto");

    auto* noi = app.add_subcommand("noise", "off-block statistics under sensor noise");
    noi->add_option("--config", config, "experiment config (JSON); default is the Z2 linear benchmark");
    noi->add_option("--out", out_path, "report JSON")->required();
    noi->add_option("--scale", scale, "noise standard deviation");
    noi->add_option("--realizations", realizations, "number of noise realizations");
    noi->add_option("--seed", seed, "noise seed");

    auto* ver = app.add_subcommand("verify", "check data and operator symmetry");
    ver->add_option("--config", config, "experiment config (JSON)");
    ver->add_option("--data", data, "snapshot file overriding the configured system");
    ver->add_option("--out", out_path, "optional report JSON");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kConfigError;
    }

    try {
        set_max_threads(threads);
        const auto with_overrides = [&] {
            auto c = config_or_default(config);
            if (!mode.empty()) c.method.mode = mode;
            if (!method.empty()) c.method.algorithm = method;
            if (!kernel.empty()) c.method.kernel = kernel;
            if (!solver.empty()) c.method.solver = solver;
            if (rcond) c.rcond = *rcond;
            if (verify) c.method.verify = true;
            return c;
        };
        if (*sim) return cmd_simulate(config, out_path, ics, seed, out);
        if (*sym) {
            require(group.empty() != config.empty(), ErrorKind::Config, "symmetrize needs exactly one of --group, --config");
            return cmd_symmetrize(in_path, out_path, group, config, out);
        }
        if (*dic) return cmd_dict(config, data, out_path, eval_path, out);
        if (*fit) return cmd_fit(with_overrides(), data, out_path, out);
        if (*ana) return cmd_analyze(config_or_default(config), data, out_path, tau_arg, out);
        if (*noi) return cmd_noise(config, out_path, scale, realizations, seed, out);
        if (*ver) return cmd_verify(config_or_default(config), data, out_path, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }
    return kConfigError;
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace koopsym::cli
