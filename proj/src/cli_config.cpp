#include <filesystem>
#include <fstream>
#include <set>

#include "koopsym/cli.hpp"
#include "koopsym/error.hpp"
#include "koopsym/io.hpp"
#include "koopsym/presets.hpp"

namespace koopsym::cli {

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    require(j.is_object(), ErrorKind::Config, where + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        require(allowed.count(key) > 0, ErrorKind::Config, "unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& target, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("bad value for '") + key + "' in " + where + ": " + e.what());
    }
}

RMatrix real_matrix_from(const json& j, const std::string& where) {
    require(j.is_array() && !j.empty() && j.front().is_array(), ErrorKind::Config,
            where + " must be a non-empty list of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    RMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        require(j[i].is_array() && static_cast<Eigen::Index>(j[i].size()) == cols, ErrorKind::Config,
                where + " has ragged rows");
        for (Eigen::Index k = 0; k < cols; ++k) {
            require(j[i][k].is_number(), ErrorKind::Config, where + " holds a non-number");
            m(i, k) = j[i][k].get<double>();
        }
    }
    return m;
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from(const json& j) {
    require(j.is_array() && j.size() == 2, ErrorKind::Config, "complex numbers are [re, im] pairs");
    return {j[0].get<double>(), j[1].get<double>()};
}

json cmatrix_json(const CMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_json(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix cmatrix_from(const json& j) {
    require(j.is_array(), ErrorKind::Config, "matrix must be a list of rows");
    if (j.empty()) return CMatrix(0, 0);
    CMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        require(static_cast<Eigen::Index>(j[i].size()) == m.cols(), ErrorKind::Config, "matrix has ragged rows");
        for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = complex_from(j[i][k]);
    }
    return m;
}

json group_config_json(const GroupConfig& g) {
    if (g.kind.empty()) return json{{"preset", g.preset}};
    json out{{"kind", g.kind}};
    if (g.kind == "file") {
        out["path"] = g.path;
        return out;
    }
    if (g.kind != "product") out["n"] = g.n;
    if (!g.factors.empty()) {
        out["factors"] = json::array();
        for (const auto& f : g.factors) out["factors"].push_back(group_config_json(f));
    }
    if (!g.generators.empty()) {
        out["generators"] = json::array();
        for (const auto& m : g.generators) out["generators"].push_back(matrix_json(m));
    }
    return out;
}

GroupConfig group_config_from(const json& j) {
    check_keys(j, "group", {"preset", "kind", "n", "factors", "generators", "path"});
    GroupConfig g;
    if (!j.contains("kind")) {
        read(j, "preset", g.preset, "group");
        return g;
    }
    g.preset.clear();
    read(j, "kind", g.kind, "group");
    read(j, "n", g.n, "group");
    read(j, "path", g.path, "group");
    if (j.contains("factors"))
        for (const auto& f : j.at("factors")) g.factors.push_back(group_config_from(f));
    if (j.contains("generators"))
        for (const auto& m : j.at("generators")) g.generators.push_back(real_matrix_from(m, "group generator"));
    return g;
}

groups::GroupPtr abstract_group(const GroupConfig& g) {
    if (g.kind == "cyclic") {
        require(g.n >= 1, ErrorKind::Config, "cyclic group needs n >= 1");
        return groups::build_cyclic(g.n);
    }
    if (g.kind == "dihedral") {
        require(g.n >= 2, ErrorKind::Config, "dihedral group needs n >= 2");
        return groups::build_dihedral(g.n);
    }
    if (g.kind == "product") {
        require(g.factors.size() == 2, ErrorKind::Config, "product group needs exactly two factors");
        return groups::direct_product(abstract_group(g.factors[0]), abstract_group(g.factors[1]));
    }
    fail(ErrorKind::Config, "unknown group kind '" + g.kind + "'");
}

std::vector<RMatrix> generator_matrices(const GroupConfig& g) {
    if (!g.generators.empty() || g.kind != "product") return g.generators;
    std::vector<RMatrix> out;
    for (const auto& f : g.factors) {
        const auto part = generator_matrices(f);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

bool is_network_group(const std::string& name) {
    for (const auto& n : presets::network_group_names())
        if (n == name) return true;
    return false;
}

int system_dim(const ExperimentConfig& c) {
    const auto& s = c.system;
    if (s.kind == "duffing") return s.eta ? 2 * static_cast<int>(s.eta->rows()) : 6;
    if (s.kind == "z2_linear") return 2;
    std::ifstream in(s.path);
    require(in.good(), ErrorKind::Config, "snapshot file '" + s.path + "' does not exist");
    std::string header;
    std::getline(in, header);
    const auto pos = header.find("n=");
    require(pos != std::string::npos, ErrorKind::Config, "snapshot file '" + s.path + "' has no n= header field");
    return std::stoi(header.substr(pos + 2));
}

/// Group used to symmetrize data, if any.
std::optional<groups::GroupAction> symmetrizing_action(const ExperimentConfig& c) {
    const auto& s = c.system;
    if (s.symmetrize == "none") return std::nullopt;
    if (s.symmetrize == "auto") {
        if (s.kind == "duffing" && !s.eta) return presets::network_action(presets::scheme_group(s.scheme));
        if (s.kind == "z2_linear") return build_group(c.group);
        return std::nullopt;
    }
    if (s.symmetrize == "group") return build_group(c.group);
    require(is_network_group(s.symmetrize), ErrorKind::Config, "unknown symmetrize value '" + s.symmetrize + "'");
    return presets::network_action(s.symmetrize);
}

}  // namespace

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Numerical:
    case ErrorKind::Divergence:
        return kNumericalFailure;
    case ErrorKind::Symmetry:
        return kSymmetryFailure;
    default:
        return kConfigError;
    }
}

json matrix_json(const RMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

json complex_list(const std::vector<cplx>& v) {
    json out = json::array();
    for (const auto& z : v) out.push_back(complex_json(z));
    return out;
}

json to_json(const ExperimentConfig& c) {
    const auto& s = c.system;
    json system{{"kind", s.kind},
                {"scheme", s.scheme},
                {"a", s.a},
                {"b", s.b},
                {"alpha", s.alpha},
                {"beta", s.beta},
                {"sigma", s.sigma},
                {"initial_conditions", s.initial_conditions},
                {"steps", s.steps},
                {"dt", s.dt},
                {"half_width", s.half_width},
                {"path", s.path},
                {"symmetrize", s.symmetrize}};
    if (s.eta) system["eta"] = matrix_json(*s.eta);
    return json{
        {"format_version", c.format_version},
        {"system", system},
        {"group", group_config_json(c.group)},
        {"dictionary",
         {{"type", c.dictionary.type}, {"centers", c.dictionary.centers}, {"max_degree", c.dictionary.max_degree}}},
        {"method",
         {{"algorithm", c.method.algorithm},
          {"mode", c.method.mode},
          {"solver", c.method.solver},
          {"kernel", c.method.kernel},
          {"verify", c.method.verify},
          {"max_kernel_pairs", c.method.max_kernel_pairs}}},
        {"rcond", c.rcond},
        {"tau", c.tau},
        {"candidates", c.candidates},
        {"noise", {{"scale", c.noise.scale}, {"realizations", c.noise.realizations}, {"sigmas", c.noise.sigmas}}},
        {"seeds",
         {{"initial_conditions", c.seeds.initial_conditions},
          {"centers", c.seeds.centers},
          {"noise", c.seeds.noise}}},
        {"output", c.output},
    };
}

ExperimentConfig config_from_json(const json& j) {
    check_keys(j, "config",
               {"format_version", "system", "group", "dictionary", "method", "rcond", "tau", "candidates", "noise",
                "seeds", "output"});
    ExperimentConfig c;
    read(j, "format_version", c.format_version, "config");
    require(c.format_version == kFormatVersion, ErrorKind::Config,
            "unsupported format_version " + std::to_string(c.format_version));
    if (j.contains("system")) {
        const json& s = j.at("system");
        check_keys(s, "system",
                   {"kind", "scheme", "a", "b", "alpha", "beta", "sigma", "eta", "initial_conditions", "steps", "dt",
                    "half_width", "path", "symmetrize"});
        auto& t = c.system;
        read(s, "kind", t.kind, "system");
        read(s, "scheme", t.scheme, "system");
        read(s, "a", t.a, "system");
        read(s, "b", t.b, "system");
        read(s, "alpha", t.alpha, "system");
        read(s, "beta", t.beta, "system");
        read(s, "sigma", t.sigma, "system");
        read(s, "initial_conditions", t.initial_conditions, "system");
        read(s, "steps", t.steps, "system");
        read(s, "dt", t.dt, "system");
        read(s, "half_width", t.half_width, "system");
        read(s, "path", t.path, "system");
        read(s, "symmetrize", t.symmetrize, "system");
        if (s.contains("eta")) t.eta = real_matrix_from(s.at("eta"), "system.eta");
    }
    if (j.contains("group")) c.group = group_config_from(j.at("group"));
    if (j.contains("dictionary")) {
        const json& d = j.at("dictionary");
        check_keys(d, "dictionary", {"type", "centers", "max_degree"});
        read(d, "type", c.dictionary.type, "dictionary");
        read(d, "centers", c.dictionary.centers, "dictionary");
        read(d, "max_degree", c.dictionary.max_degree, "dictionary");
    }
    if (j.contains("method")) {
        const json& m = j.at("method");
        check_keys(m, "method", {"algorithm", "mode", "solver", "kernel", "verify", "max_kernel_pairs"});
        read(m, "algorithm", c.method.algorithm, "method");
        read(m, "mode", c.method.mode, "method");
        read(m, "solver", c.method.solver, "method");
        read(m, "kernel", c.method.kernel, "method");
        read(m, "verify", c.method.verify, "method");
        read(m, "max_kernel_pairs", c.method.max_kernel_pairs, "method");
    }
    read(j, "rcond", c.rcond, "config");
    read(j, "tau", c.tau, "config");
    read(j, "candidates", c.candidates, "config");
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        check_keys(n, "noise", {"scale", "realizations", "sigmas"});
        read(n, "scale", c.noise.scale, "noise");
        read(n, "realizations", c.noise.realizations, "noise");
        read(n, "sigmas", c.noise.sigmas, "noise");
    }
    if (j.contains("seeds")) {
        const json& s = j.at("seeds");
        check_keys(s, "seeds", {"initial_conditions", "centers", "noise"});
        read(s, "initial_conditions", c.seeds.initial_conditions, "seeds");
        read(s, "centers", c.seeds.centers, "seeds");
        read(s, "noise", c.seeds.noise, "seeds");
    }
    read(j, "output", c.output, "config");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Config, "cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Config, "config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

void validate(const ExperimentConfig& c) {
    const auto& s = c.system;
    const std::set<std::string> kinds{"duffing", "file", "z2_linear"};
    require(kinds.count(s.kind) > 0, ErrorKind::Config, "unknown system kind '" + s.kind + "'");
    if (s.kind == "duffing") {
        if (s.eta) {
            require(s.eta->rows() == s.eta->cols() && s.eta->rows() >= 1, ErrorKind::Config, "eta must be square");
        } else {
            presets::scheme_group(s.scheme);
        }
    }
    if (s.kind != "file") {
        require(s.initial_conditions >= 1, ErrorKind::Config, "initial_conditions must be >= 1");
        require(s.steps >= 1, ErrorKind::Config, "steps must be >= 1");
        require(s.dt > 0.0, ErrorKind::Config, "dt must be positive");
        require(s.half_width > 0.0, ErrorKind::Config, "half_width must be positive");
    } else {
        require(std::filesystem::exists(s.path), ErrorKind::Config, "snapshot file '" + s.path + "' does not exist");
    }
    const int dim = system_dim(c);
    const auto action = build_group(c.group);
    require(action.dim() == dim, ErrorKind::Config,
            "group acts on dimension " + std::to_string(action.dim()) + ", system has " + std::to_string(dim));
    if (const auto sym = symmetrizing_action(c))
        require(sym->dim() == dim, ErrorKind::Config, "symmetrizing group does not match the system dimension");

    const std::set<std::string> types{"rbf", "monomial", "linear"};
    require(types.count(c.dictionary.type) > 0, ErrorKind::Config,
            "unknown dictionary type '" + c.dictionary.type + "'");
    if (c.dictionary.type == "rbf") require(c.dictionary.centers >= 1, ErrorKind::Config, "centers must be >= 1");
    if (c.dictionary.type == "monomial")
        require(c.dictionary.max_degree >= 0, ErrorKind::Config, "max_degree must be >= 0");

    require(c.method.algorithm == "edmd" || c.method.algorithm == "kdmd", ErrorKind::Config,
            "method.algorithm must be edmd or kdmd");
    require(c.method.mode == "dense" || c.method.mode == "block", ErrorKind::Config,
            "method.mode must be dense or block");
    require(c.method.solver == "direct" || c.method.solver == "gram", ErrorKind::Config,
            "method.solver must be direct or gram");
    if (c.method.algorithm == "kdmd" && c.method.kernel != "dictionary") kdmd::Kernel::parse(c.method.kernel);
    require(c.rcond > 0.0 && c.rcond < 1.0, ErrorKind::Config, "rcond must lie in (0, 1)");
    require(c.tau > 0.0, ErrorKind::Config, "tau must be positive");
    for (const auto& name : c.candidates)
        require(is_network_group(name), ErrorKind::Config, "unknown candidate group '" + name + "'");
    require(c.noise.realizations >= 1, ErrorKind::Config, "noise.realizations must be >= 1");
    require(c.noise.scale >= 0.0, ErrorKind::Config, "noise.scale must be non-negative");
}

groups::GroupAction build_group(const GroupConfig& g) {
    if (g.kind.empty()) {
        require(is_network_group(g.preset), ErrorKind::Config, "unknown group preset '" + g.preset + "'");
        return presets::network_action(g.preset);
    }
    if (g.kind == "file") {
        std::ifstream in(g.path);
        require(in.good(), ErrorKind::Config, "cannot open group file '" + g.path + "'");
        try {
            return group_from_json(json::parse(in));
        } catch (const json::exception& e) {
            fail(ErrorKind::Config, "group file '" + g.path + "' is malformed: " + e.what());
        }
    }
    const auto group = abstract_group(g);
    const auto gens = generator_matrices(g);
    try {
        return groups::build_action(group, gens);
    } catch (const Error& e) {
        fail(ErrorKind::Config, std::string("group generators: ") + e.what());
    }
}

json group_to_json(const groups::GroupAction& action) {
    const auto& g = action.group();
    json irreps = json::array();
    for (const auto& ir : g.irreps()) {
        json mats = json::array();
        for (const auto& m : ir.matrices) mats.push_back(cmatrix_json(m));
        irreps.push_back({{"name", ir.name}, {"dim", ir.dim}, {"characters", complex_list(ir.characters)},
                          {"matrices", mats}});
    }
    json action_mats = json::array();
    for (const auto& m : action.matrices()) action_mats.push_back(cmatrix_json(m));
    return json{{"format_version", kFormatVersion}, {"name", g.name()},          {"order", g.order()},
                {"labels", g.labels()},           {"mul_table", g.mul_table()}, {"generators", g.generators()},
                {"irreps", irreps},               {"action_matrices", action_mats}};
}

groups::GroupAction group_from_json(const json& j) {
    std::vector<groups::Irrep> irreps;
    for (const auto& ir : j.at("irreps")) {
        groups::Irrep out;
        out.name = ir.at("name").get<std::string>();
        out.dim = ir.at("dim").get<int>();
        for (const auto& c : ir.at("characters")) out.characters.push_back(complex_from(c));
        for (const auto& m : ir.at("matrices")) out.matrices.push_back(cmatrix_from(m));
        irreps.push_back(std::move(out));
    }
    auto group = std::make_shared<const groups::FiniteGroup>(
        j.at("name").get<std::string>(), j.at("mul_table").get<std::vector<std::vector<int>>>(),
        j.at("generators").get<std::vector<int>>(), j.at("labels").get<std::vector<std::string>>(),
        std::move(irreps));
    require(group->order() == j.at("order").get<int>(), ErrorKind::Config, "group order does not match its table");
    std::vector<CMatrix> mats;
    for (const auto& m : j.at("action_matrices")) mats.push_back(cmatrix_from(m));
    return groups::GroupAction(group, std::move(mats));
}

dynamics::SnapshotSet base_snapshots(const ExperimentConfig& c) {
    const auto& s = c.system;
    if (s.kind == "file") return io::read_snapshots(s.path);
    if (s.kind == "z2_linear") {
        RMatrix lambda(2, 2);
        lambda << 0.7, 0.2, 0.2, 0.7;
        auto out = dynamics::linear_map_snapshots(
            lambda, dynamics::uniform_initial_conditions(s.initial_conditions, 2, s.half_width, c.seeds.initial_conditions));
        out.dt = 1.0;
        return out;
    }
    dynamics::DuffingNetwork net;
    if (s.eta) {
        net.node_count = static_cast<int>(s.eta->rows());
        net.alpha = s.alpha;
        net.beta = s.beta;
        net.sigma = s.sigma;
        net.eta = *s.eta;
    } else {
        net = presets::duffing_network(s.scheme, s.a, s.b, s.alpha, s.beta, s.sigma);
    }
    const auto ics =
        dynamics::uniform_initial_conditions(s.initial_conditions, net.state_dim(), s.half_width, c.seeds.initial_conditions);
    return dynamics::sample_snapshots(dynamics::vector_field(net), ics, s.dt, s.steps);
}

dynamics::SnapshotSet prepared_snapshots(const ExperimentConfig& c, const dynamics::SnapshotSet& base) {
    const auto action = symmetrizing_action(c);
    return action ? dynamics::symmetrize_snapshots(base, *action) : base;
}

dictionaries::Dictionary build_dictionary(const ExperimentConfig& c, const dynamics::SnapshotSet& base,
                                          const groups::GroupAction& action) {
    const int dim = base.dim();
    dictionaries::Dictionary d = [&] {
        if (c.dictionary.type == "rbf")
            return dictionaries::rbf_dictionary(dictionaries::sample_centers(base.X, c.dictionary.centers, c.seeds.centers));
        if (c.dictionary.type == "monomial") return dictionaries::monomial_dictionary(dim, c.dictionary.max_degree);
        return dictionaries::linear_dictionary(dim);
    }();
    return dictionaries::close_under_group(d, action);
}

json model_json(const edmd::KoopmanModel& m, const groups::FiniteGroup* group) {
    json layout = json::array();
    for (const auto& s : m.layout) {
        json slot{{"irrep", s.irrep}, {"copy", s.copy}, {"size", s.size}};
        if (group) slot["irrep_name"] = group->irrep(s.irrep).name;
        layout.push_back(slot);
    }
    return json{{"format_version", kFormatVersion},
                {"dual", false},
                {"basis_ref", m.basis_ref},
                {"assumed_group", m.assumed_group},
                {"size", m.size()},
                {"block_layout", layout},
                {"eigenvalues", complex_list(m.eigenvalues)},
                {"rank_of_G", m.rank_of_G},
                {"rcond", m.rcond},
                {"commutant_residual", m.commutant_residual >= 0 ? json(m.commutant_residual) : json(nullptr)},
                {"copy_deviation", m.copy_deviation},
                {"warnings", m.warnings}};
}

json dual_model_json(const kdmd::DualModel& m) {
    json out = model_json(m.spectrum, nullptr);
    out["dual"] = true;
    out["kernel"] = m.kernel.name();
    out["convention"] = m.convention;
    out["snapshot_pairs"] = m.Ghat.rows();
    out["ghat_commutant"] = m.ghat_commutant >= 0 ? json(m.ghat_commutant) : json(nullptr);
    out["ahat_commutant"] = m.ahat_commutant >= 0 ? json(m.ahat_commutant) : json(nullptr);
    return out;
}

json pattern_json(const analysis::BlockPattern& p) {
    json layout = json::array();
    for (int b = 0; b < p.blocks(); ++b) {
        json entry{{"size", p.sizes[b]}};
        if (b < static_cast<int>(p.irreps.size())) entry["irrep"] = p.irreps[b];
        if (b < static_cast<int>(p.labels.size())) entry["label"] = p.labels[b];
        layout.push_back(entry);
    }
    json inter = json::array();
    for (Eigen::Index i = 0; i < p.interaction.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < p.interaction.cols(); ++k) row.push_back(static_cast<bool>(p.interaction(i, k)));
        inter.push_back(row);
    }
    return json{{"layout", layout}, {"tau", p.tau}, {"residual_matrix", matrix_json(p.residuals)},
                {"interaction_matrix", inter}};
}

json noise_json(const analysis::NoiseReport& r) {
    json entries = json::array();
    for (const auto& e : r.off_block)
        entries.push_back({{"row", e.row},
                           {"col", e.col},
                           {"mean", e.mean},
                           {"stderr", r.stderr_defined ? json(e.stderr_) : json(nullptr)},
                           {"consistent", e.consistent}});
    return json{{"format_version", kFormatVersion},
                {"noise_scale", r.noise_scale},
                {"realizations", r.realizations},
                {"used", r.used},
                {"skipped", r.skipped},
                {"stderr_defined", r.stderr_defined},
                {"fraction_consistent", r.fraction_consistent},
                {"consistent", r.consistent},
                {"mean_stderr", r.stderr_defined ? json(r.mean_stderr) : json(nullptr)},
                {"max_abs_mean", r.max_abs_mean},
                {"warnings", r.warnings},
                {"entries", entries}};
}

}  // namespace koopsym::cli
