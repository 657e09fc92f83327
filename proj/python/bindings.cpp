#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "koopsym/analysis.hpp"
#include "koopsym/cli.hpp"
#include "koopsym/dictionaries.hpp"
#include "koopsym/dynamics.hpp"
#include "koopsym/edmd.hpp"
#include "koopsym/error.hpp"
#include "koopsym/groups.hpp"
#include "koopsym/kdmd.hpp"
#include "koopsym/parallel.hpp"
#include "koopsym/presets.hpp"

namespace py = pybind11;
using namespace koopsym;

namespace {

py::array_t<bool> bool_array(const analysis::BoolMatrix& m) {
    py::array_t<bool> out({m.rows(), m.cols()});
    auto view = out.mutable_unchecked<2>();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) view(i, j) = m(i, j);
    return out;
}

dynamics::SnapshotSet snapshots(const RMatrix& x, const RMatrix& y) {
    require(x.rows() == y.rows() && x.cols() == y.cols(), ErrorKind::DimensionMismatch,
            "X and Y must have the same shape");
    dynamics::SnapshotSet s;
    s.X = x;
    s.Y = y;
    return s;
}

std::vector<std::tuple<int, int, int>> layout_tuples(const std::vector<groups::BlockSlot>& layout) {
    std::vector<std::tuple<int, int, int>> out;
    for (const auto& s : layout) out.emplace_back(s.irrep, s.copy, s.size);
    return out;
}

std::vector<groups::BlockSlot> layout_slots(const std::vector<std::tuple<int, int, int>>& layout) {
    std::vector<groups::BlockSlot> out;
    for (const auto& [irrep, copy, size] : layout) out.push_back({irrep, copy, size});
    return out;
}

edmd::Solver solver_from(const std::string& name) {
    if (name == "direct") return edmd::Solver::Direct;
    if (name == "gram") return edmd::Solver::Gram;
    fail(ErrorKind::InvalidArgument, "solver must be 'direct' or 'gram'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Symmetry-aware Koopman operator approximation";

    static py::exception<Error> error(m, "KoopsymError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    m.def("set_max_threads", &set_max_threads, py::arg("n"));

    py::class_<groups::GroupAction>(m, "GroupAction")
        .def_property_readonly("name", [](const groups::GroupAction& a) { return a.group().name(); })
        .def_property_readonly("order", [](const groups::GroupAction& a) { return a.group().order(); })
        .def_property_readonly("dim", &groups::GroupAction::dim)
        .def_property_readonly("labels", [](const groups::GroupAction& a) { return a.group().labels(); })
        .def_property_readonly("irrep_names",
                               [](const groups::GroupAction& a) {
                                   std::vector<std::string> out;
                                   for (const auto& ir : a.group().irreps()) out.push_back(ir.name);
                                   return out;
                               })
        .def("matrix", [](const groups::GroupAction& a, int g) { return a.matrix(g); }, py::arg("element"))
        .def("__repr__", [](const groups::GroupAction& a) {
            return "<GroupAction " + a.group().name() + " on R^" + std::to_string(a.dim()) + ">";
        });

    m.def("network_group_names", &presets::network_group_names);
    m.def("network_action", &presets::network_action, py::arg("name"));
    m.def("scheme_group", &presets::scheme_group, py::arg("scheme"));
    m.def(
        "group_action",
        [](const std::string& kind, int n, const std::vector<RMatrix>& generators) {
            require(kind == "cyclic" || kind == "dihedral", ErrorKind::InvalidArgument,
                    "kind must be 'cyclic' or 'dihedral'");
            const auto g = kind == "cyclic" ? groups::build_cyclic(n) : groups::build_dihedral(n);
            return groups::build_action(g, generators);
        },
        py::arg("kind"), py::arg("n"), py::arg("generators"));

    m.def(
        "duffing_snapshots",
        [](const std::string& scheme, int initial_conditions, int steps, double dt, std::uint64_t seed,
           double half_width) {
            const auto net = presets::duffing_network(scheme);
            const auto ics = dynamics::uniform_initial_conditions(initial_conditions, net.state_dim(), half_width, seed);
            const auto s = dynamics::sample_snapshots(dynamics::vector_field(net), ics, dt, steps);
            return py::make_tuple(s.X, s.Y);
        },
        py::arg("scheme") = "equal", py::arg("initial_conditions") = 500, py::arg("steps") = 10,
        py::arg("dt") = 0.01, py::arg("seed") = 0, py::arg("half_width") = 2.0,
        "Snapshot pairs (X, Y) of the 3-node Duffing network.");
    m.def(
        "symmetrize",
        [](const RMatrix& x, const RMatrix& y, const groups::GroupAction& action) {
            const auto s = dynamics::symmetrize_snapshots(snapshots(x, y), action);
            return py::make_tuple(s.X, s.Y);
        },
        py::arg("X"), py::arg("Y"), py::arg("action"));
    m.def(
        "symmetry_residual",
        [](const RMatrix& x, const RMatrix& y, const groups::GroupAction& action) {
            return dynamics::symmetry_residual(snapshots(x, y), action);
        },
        py::arg("X"), py::arg("Y"), py::arg("action"));

    py::class_<dictionaries::Dictionary>(m, "Dictionary")
        .def_property_readonly("size", &dictionaries::Dictionary::size)
        .def_property_readonly("state_dim", &dictionaries::Dictionary::state_dim)
        .def_property_readonly("labels",
                               [](const dictionaries::Dictionary& d) {
                                   std::vector<std::string> out;
                                   for (const auto& ob : d.observables()) out.push_back(ob.label);
                                   return out;
                               })
        .def_property_readonly("index_action",
                               [](const dictionaries::Dictionary& d) -> std::optional<groups::GroupAction> {
                                   if (!d.group()) return std::nullopt;
                                   return d.group()->index_action;
                               })
        .def("evaluate", &dictionaries::Dictionary::evaluate, py::arg("states"));

    m.def("sample_centers", &dictionaries::sample_centers, py::arg("data"), py::arg("count"), py::arg("seed"));
    m.def("rbf_dictionary", &dictionaries::rbf_dictionary, py::arg("centers"));
    m.def("monomial_dictionary", &dictionaries::monomial_dictionary, py::arg("n"), py::arg("max_degree"));
    m.def("close_under_group", &dictionaries::close_under_group, py::arg("dictionary"), py::arg("action"));

    m.def(
        "isotypic_transform",
        [](const groups::GroupAction& index_action, bool unitary) {
            const auto t = unitary ? groups::unitary_isotypic_transform(index_action)
                                   : groups::isotypic_transform(index_action);
            return py::make_tuple(t.matrix, layout_tuples(t.layout));
        },
        py::arg("index_action"), py::arg("unitary") = true,
        "Returns (T, layout); Xi = Psi T^T, layout holds (irrep, copy, size) slots.");

    py::class_<edmd::KoopmanModel>(m, "KoopmanModel")
        .def_readonly("K", &edmd::KoopmanModel::K)
        .def_readonly("eigenvalues", &edmd::KoopmanModel::eigenvalues)
        .def_readonly("right_eigenvectors", &edmd::KoopmanModel::right_eigenvectors)
        .def_readonly("left_eigenvectors", &edmd::KoopmanModel::left_eigenvectors)
        .def_readonly("rank_of_G", &edmd::KoopmanModel::rank_of_G)
        .def_readonly("commutant_residual", &edmd::KoopmanModel::commutant_residual)
        .def_readonly("warnings", &edmd::KoopmanModel::warnings)
        .def_property_readonly("layout", [](const edmd::KoopmanModel& k) { return layout_tuples(k.layout); })
        .def_property_readonly("block_sizes", &edmd::KoopmanModel::block_sizes);

    m.def(
        "edmd_fit",
        [](const CMatrix& psix, const CMatrix& psiy, double rcond, const std::string& solver) {
            return edmd::edmd_fit(psix, psiy, rcond, solver_from(solver));
        },
        py::arg("psi_x"), py::arg("psi_y"), py::arg("rcond") = 1e-10, py::arg("solver") = "direct");
    m.def(
        "block_edmd_fit",
        [](const CMatrix& xix, const CMatrix& xiy, const std::vector<std::tuple<int, int, int>>& layout,
           double rcond, const std::string& solver) {
            edmd::BlockOptions opts;
            opts.rcond = rcond;
            opts.solver = solver_from(solver);
            return edmd::block_edmd_fit(xix, xiy, layout_slots(layout), opts);
        },
        py::arg("xi_x"), py::arg("xi_y"), py::arg("layout"), py::arg("rcond") = 1e-10, py::arg("solver") = "direct");
    m.def("commutant_residual", &edmd::commutant_residual, py::arg("K"), py::arg("index_action"));
    m.def("to_source_basis", &edmd::to_source_basis, py::arg("K_xi"), py::arg("transform"));

    py::class_<kdmd::DualModel>(m, "DualModel")
        .def_property_readonly("Khat", &kdmd::DualModel::Khat)
        .def_property_readonly("eigenvalues", &kdmd::DualModel::eigenvalues)
        .def_property_readonly("rank", &kdmd::DualModel::rank)
        .def_readonly("sigma", &kdmd::DualModel::sigma)
        .def_readonly("Q", &kdmd::DualModel::Q)
        .def_readonly("convention", &kdmd::DualModel::convention)
        .def("eigenfunctions", [](const kdmd::DualModel& d, const RMatrix& states) {
            return kdmd::eigenfunction_eval(d, states);
        }, py::arg("states"))
        .def("modes", &kdmd::dual_modes);

    m.def(
        "kdmd_fit",
        [](const RMatrix& x, const RMatrix& y, const std::string& kernel, double rcond,
           const std::optional<groups::GroupAction>& action) {
            const auto k = kdmd::Kernel::parse(kernel);
            if (!action) return kdmd::kdmd_fit(k, snapshots(x, y), rcond);
            kdmd::BlockKdmdOptions opts;
            opts.rcond = rcond;
            return kdmd::block_kdmd_fit(k, snapshots(x, y), *action, opts);
        },
        py::arg("X"), py::arg("Y"), py::arg("kernel") = "poly2", py::arg("rcond") = 1e-10,
        py::arg("block_action") = py::none(),
        "Kernel fit; with block_action the rows must come from symmetrize() under that action.");

    m.def(
        "block_pattern",
        [](const CMatrix& k, const std::vector<int>& sizes, double tau) {
            const auto p = analysis::extract_block_pattern(k, sizes, tau);
            return py::make_tuple(p.residuals, bool_array(p.interaction));
        },
        py::arg("K"), py::arg("sizes"), py::arg("tau") = 1e-6, "Returns (relative block norms, interaction mask).");
    m.def(
        "predict_interactions",
        [](const groups::GroupAction& sigma, const groups::GroupAction& gamma) {
            const auto p = analysis::predict_interactions(sigma, gamma);
            return bool_array(p.interaction);
        },
        py::arg("assumed"), py::arg("candidate"),
        "Pairs of assumed-group components that the candidate symmetry allows to interact.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line in-process; returns (exit code, stdout, stderr).");
}
