#pragma once

// Shared fixtures for the test suites.

#include <vector>

#include "koopsym/dictionaries.hpp"
#include "koopsym/dynamics.hpp"
#include "koopsym/groups.hpp"
#include "koopsym/presets.hpp"

namespace koopsym::test {

inline std::vector<groups::GroupPtr> all_test_groups() {
    using namespace groups;
    return {build_cyclic(2), build_cyclic(3), build_dihedral(3), build_dihedral(4),
            direct_product(build_cyclic(2), build_dihedral(3))};
}

using presets::kron_identity;

inline RMatrix rotation3() { return presets::node_rotation(); }
inline RMatrix reflection3() { return presets::node_swap(); }

inline groups::GroupAction d3_node_action() { return presets::network_action("D3"); }

inline groups::GroupAction d3_point_action() {
    return groups::build_action(groups::build_dihedral(3), std::vector<RMatrix>{rotation3(), reflection3()});
}

/// Z2 x D3 on the 3-node Duffing state: sign flip, node rotation, node swap.
inline groups::GroupAction z2xd3_state_action() { return presets::network_action("Z2xD3"); }

inline RMatrix stack_rows(const std::vector<RVector>& v) {
    RMatrix out(static_cast<Eigen::Index>(v.size()), v.empty() ? 0 : v.front().size());
    for (std::size_t i = 0; i < v.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    return out;
}

/// Symmetrized network data with a closed RBF dictionary.
struct NetworkProblem {
    dynamics::SnapshotSet data;
    dictionaries::Dictionary dict;
    CMatrix psix;
    CMatrix psiy;
};

inline NetworkProblem network_problem(const std::string& scheme, const std::string& group, int ics, int centers,
                                      std::uint64_t seed = 0) {
    const auto action = presets::network_action(group);
    const auto rhs = dynamics::vector_field(presets::duffing_network(scheme));
    const auto base = dynamics::sample_snapshots(rhs, dynamics::uniform_initial_conditions(ics, 6, 2.0, seed), 0.01, 10);
    auto data = dynamics::symmetrize_snapshots(base, action);
    auto dict = dictionaries::close_under_group(
        dictionaries::rbf_dictionary(dictionaries::sample_centers(base.X, centers, seed + 1)), action);
    CMatrix px = dict.evaluate(data.X), py = dict.evaluate(data.Y);
    return {std::move(data), std::move(dict), std::move(px), std::move(py)};
}

}  // namespace koopsym::test
