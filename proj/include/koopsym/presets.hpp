#pragma once

#include <string>
#include <vector>

#include "koopsym/dynamics.hpp"
#include "koopsym/groups.hpp"

namespace koopsym::presets {

/// Block matrix p (x) I_block.
RMatrix kron_identity(const RMatrix& p, int block);

/// Cyclic shift of three nodes, (x1, x2, x3) -> (x2, x3, x1).
RMatrix node_rotation();
/// Swap of nodes 2 and 3.
RMatrix node_swap();

/// Names of the symmetry groups of the 3-node Duffing network on R^6.
/// "D3", "Z3", "Z2" (node swap) and "trivial" act on nodes only; the
/// "Z2x" prefixed versions add the sign flip s -> -s.
std::vector<std::string> network_group_names();

/// Group with its action on the 6-dimensional network state. Generators are
/// listed sign flip first, then rotation, then swap, as far as present.
groups::GroupAction network_action(const std::string& name);

/// Coupling schemes of the 3-node network:
///   "equal" all eta_ij = a                (Z2xD3)
///   "ring"  eta_12 = eta_23 = eta_31 = a,
///           eta_21 = eta_32 = eta_13 = b  (Z2xZ3)
///   "swap"  eta_12 = eta_13 = eta_21 = eta_31 = a,
///           eta_23 = eta_32 = b           (Z2xZ2, nodes 2 and 3 swap)
dynamics::DuffingNetwork duffing_network(const std::string& scheme, double a = 1.0, double b = 0.5,
                                         double alpha = 1.0, double beta = -1.0, double sigma = 0.5);

/// Group matching a coupling scheme.
std::string scheme_group(const std::string& scheme);

}  // namespace koopsym::presets
