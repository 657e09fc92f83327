#include "koopsym/presets.hpp"

#include "koopsym/error.hpp"

namespace koopsym::presets {

RMatrix kron_identity(const RMatrix& p, int block) {
    RMatrix out = RMatrix::Zero(p.rows() * block, p.cols() * block);
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            out.block(i * block, j * block, block, block) = p(i, j) * RMatrix::Identity(block, block);
    return out;
}

RMatrix node_rotation() {
    RMatrix r(3, 3);
    r << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    return r;
}

RMatrix node_swap() {
    RMatrix k(3, 3);
    k << 1, 0, 0, 0, 0, 1, 0, 1, 0;
    return k;
}

std::vector<std::string> network_group_names() {
    return {"Z2xD3", "Z2xZ3", "Z2xZ2", "Z2xZ1", "D3", "Z3", "Z2", "trivial"};
}

groups::GroupAction network_action(const std::string& name) {
    using namespace groups;
    const RMatrix flip = -RMatrix::Identity(6, 6);
    const RMatrix rot = kron_identity(node_rotation(), 2);
    const RMatrix swap = kron_identity(node_swap(), 2);
    if (name == "D3") return build_action(build_dihedral(3), std::vector<RMatrix>{rot, swap});
    if (name == "Z3") return build_action(build_cyclic(3), std::vector<RMatrix>{rot});
    if (name == "Z2") return build_action(build_cyclic(2), std::vector<RMatrix>{swap});
    if (name == "trivial") return build_action(build_cyclic(1), std::vector<RMatrix>{RMatrix::Identity(6, 6)});
    const auto z2 = build_cyclic(2);
    if (name == "Z2xD3") return build_action(direct_product(z2, build_dihedral(3)), std::vector<RMatrix>{flip, rot, swap});
    if (name == "Z2xZ3") return build_action(direct_product(z2, build_cyclic(3)), std::vector<RMatrix>{flip, rot});
    if (name == "Z2xZ2") return build_action(direct_product(z2, build_cyclic(2)), std::vector<RMatrix>{flip, swap});
    if (name == "Z2xZ1") return build_action(z2, std::vector<RMatrix>{flip});
    fail(ErrorKind::Config, "unknown network group '" + name + "'");
}

dynamics::DuffingNetwork duffing_network(const std::string& scheme, double a, double b, double alpha, double beta,
                                         double sigma) {
    auto net = dynamics::DuffingNetwork::uniform(3, a, alpha, beta, sigma);
    if (scheme == "equal") return net;
    if (scheme == "ring") {
        net.eta(1, 0) = net.eta(2, 1) = net.eta(0, 2) = b;
        return net;
    }
    if (scheme == "swap") {
        net.eta(1, 2) = net.eta(2, 1) = b;
        return net;
    }
    fail(ErrorKind::Config, "unknown coupling scheme '" + scheme + "' (expected equal, ring or swap)");
}

std::string scheme_group(const std::string& scheme) {
    if (scheme == "equal") return "Z2xD3";
    if (scheme == "ring") return "Z2xZ3";
    if (scheme == "swap") return "Z2xZ2";
    fail(ErrorKind::Config, "unknown coupling scheme '" + scheme + "'");
}

}  // namespace koopsym::presets
