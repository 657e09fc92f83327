#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "koopsym/error.hpp"
#include "koopsym/groups.hpp"
#include "support.hpp"

using namespace koopsym;
using namespace koopsym::groups;

namespace {

// Independent class count: brute-force orbit enumeration of g x g^-1.
int brute_force_class_count(const FiniteGroup& g) {
    const int n = g.order();
    std::vector<int> inv(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (g.mul_table()[a][b] == 0) inv[a] = b;
    std::set<std::set<int>> classes;
    for (int a = 0; a < n; ++a) {
        std::set<int> c;
        for (int x = 0; x < n; ++x) c.insert(g.mul_table()[g.mul_table()[x][a]][inv[x]]);
        classes.insert(c);
    }
    return static_cast<int>(classes.size());
}

// Rank through the Hermitian eigendecomposition (projectors of unitary
// actions are Hermitian); independent of the SVD rank helper.
int eigen_rank(const CMatrix& p) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(p);
    int r = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i)) > 1e-8) ++r;
    return r;
}

const cplx omega = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);

}  // namespace

TEST_CASE("cyclic groups") {
    auto z2 = build_cyclic(2);
    CHECK(z2->order() == 2);
    REQUIRE(z2->irrep_count() == 2);
    CHECK(z2->irrep(0).characters[1] == cplx(1.0, 0.0));
    CHECK(z2->irrep(1).characters[1] == cplx(-1.0, 0.0));

    auto z1 = build_cyclic(1);
    CHECK(z1->order() == 1);
    REQUIRE(z1->irrep_count() == 1);
    CHECK(z1->irrep(0).characters[0] == cplx(1.0, 0.0));

    auto z3 = build_cyclic(3);
    CHECK(std::abs(z3->irrep(0).characters[1] - cplx(1.0)) < 1e-15);
    CHECK(std::abs(z3->irrep(1).characters[1] - omega) < 1e-15);
    CHECK(std::abs(z3->irrep(2).characters[1] - omega * omega) < 1e-15);

    CHECK_THROWS_AS(build_cyclic(0), Error);
    try {
        build_cyclic(0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidOrder);
    }
}

TEST_CASE("dihedral groups") {
    auto d3 = build_dihedral(3);
    CHECK(d3->order() == 6);
    REQUIRE(d3->irrep_count() == 3);
    CHECK(d3->irrep(0).dim == 1);
    CHECK(d3->irrep(1).dim == 1);
    CHECK(d3->irrep(2).dim == 2);

    // Standard irrep: R(r) = diag(w, w^2), R(k) = [[0,1],[1,0]].
    const Irrep& st = d3->irrep(2);
    const int r = 1, k = 3;
    CHECK(std::abs(st.matrices[r](0, 0) - omega) < 1e-15);
    CHECK(std::abs(st.matrices[r](1, 1) - omega * omega) < 1e-15);
    CHECK(std::abs(st.matrices[k](0, 1) - 1.0) < 1e-15);
    CHECK(std::abs(st.matrices[k](1, 0) - 1.0) < 1e-15);
    CHECK(std::abs(st.characters[r] - cplx(-1.0)) < 1e-14);

    // D4: dims frozen from the brute-force class count (5 classes, order 8).
    auto d4 = build_dihedral(4);
    CHECK(d4->order() == 8);
    CHECK(brute_force_class_count(*d4) == 5);
    std::vector<int> dims;
    for (const Irrep& ir : d4->irreps()) dims.push_back(ir.dim);
    CHECK(dims == std::vector<int>{1, 1, 1, 1, 2});

    CHECK_THROWS_AS(build_dihedral(2), Error);
}

TEST_CASE("direct products") {
    auto z2 = build_cyclic(2);
    auto d3 = build_dihedral(3);
    auto g = direct_product(z2, d3);
    CHECK(g->order() == 12);
    std::multiset<int> dims;
    for (const Irrep& ir : g->irreps()) dims.insert(ir.dim);
    CHECK(dims == std::multiset<int>{1, 1, 1, 1, 2, 2});
    CHECK(brute_force_class_count(*g) == 6);

    auto zz = direct_product(z2, z2);
    CHECK(zz->irrep_count() == 4);
    for (const Irrep& ir : zz->irreps()) CHECK(ir.dim == 1);

    // Z1 x G is a relabelled copy of G.
    auto copy = direct_product(build_cyclic(1), d3);
    CHECK(copy->order() == 6);
    CHECK(copy->mul_table() == d3->mul_table());
    CHECK(copy->generators() == d3->generators());

    // Characters multiply.
    for (int x = 0; x < 12; ++x)
        CHECK(std::abs(g->irrep(5).characters[x] - z2->irrep(1).characters[x / 6] * d3->irrep(2).characters[x % 6]) <
              1e-14);
}

TEST_CASE("group invariants hold for all test groups") {
    for (const auto& g : test::all_test_groups()) {
        CAPTURE(g->name());
        int dim_sq = 0;
        for (const Irrep& ir : g->irreps()) dim_sq += ir.dim * ir.dim;
        CHECK(dim_sq == g->order());
        CHECK(g->irrep_count() == static_cast<int>(g->conjugacy_classes().size()));
        CHECK(g->irrep_count() == brute_force_class_count(*g));
        for (int p = 0; p < g->irrep_count(); ++p)
            for (int q = 0; q < g->irrep_count(); ++q)
                CHECK(std::abs(g->character_inner(p, q) - cplx(p == q ? 1.0 : 0.0)) < 1e-10);
        for (int a = 0; a < g->order(); ++a) {
            int prod = 0;
            for (int s : g->word(a)) prod = g->mul(prod, g->generators()[s]);
            CHECK(prod == a);
        }
    }
}

TEST_CASE("build_action") {
    auto z2 = build_cyclic(2);
    RMatrix flip = -RMatrix::Identity(2, 2);
    GroupAction a = build_action(z2, std::vector<RMatrix>{flip});
    CHECK(a.matrix(0).isApprox(CMatrix::Identity(2, 2)));
    CHECK(a.matrix(1).isApprox(-CMatrix::Identity(2, 2)));

    auto d3 = build_dihedral(3);
    GroupAction d3a = test::d3_node_action();
    CHECK(d3a.dim() == 6);
    CHECK(d3a.representation_residual() < 1e-12);

    // Identity generators give the trivial action.
    GroupAction triv = build_action(d3, std::vector<RMatrix>{RMatrix::Identity(4, 4), RMatrix::Identity(4, 4)});
    for (const CMatrix& m : triv.matrices()) CHECK(m.isApprox(CMatrix::Identity(4, 4)));

    // A 90-degree rotation has order 4, not 3.
    RMatrix rot(2, 2);
    rot << 0, -1, 1, 0;
    RMatrix refl(2, 2);
    refl << 1, 0, 0, -1;
    try {
        build_action(d3, std::vector<RMatrix>{rot, refl});
        FAIL("expected inconsistent action");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InconsistentAction);
        CHECK(std::string(e.what()).find("residual") != std::string::npos);
    }
}

TEST_CASE("cayley permutation representation") {
    auto z2 = build_cyclic(2);
    GroupAction c = cayley_permutation_rep(z2);
    CHECK(c.matrix(0).isApprox(CMatrix::Identity(2, 2)));
    CMatrix swap(2, 2);
    swap << 0, 1, 1, 0;
    CHECK(c.matrix(1).isApprox(swap));

    for (const auto& g : test::all_test_groups()) {
        GroupAction p = cayley_permutation_rep(g);
        CHECK(p.matrix(0).isApprox(CMatrix::Identity(g->order(), g->order())));
        // Brute-force closure check over all pairs.
        for (int a = 0; a < g->order(); ++a)
            for (int b = 0; b < g->order(); ++b)
                CHECK((p.matrix(a) * p.matrix(b) - p.matrix(g->mul(a, b))).norm() == 0.0);
    }
}

TEST_CASE("projectors") {
    auto z2 = build_cyclic(2);
    GroupAction flip = build_action(z2, std::vector<RMatrix>{-RMatrix::Identity(2, 2)});
    CHECK(projector(flip, 0, 0, 0).norm() < 1e-15);
    CHECK(projector(flip, 1, 0, 0).isApprox(CMatrix::Identity(2, 2)));
    CHECK(character_projector(flip, 0).norm() < 1e-15);
    CHECK(character_projector(flip, 1).isApprox(CMatrix::Identity(2, 2)));

    // Even-function projector for the swap action on a 2-element orbit.
    GroupAction swap = cayley_permutation_rep(z2);
    CMatrix even = 0.5 * (CMatrix::Identity(2, 2) + swap.matrix(1));
    CHECK(projector(swap, 0, 0, 0).isApprox(even));

    GroupAction triv = cayley_permutation_rep(build_cyclic(1));
    CHECK(projector(triv, 0, 0, 0).isApprox(CMatrix::Identity(1, 1)));

    GroupAction reg = cayley_permutation_rep(build_dihedral(3));
    CHECK(eigen_rank(projector(reg, 0, 0, 0)) == 1);
    CHECK(eigen_rank(projector(reg, 2, 0, 0)) == 2);
    CHECK(eigen_rank(projector(reg, 2, 1, 1)) == 2);
    CHECK(std::abs(character_projector(reg, 0).trace() - cplx(1.0)) < 1e-12);
    CHECK(std::abs(character_projector(reg, 1).trace() - cplx(1.0)) < 1e-12);
    CHECK(std::abs(character_projector(reg, 2).trace() - cplx(4.0)) < 1e-12);

    CHECK_THROWS_AS(projector(reg, 2, 2, 0), Error);
    CHECK_THROWS_AS(projector(reg, 0, 0, 1), Error);
}

TEST_CASE("projector algebra on regular and state actions") {
    for (const auto& g : test::all_test_groups()) {
        CAPTURE(g->name());
        for (const GroupAction& act : {cayley_permutation_rep(g), tensor_identity(cayley_permutation_rep(g), 2)}) {
            const int n = act.dim();
            CMatrix total = CMatrix::Zero(n, n);
            for (int p = 0; p < g->irrep_count(); ++p) {
                const int d = g->irrep(p).dim;
                for (int m = 0; m < d; ++m) total += projector(act, p, m, m);
                CMatrix cp = character_projector(act, p);
                CHECK((cp * cp - cp).norm() < 1e-10);
                for (int q = 0; q < g->irrep_count(); ++q) {
                    const int dq = g->irrep(q).dim;
                    for (int a = 0; a < d; ++a)
                        for (int b = 0; b < d; ++b)
                            for (int c = 0; c < dq; ++c)
                                for (int e = 0; e < dq; ++e) {
                                    CMatrix lhs = projector(act, p, a, b) * projector(act, q, c, e);
                                    CMatrix rhs = (p == q && b == c) ? projector(act, p, a, e) : CMatrix::Zero(n, n);
                                    CHECK((lhs - rhs).norm() < 1e-10);
                                }
                }
            }
            CHECK((total - CMatrix::Identity(n, n)).norm() < 1e-10);
        }
    }
}

TEST_CASE("isotypic transform: textbook cases") {
    auto z2 = build_cyclic(2);
    IsotypicTransform t2 = isotypic_transform(cayley_permutation_rep(z2));
    CMatrix expected(2, 2);
    expected << 1, 1, 1, -1;
    CHECK((t2.matrix - expected).norm() < 1e-14);

    IsotypicTransform t1 = isotypic_transform(cayley_permutation_rep(build_cyclic(1)));
    CHECK(t1.matrix.isApprox(CMatrix::Identity(1, 1)));

    // D3 regular orbit: every row of the printed 6x6 transform appears, with
    // each standard-irrep copy holding the same pair of rows. The second copy
    // lists its rows in intertwiner order (see README, "Isotypic bases").
    const cplx w = omega, w2 = omega * omega;
    CMatrix paper(6, 6);
    paper << 1, 1, 1, 1, 1, 1,        //
        1, 1, 1, -1, -1, -1,          //
        1, w, w2, 0, 0, 0,            //
        0, 0, 0, 1, w2, w,            //
        1, w2, w, 0, 0, 0,            //
        0, 0, 0, 1, w, w2;
    IsotypicTransform t6 = isotypic_transform(cayley_permutation_rep(build_dihedral(3)));
    const std::vector<int> paper_row_for{0, 1, 4, 5, 3, 2};
    for (int k = 0; k < 6; ++k) CHECK((t6.matrix.row(k) - paper.row(paper_row_for[k])).norm() < 1e-14);
    REQUIRE(t6.layout.size() == 4);
    CHECK(t6.block_sizes() == std::vector<int>{1, 1, 2, 2});
    CHECK(t6.warnings.empty());
}

TEST_CASE("isotypic transform block-diagonalizes the action") {
    for (const auto& g : test::all_test_groups()) {
        CAPTURE(g->name());
        for (const GroupAction& act : {cayley_permutation_rep(g), tensor_identity(cayley_permutation_rep(g), 3)}) {
            for (const IsotypicTransform& t : {isotypic_transform(act), unitary_isotypic_transform(act)}) {
                REQUIRE(t.matrix.rows() == act.dim());
                CHECK(numerical_rank(t.matrix) == act.dim());
                int total = 0;
                for (const BlockSlot& s : t.layout) total += s.size;
                CHECK(total == act.dim());
                // Copies of one irrep have equal sizes.
                for (std::size_t i = 0; i + 1 < t.layout.size(); ++i)
                    if (t.layout[i].irrep == t.layout[i + 1].irrep) CHECK(t.layout[i].size == t.layout[i + 1].size);
                const CMatrix tinv = t.matrix.inverse();
                double scale = 0.0;
                for (int a = 0; a < g->order(); ++a) {
                    CMatrix conj = t.matrix * act.matrix(a) * tinv;
                    scale = std::max(scale, conj.norm());
                    CHECK(offblock_norm(conj, t.component_sizes()) < 1e-10 * std::max(1.0, conj.norm()));
                }
            }
        }
    }
}

TEST_CASE("unitary isotypic transform is unitary") {
    auto g = direct_product(build_cyclic(2), build_dihedral(3));
    for (int block : {2, 10}) {
        IsotypicTransform t = unitary_isotypic_transform(tensor_identity(cayley_permutation_rep(g), block));
        const int n = 12 * block;
        CHECK((t.matrix * t.matrix.adjoint() - CMatrix::Identity(n, n)).norm() < 1e-10);
    }
}

TEST_CASE("empty isotypic slot produces a warning") {
    // D3 permuting three coordinates: tr + st, the sign component is absent.
    GroupAction a = test::d3_point_action();
    IsotypicTransform t = isotypic_transform(a);
    REQUIRE(t.warnings.size() == 1);
    CHECK(t.warnings[0].find("sign") != std::string::npos);
    CHECK(t.block_sizes() == std::vector<int>{1, 0, 1, 1});
}
