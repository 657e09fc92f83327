#pragma once

#include <memory>
#include <string>
#include <vector>

#include "koopsym/linalg.hpp"

namespace koopsym::groups {

/// Unitary irreducible representation, stored per group element.
struct Irrep {
    std::string name;
    int dim = 1;
    std::vector<CMatrix> matrices;
    std::vector<cplx> characters;
};

/// Finite group given by its multiplication table.
///
/// Element 0 is the identity. Element ids are stable and part of the public
/// contract: projector rows, dictionary orderings and data orderings all refer
/// to them. The closed-form constructors use normal-form orderings
/// (r^k for Z_n, k^s r^k for D_n, lexicographic pairs for products) so that
/// isotypic transforms of products are Kronecker products of the factors'.
class FiniteGroup {
public:
    FiniteGroup(std::string name, std::vector<std::vector<int>> mul_table, std::vector<int> generators,
                std::vector<std::string> labels, std::vector<Irrep> irreps);

    const std::string& name() const { return name_; }
    int order() const { return static_cast<int>(table_.size()); }
    int identity() const { return 0; }
    int mul(int a, int b) const { return table_[a][b]; }
    int inverse(int a) const { return inverse_[a]; }
    const std::vector<std::vector<int>>& mul_table() const { return table_; }
    const std::vector<int>& generators() const { return generators_; }
    const std::vector<Irrep>& irreps() const { return irreps_; }
    const Irrep& irrep(int p) const;
    int irrep_count() const { return static_cast<int>(irreps_.size()); }
    const std::vector<std::vector<int>>& conjugacy_classes() const { return classes_; }
    const std::string& label(int a) const { return labels_[a]; }
    const std::vector<std::string>& labels() const { return labels_; }

    /// Generator positions (indices into generators()) whose left-to-right
    /// product is the element; found breadth first from the identity.
    const std::vector<int>& word(int a) const { return words_[a]; }

    /// Sum over elements of chi_p(g) conj(chi_q(g)), divided by the order.
    cplx character_inner(int p, int q) const;

private:
    std::string name_;
    std::vector<std::vector<int>> table_;
    std::vector<int> generators_;
    std::vector<std::string> labels_;
    std::vector<Irrep> irreps_;
    std::vector<int> inverse_;
    std::vector<std::vector<int>> classes_;
    std::vector<std::vector<int>> words_;
};

using GroupPtr = std::shared_ptr<const FiniteGroup>;

GroupPtr build_cyclic(int n);
GroupPtr build_dihedral(int n);
GroupPtr direct_product(const GroupPtr& g1, const GroupPtr& g2);

/// Concrete matrices realizing a group on some vector space.
class GroupAction {
public:
    /// Takes one matrix per element; checks the homomorphism property.
    GroupAction(GroupPtr group, std::vector<CMatrix> matrices, double tol = 1e-10);

    const FiniteGroup& group() const { return *group_; }
    const GroupPtr& group_ptr() const { return group_; }
    int dim() const { return dim_; }
    const CMatrix& matrix(int a) const { return matrices_[a]; }
    const std::vector<CMatrix>& matrices() const { return matrices_; }
    bool is_real(double tol = 1e-14) const;
    RMatrix real_matrix(int a) const { return matrices_[a].real(); }
    bool is_unitary(double tol = 1e-10) const;

    /// max over pairs of ||M(a)M(b) - M(ab)||_F.
    double representation_residual() const;

private:
    GroupPtr group_;
    int dim_ = 0;
    std::vector<CMatrix> matrices_;
};

/// Extends generator matrices to every element along the group's words.
/// Throws InconsistentAction naming the violated relation when the matrices
/// do not satisfy the group's defining relations.
GroupAction build_action(const GroupPtr& group, const std::vector<CMatrix>& generator_matrices, double tol = 1e-10);
GroupAction build_action(const GroupPtr& group, const std::vector<RMatrix>& generator_matrices, double tol = 1e-10);

/// Left-multiplication permutation matrices: P_k e_j = e_{k*j}.
GroupAction cayley_permutation_rep(const GroupPtr& group);

/// M(g) (x) I_block for every element.
GroupAction tensor_identity(const GroupAction& action, int block);

/// (d_p/|G|) sum_g conj(R_p(g)_{mn}) M(g); m, n are 0-based.
CMatrix projector(const GroupAction& action, int p, int m, int n);

/// (d_p/|G|) sum_g conj(chi_p(g)) M(g).
CMatrix character_projector(const GroupAction& action, int p);

/// One diagonal block of an isotypic basis: `copy` runs over [0, d_p).
struct BlockSlot {
    int irrep = 0;
    int copy = 0;
    int size = 0;
};

/// Change of basis into isotypic components.
///
/// Row k of `matrix` holds the coefficients of the k-th new function in the
/// old basis (xi_k = sum_j T_kj psi_j). Rows are grouped by slot in layout
/// order; slot (p, m) is the image of slot (p, 0) under the intertwiner
/// P^p_{m0}, so every copy of an irrep sees an identical block of any
/// operator that commutes with the action.
struct IsotypicTransform {
    CMatrix matrix;
    std::vector<BlockSlot> layout;
    int source_size = 0;
    std::vector<std::string> warnings;

    std::vector<int> block_sizes() const;
    std::vector<int> block_offsets() const;
    /// Sizes of whole isotypic components (all copies of an irrep merged).
    std::vector<int> component_sizes() const;
};

/// Isotypic basis from projector outputs P^p_{mn} e_i, scaled by |G|/d_p so
/// entries are bare irrep matrix elements. Orbit representatives are tried
/// first, which reproduces the textbook transforms for regular orbits.
/// Empty slots are kept as size-0 blocks and reported in `warnings`.
IsotypicTransform isotypic_transform(const GroupAction& action);

/// Orthonormal variant: copy-0 basis from the SVD of P^p_{00}, other copies
/// mapped through P^p_{m0}. Requires a unitary action. `rank_tol` is the
/// relative singular-value cutoff.
IsotypicTransform unitary_isotypic_transform(const GroupAction& action, double rank_tol = 1e-10);

}  // namespace koopsym::groups
