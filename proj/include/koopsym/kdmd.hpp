#pragma once

#include <memory>
#include <string>
#include <vector>

#include "koopsym/dictionaries.hpp"
#include "koopsym/dynamics.hpp"
#include "koopsym/edmd.hpp"
#include "koopsym/groups.hpp"

namespace koopsym::kdmd {

/// k(x, y) = Psi(x) Psi(y)^*, either implicit or from an explicit dictionary.
class Kernel {
public:
    enum class Kind { Polynomial, Dictionary };

    /// (1 + x.y)^degree
    static Kernel polynomial(int degree);
    static Kernel explicit_dictionary(dictionaries::Dictionary dict);
    /// "poly<degree>" or "dictionary".
    static Kernel parse(const std::string& spec, const dictionaries::Dictionary* dict = nullptr);

    Kind kind() const { return kind_; }
    int degree() const { return degree_; }
    std::string name() const;
    bool is_real() const;

    cplx operator()(const RVector& x, const RVector& y) const;
    /// Entry (i, j) = k(a_i, b_j) over rows.
    CMatrix matrix(const RMatrix& a, const RMatrix& b) const;

private:
    Kind kind_ = Kind::Polynomial;
    int degree_ = 1;
    std::shared_ptr<const dictionaries::Dictionary> dict_;
};

/// max |k(g x, g y) - k(x, y)| over the given pairs and all elements.
double kernel_invariance_residual(const Kernel& kernel, const groups::GroupAction& state_action, const RMatrix& xs,
                                  const RMatrix& ys);

inline constexpr const char* kDualConvention =
    "Ahat_ij = k(y_i, x_j); Ghat = Q Sigma^2 Q^*; Khat = Sigma^+ Q^* Ahat Q Sigma^+; "
    "phi = Q Sigma v on training points, k(x, X) Q Sigma^+ v elsewhere";

/// Dual (M x M) Koopman approximation. `spectrum.K` is Khat on the retained
/// r directions; a block fit stores it block-diagonal with `spectrum.layout`.
struct DualModel {
    CMatrix Ghat;
    CMatrix Ahat;
    CMatrix Q;      ///< M x r, orthonormal columns in the original data order
    RVector sigma;  ///< r singular values of Psi_x
    edmd::KoopmanModel spectrum;
    Kernel kernel;
    RMatrix train_x;
    std::string convention = kDualConvention;
    /// Block fits: max_g ||P Ghat - Ghat P|| / ||Ghat|| and the same for Ahat.
    double ghat_commutant = -1.0;
    double ahat_commutant = -1.0;

    const CMatrix& Khat() const { return spectrum.K; }
    int rank() const { return static_cast<int>(sigma.size()); }
    const std::vector<cplx>& eigenvalues() const { return spectrum.eigenvalues; }
};

/// Ghat eigenvalues below rcond * max are dropped, the same relative cutoff
/// the Gram-matrix EDMD solver applies to G.
DualModel kdmd_fit(const Kernel& kernel, const dynamics::SnapshotSet& snapshots, double rcond = 1e-10);

/// Data-index action: row g*M0 + i of a symmetrized snapshot set is g x_i, so
/// element h acts as the left-multiplication permutation (x) I_M0.
groups::GroupAction data_action(const groups::GroupPtr& group, int base_pairs);

/// Isotypic transform of data_action(group, base_pairs), built as the
/// transform of the regular representation (x) I_M0.
groups::IsotypicTransform data_transform(const groups::GroupPtr& group, int base_pairs);

/// ||P_h C P_h^T - C||_F / ||C||_F maximized over h, for the data permutation.
double data_commutant_residual(const CMatrix& c, const groups::FiniteGroup& group, int base_pairs);

struct BlockKdmdOptions {
    double rcond = 1e-10;
    /// Ghat commutant residual above this means the rows are not ordered by
    /// group element or the data is not symmetric.
    double order_tolerance = 1e-6;
};

/// Block variant for snapshot sets produced by symmetrize_snapshots under
/// `state_action`. One fit per irrep from copy 0, replicated to other copies.
DualModel block_kdmd_fit(const Kernel& kernel, const dynamics::SnapshotSet& snapshots,
                         const groups::GroupAction& state_action, const BlockKdmdOptions& options = {});

/// Eigenfunction values on the training states, M x r: Q Sigma V.
CMatrix training_eigenfunctions(const DualModel& model);

/// Eigenfunction values at new states, rows x r.
CMatrix eigenfunction_eval(const DualModel& model, const RMatrix& states);

/// Koopman modes of the full-state observable, r x n: Xi = W^* Sigma^+ Q^* X.
CMatrix dual_modes(const DualModel& model);

}  // namespace koopsym::kdmd
