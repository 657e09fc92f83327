#pragma once

#include <string>
#include <vector>

#include "koopsym/dictionaries.hpp"
#include "koopsym/groups.hpp"
#include "koopsym/linalg.hpp"

namespace koopsym::edmd {

/// G = Psi_x^* Psi_x and A = Psi_x^* Psi_y.
struct GramPair {
    CMatrix G;
    CMatrix A;
    int M_used = 0;
};

GramPair assemble_gram(const CMatrix& psix, const CMatrix& psiy);

/// Finite-dimensional Koopman approximation acting on coefficient vectors:
/// Psi(y) ~= Psi(x) K, and phi_j = Psi u_j.
struct KoopmanModel {
    CMatrix K;
    /// Slot layout when fitted block-wise (empty for a dense fit).
    std::vector<groups::BlockSlot> layout;
    std::vector<cplx> eigenvalues;
    CMatrix right_eigenvectors;  ///< columns u_j, unit norm, phase fixed
    CMatrix left_eigenvectors;   ///< columns w_j, w_j^* u_k = delta_jk
    std::vector<int> eigen_block;  ///< slot index of each eigenpair, -1 for dense
    int rank_of_G = 0;
    double rcond = 1e-10;
    std::string basis_ref;
    std::string assumed_group;
    /// Relative off-block size of the isotypic Gram pair (block fits), or
    /// max_g ||P K - K P|| / ||K|| when set by the caller. Negative if unknown.
    double commutant_residual = -1.0;
    /// Max ||K_pq - K_p0|| / ||K_p0|| over copies (independent block fits).
    double copy_deviation = 0.0;
    double eig_seconds = 0.0;
    std::vector<double> block_seconds;
    std::vector<std::string> warnings;

    int size() const { return static_cast<int>(K.rows()); }
    std::vector<int> block_sizes() const;
};

/// Both give the same K in exact arithmetic. Gram squares the condition
/// number of Psi_x; Direct does not, and is the default. rcond is relative to
/// the largest singular value of the matrix being inverted (G or Psi_x).
enum class Solver {
    Gram,    ///< K = G^+ A
    Direct,  ///< K = Psi_x^+ Psi_y via a Householder QR of [Psi_x Psi_y]
};

/// Eigenpairs sorted by descending |lambda|, then real part, then imaginary part.
KoopmanModel edmd_fit(const CMatrix& psix, const CMatrix& psiy, double rcond = 1e-10,
                      Solver solver = Solver::Direct);

/// Same as edmd_fit on precomputed Gram matrices.
KoopmanModel edmd_fit(const GramPair& gram, double rcond = 1e-10);

struct BlockOptions {
    double rcond = 1e-10;
    Solver solver = Solver::Direct;
    /// Fit every copy of an irrep instead of replicating copy 0.
    bool independent = false;
    /// Build the full isotypic Gram pair to measure how far the data is
    /// from symmetric; adds one dense product of the snapshot matrices.
    bool check_symmetry = true;
    double asymmetry_warning = 1e-6;
};

/// Block fit in an isotypic basis: one least-squares K per irrep from the copy-0
/// columns, replicated to the other copies. Pseudoinverse truncation uses
/// the largest singular value over all blocks so results match a dense fit.
KoopmanModel block_edmd_fit(const CMatrix& psix_xi, const CMatrix& psiy_xi,
                            const std::vector<groups::BlockSlot>& layout, const BlockOptions& options = {});

/// Sorts, normalizes and attaches left eigenvectors for a given K.
void compute_spectrum(KoopmanModel& model);

/// Same for eigenpairs computed elsewhere (e.g. per block); `blocks` gives
/// the slot of each pair.
void set_spectrum(KoopmanModel& model, const std::vector<cplx>& values, const CMatrix& vectors,
                  const std::vector<int>& blocks);

/// phi_j evaluated at the rows that produced psi.
CVector eigenfunction_eval(const KoopmanModel& model, int j, const CMatrix& psi);
CVector eigenfunction_eval(const KoopmanModel& model, int j, const dictionaries::Dictionary& d, const RMatrix& states);

struct ModeDecomposition {
    CMatrix B;       ///< N x n, Psi_x B ~= X
    CMatrix modes;   ///< N x n, row i is v_i^T = w_i^* B
    double reconstruction_residual = 0.0;  ///< ||Psi B - X||_F / ||X||_F
    std::vector<std::string> warnings;
};

/// Full-state observable projected on the dictionary, then on eigenfunctions.
ModeDecomposition koopman_modes(const KoopmanModel& model, const CMatrix& psix, const RMatrix& states_x,
                                double rcond = 1e-10);

/// x ~= sum_i v_i phi_i(x) for every row of psi.
CMatrix reconstruct_states(const KoopmanModel& model, const ModeDecomposition& modes, const CMatrix& psi);

/// Rows psi0, psi0 K, psi0 K^2, ...
CMatrix propagate(const KoopmanModel& model, const CVector& psi0, int steps);

/// max_g ||P(g) K - K P(g)||_F / ||K||_F.
double commutant_residual(const CMatrix& K, const groups::GroupAction& index_action);

/// Block fits reassembled as a dense K in the original dictionary basis:
/// K_psi = T^T K_xi T^-T.
CMatrix to_source_basis(const CMatrix& k_xi, const CMatrix& transform);

}  // namespace koopsym::edmd
