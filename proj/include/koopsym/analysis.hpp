#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "koopsym/dictionaries.hpp"
#include "koopsym/dynamics.hpp"
#include "koopsym/edmd.hpp"
#include "koopsym/groups.hpp"

namespace koopsym::analysis {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Relative block norms ||K_ij||_F / ||K||_F and their thresholded pattern.
struct BlockPattern {
    std::vector<int> sizes;
    /// Irrep index of each block when blocks are whole isotypic components.
    std::vector<int> irreps;
    std::vector<std::string> labels;
    RMatrix residuals;
    BoolMatrix interaction;
    double tau = 1e-6;

    int blocks() const { return static_cast<int>(sizes.size()); }
};

BlockPattern extract_block_pattern(const CMatrix& K, const std::vector<int>& sizes, double tau = 1e-6);

/// Pattern over the isotypic components of `transform` (copies merged);
/// K is in that transform's basis.
BlockPattern component_pattern(const CMatrix& K, const groups::IsotypicTransform& transform,
                               const groups::FiniteGroup& group, double tau = 1e-6);

/// Element of `sigma` with the same matrix, for every element of `gamma`.
/// Throws InvalidArgument when gamma's matrices are not a subgroup of sigma's.
std::vector<int> embed_subgroup(const groups::GroupAction& sigma, const groups::GroupAction& gamma,
                                double tol = 1e-10);

struct InteractionPrediction {
    std::string assumed_group;
    std::string candidate_group;
    std::vector<int> embedding;
    /// (Sigma irrep p, Gamma irrep q): rank of P^p_Sigma P^q_Gamma on the
    /// regular representation of Sigma.
    Eigen::MatrixXi overlap_rank;
    /// Same pairs by the coset character sums: some coset h has
    /// sum_g conj(chi_p(h g^-1)) conj(chi_q(g)) != 0.
    BoolMatrix character_overlap;
    /// Over Sigma irrep pairs: some q overlaps both.
    BoolMatrix interaction;
    bool character_agrees = true;
    /// Whether the "= 0 for all h" wording of the coset criterion matches the
    /// rank route; reported, not used.
    bool printed_wording_agrees = false;
    std::vector<std::string> notes;
};

InteractionPrediction predict_interactions(const groups::GroupAction& sigma, const groups::GroupAction& gamma,
                                           double tol = 1e-9);

struct Candidate {
    std::string name;
    double score = 0.0;
    bool tied = false;
    int predicted_zero = 0;
    int matched_zero = 0;
    int predicted_nonzero = 0;
    int missing_nonzero = 0;
};

/// Candidates ranked by agreement between `observed` (component pattern in
/// the Sigma basis) and each candidate's predicted interactions. Score is the
/// fraction of predicted-zero off-diagonal pairs observed below tau, minus the
/// fraction of predicted-nonzero pairs observed below tau.
std::vector<Candidate> infer_symmetry(const BlockPattern& observed,
                                      const std::vector<InteractionPrediction>& candidates);

/// Score of a single prediction against an observed pattern.
Candidate score_candidate(const BlockPattern& observed, const InteractionPrediction& prediction);

/// Noise level of block residuals from refits on row resamples. Returns
/// 3 x the largest block norm attributable to resampling spread, relative to
/// ||K||_F.
double bootstrap_noise_floor(const CMatrix& xi_x, const CMatrix& xi_y, const std::vector<int>& sizes,
                             int resamples = 50, std::uint64_t seed = 0);

struct NoiseSetup {
    dynamics::SnapshotSet data;  ///< symmetric, noiseless
    groups::GroupAction state_action;
    dictionaries::Dictionary dictionary;  ///< closed under the action
    groups::IsotypicTransform transform;
};

/// Z2 linear benchmark: y = [[0.7, 0.2], [0.2, 0.7]] x on `base_points`
/// uniform points in [-1, 1]^2 and their negatives, monomials up to degree 3.
NoiseSetup z2_linear_benchmark(int base_points = 200, std::uint64_t seed = 0);

struct NoiseEntry {
    int row = 0;
    int col = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    bool consistent = true;
};

struct NoiseReport {
    double noise_scale = 0.0;
    int realizations = 0;
    int used = 0;
    int skipped = 0;
    bool stderr_defined = false;
    std::vector<NoiseEntry> off_block;
    double fraction_consistent = 1.0;
    double mean_stderr = 0.0;
    double max_abs_mean = 0.0;
    bool consistent = true;  ///< fraction_consistent >= 0.95
    std::vector<std::string> warnings;
};

struct NoiseOptions {
    double noise_scale = 0.01;
    int realizations = 200;
    std::uint64_t seed = 0;
    double rcond = 1e-10;
    /// An entry passes when |mean| <= sigmas * stderr.
    double sigmas = 4.0;
    /// ... or when |mean| is below this (relative to mean ||K||), so that
    /// noiseless runs are consistent.
    double zero_tolerance = 1e-8;
};

/// Gaussian sensor noise added independently to X and Y, K fitted in the
/// isotypic basis for every realization; off-block entries summarized.
NoiseReport noise_experiment(const NoiseSetup& setup, const NoiseOptions& options);

}  // namespace koopsym::analysis
