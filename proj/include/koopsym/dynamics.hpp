#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "koopsym/groups.hpp"
#include "koopsym/linalg.hpp"

namespace koopsym::dynamics {

using VectorField = std::function<RVector(const RVector&)>;

/// Network of identical Duffing oscillators with linear coupling.
/// State layout is (x_1, y_1, ..., x_k, y_k).
struct DuffingNetwork {
    int node_count = 1;
    double alpha = 1.0;
    double beta = -1.0;
    double sigma = 0.5;
    RMatrix eta;  ///< node_count x node_count, diagonal ignored

    int state_dim() const { return 2 * node_count; }

    /// All off-diagonal couplings equal to `strength`.
    static DuffingNetwork uniform(int nodes, double strength, double alpha = 1.0, double beta = -1.0,
                                  double sigma = 0.5);
};

/// x_i' = y_i,
/// y_i' = -sigma y_i - x_i (beta + alpha^2 x_i^2) + sum_j eta_ij (x_i - x_j).
RVector duffing_rhs(const DuffingNetwork& net, const RVector& state);

VectorField vector_field(const DuffingNetwork& net);

/// Paired snapshots; row i of Y is the flow of row i of X over dt.
struct SnapshotSet {
    RMatrix X;
    RMatrix Y;
    double dt = 0.0;
    std::string meta;

    int pairs() const { return static_cast<int>(X.rows()); }
    int dim() const { return static_cast<int>(X.cols()); }
};

/// Classical fixed-step RK4. Returns (steps + 1) x n, first row x0.
/// Throws Divergence with the step index on a non-finite state.
RMatrix integrate(const VectorField& rhs, const RVector& x0, double dt, int steps);

/// One RK4 step per snapshot interval; pairs are consecutive states along
/// each trajectory, trajectories stacked in initial-condition order.
SnapshotSet sample_snapshots(const VectorField& rhs, const std::vector<RVector>& initial_conditions, double dt,
                             int steps_per_trajectory);

/// Seeded uniform samples in the box [-half_width, half_width]^dim.
std::vector<RVector> uniform_initial_conditions(int count, int dim, double half_width, std::uint64_t seed);

/// Pairs (x, A x) for a linear discrete-time map.
SnapshotSet linear_map_snapshots(const RMatrix& map, const std::vector<RVector>& states);

/// All transformed copies of every pair; row g*M + i holds (M(g) x_i, M(g) y_i).
SnapshotSet symmetrize_snapshots(const SnapshotSet& s, const groups::GroupAction& action);

/// Largest deviation between the pair set and its image under any group
/// element, comparing sorted rows. Zero for exactly symmetric data.
double symmetry_residual(const SnapshotSet& s, const groups::GroupAction& action);

/// max over samples and elements of ||g(M x) - M g(x)||_2.
double equivariance_residual(const VectorField& rhs, const groups::GroupAction& action,
                             const std::vector<RVector>& samples);

/// FNV-1a over the raw bytes of X, Y and dt.
std::uint64_t snapshot_hash(const SnapshotSet& s);

}  // namespace koopsym::dynamics
