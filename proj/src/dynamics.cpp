#include "koopsym/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "koopsym/error.hpp"
#include "koopsym/parallel.hpp"

namespace koopsym::dynamics {

DuffingNetwork DuffingNetwork::uniform(int nodes, double strength, double alpha, double beta, double sigma) {
    require(nodes >= 1, ErrorKind::InvalidArgument, "network needs at least one node");
    DuffingNetwork net;
    net.node_count = nodes;
    net.alpha = alpha;
    net.beta = beta;
    net.sigma = sigma;
    net.eta = RMatrix::Constant(nodes, nodes, strength);
    net.eta.diagonal().setZero();
    return net;
}

RVector duffing_rhs(const DuffingNetwork& net, const RVector& state) {
    const int k = net.node_count;
    require(state.size() == 2 * k, ErrorKind::DimensionMismatch,
            "state has size " + std::to_string(state.size()) + ", expected " + std::to_string(2 * k));
    require(net.eta.rows() == k && net.eta.cols() == k, ErrorKind::DimensionMismatch,
            "coupling matrix must be node_count x node_count");
    RVector out(2 * k);
    const double a2 = net.alpha * net.alpha;
    for (int i = 0; i < k; ++i) {
        const double x = state(2 * i);
        const double y = state(2 * i + 1);
        double coupling = 0.0;
        for (int j = 0; j < k; ++j)
            if (j != i) coupling += net.eta(i, j) * (x - state(2 * j));
        out(2 * i) = y;
        out(2 * i + 1) = -net.sigma * y - x * (net.beta + a2 * x * x) + coupling;
    }
    return out;
}

VectorField vector_field(const DuffingNetwork& net) {
    return [net](const RVector& s) { return duffing_rhs(net, s); };
}

RMatrix integrate(const VectorField& rhs, const RVector& x0, double dt, int steps) {
    require(steps >= 1, ErrorKind::InvalidArgument, "need at least one step");
    require(std::isfinite(dt) && dt > 0.0, ErrorKind::InvalidArgument, "time step must be positive");
    RMatrix traj(steps + 1, x0.size());
    RVector x = x0;
    traj.row(0) = x.transpose();
    for (int s = 1; s <= steps; ++s) {
        const RVector k1 = rhs(x);
        const RVector k2 = rhs(x + 0.5 * dt * k1);
        const RVector k3 = rhs(x + 0.5 * dt * k2);
        const RVector k4 = rhs(x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) fail(ErrorKind::Divergence, "integration diverged at step " + std::to_string(s));
        traj.row(s) = x.transpose();
    }
    return traj;
}

SnapshotSet sample_snapshots(const VectorField& rhs, const std::vector<RVector>& initial_conditions, double dt,
                             int steps_per_trajectory) {
    require(!initial_conditions.empty(), ErrorKind::InvalidArgument, "no initial conditions");
    require(steps_per_trajectory >= 1, ErrorKind::InvalidArgument, "need at least one step per trajectory");
    const Eigen::Index n = initial_conditions.front().size();
    for (const auto& ic : initial_conditions)
        require(ic.size() == n, ErrorKind::DimensionMismatch, "initial conditions differ in dimension");
    const int traj_count = static_cast<int>(initial_conditions.size());
    const int steps = steps_per_trajectory;
    SnapshotSet out;
    out.dt = dt;
    out.X.resize(static_cast<Eigen::Index>(traj_count) * steps, n);
    out.Y.resize(static_cast<Eigen::Index>(traj_count) * steps, n);
    parallel_for(traj_count, [&](int t) {
        const RMatrix traj = integrate(rhs, initial_conditions[t], dt, steps);
        const Eigen::Index base = static_cast<Eigen::Index>(t) * steps;
        out.X.middleRows(base, steps) = traj.topRows(steps);
        out.Y.middleRows(base, steps) = traj.bottomRows(steps);
    });
    return out;
}

std::vector<RVector> uniform_initial_conditions(int count, int dim, double half_width, std::uint64_t seed) {
    require(count >= 0 && dim >= 1, ErrorKind::InvalidArgument, "invalid sample shape");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-half_width, half_width);
    std::vector<RVector> out(count, RVector(dim));
    for (auto& v : out)
        for (int j = 0; j < dim; ++j) v(j) = dist(rng);
    return out;
}

SnapshotSet linear_map_snapshots(const RMatrix& map, const std::vector<RVector>& states) {
    require(map.rows() == map.cols(), ErrorKind::DimensionMismatch, "map must be square");
    SnapshotSet out;
    out.dt = 1.0;
    out.X.resize(static_cast<Eigen::Index>(states.size()), map.cols());
    for (std::size_t i = 0; i < states.size(); ++i) {
        require(states[i].size() == map.cols(), ErrorKind::DimensionMismatch, "state dimension mismatch");
        out.X.row(i) = states[i].transpose();
    }
    out.Y = out.X * map.transpose();
    return out;
}

SnapshotSet symmetrize_snapshots(const SnapshotSet& s, const groups::GroupAction& action) {
    require(action.dim() == s.dim(), ErrorKind::DimensionMismatch,
            "action dimension " + std::to_string(action.dim()) + " does not match state dimension " +
                std::to_string(s.dim()));
    require(action.is_real(), ErrorKind::InvalidArgument, "state-space action must be real");
    const int order = action.group().order();
    const Eigen::Index m = s.pairs();
    SnapshotSet out;
    out.dt = s.dt;
    out.meta = s.meta;
    out.X.resize(order * m, s.dim());
    out.Y.resize(order * m, s.dim());
    for (int g = 0; g < order; ++g) {
        const RMatrix mt = action.real_matrix(g).transpose();
        out.X.middleRows(g * m, m) = s.X * mt;
        out.Y.middleRows(g * m, m) = s.Y * mt;
    }
    return out;
}

namespace {

RMatrix sorted_rows(const RMatrix& a) {
    std::vector<Eigen::Index> idx(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index p, Eigen::Index q) {
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (a(p, j) != a(q, j)) return a(p, j) < a(q, j);
        return false;
    });
    RMatrix out(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) out.row(i) = a.row(idx[i]);
    return out;
}

}  // namespace

double symmetry_residual(const SnapshotSet& s, const groups::GroupAction& action) {
    require(action.dim() == s.dim(), ErrorKind::DimensionMismatch, "action dimension mismatch");
    RMatrix pairs(s.pairs(), 2 * s.dim());
    pairs << s.X, s.Y;
    const RMatrix reference = sorted_rows(pairs);
    double worst = 0.0;
    for (int g = 0; g < action.group().order(); ++g) {
        const RMatrix mt = action.real_matrix(g).transpose();
        RMatrix image(s.pairs(), 2 * s.dim());
        image << s.X * mt, s.Y * mt;
        worst = std::max(worst, (sorted_rows(image) - reference).cwiseAbs().maxCoeff());
    }
    return worst;
}

double equivariance_residual(const VectorField& rhs, const groups::GroupAction& action,
                             const std::vector<RVector>& samples) {
    double worst = 0.0;
    for (const auto& x : samples) {
        const RVector fx = rhs(x);
        for (int g = 0; g < action.group().order(); ++g) {
            const RMatrix m = action.real_matrix(g);
            worst = std::max(worst, (rhs(m * x) - m * fx).norm());
        }
    }
    return worst;
}

std::uint64_t snapshot_hash(const SnapshotSet& s) {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&h](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    feed(s.X.data(), sizeof(double) * static_cast<std::size_t>(s.X.size()));
    feed(s.Y.data(), sizeof(double) * static_cast<std::size_t>(s.Y.size()));
    feed(&s.dt, sizeof(double));
    return h;
}

}  // namespace koopsym::dynamics
