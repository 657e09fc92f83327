#include "koopsym/kdmd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "koopsym/error.hpp"
#include "koopsym/parallel.hpp"

namespace koopsym::kdmd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Eigenpairs of a Hermitian PSD matrix, largest first.
struct HermitianEig {
    RVector values;
    CMatrix vectors;
};

HermitianEig hermitian_eig(const CMatrix& g) {
    HermitianEig out;
    const Eigen::Index n = g.rows();
    if (n == 0) {
        out.values.resize(0);
        out.vectors.resize(0, 0);
        return out;
    }
    RVector vals;
    CMatrix vecs;
    if (g.imag().cwiseAbs().maxCoeff() == 0.0) {
        Eigen::SelfAdjointEigenSolver<RMatrix> es(g.real());
        require(es.info() == Eigen::Success, ErrorKind::Numerical, "Ghat eigendecomposition did not converge");
        vals = es.eigenvalues();
        vecs = es.eigenvectors().cast<cplx>();
    } else {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
        require(es.info() == Eigen::Success, ErrorKind::Numerical, "Ghat eigendecomposition did not converge");
        vals = es.eigenvalues();
        vecs = es.eigenvectors();
    }
    out.values = vals.reverse();
    out.vectors = vecs.rowwise().reverse();
    return out;
}

/// Khat = Sigma^+ Q^* A Q Sigma^+ on the leading `rank` directions.
CMatrix dual_operator(const HermitianEig& eig, int rank, const CMatrix& a, CMatrix& q, RVector& sigma) {
    q = eig.vectors.leftCols(rank);
    sigma = eig.values.head(rank).cwiseSqrt();
    const CVector inv = sigma.cwiseInverse().cast<cplx>();
    return inv.asDiagonal() * (q.adjoint() * a * q) * inv.asDiagonal();
}

int retained(const RVector& values, double cut) {
    int r = 0;
    while (r < values.size() && values(r) > cut) ++r;
    return r;
}

CMatrix hermitize(const CMatrix& g) { return 0.5 * (g + g.adjoint()); }

CMatrix kron_identity(const CMatrix& a, int block) {
    CMatrix out = CMatrix::Zero(a.rows() * block, a.cols() * block);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != cplx(0.0))
                out.block(i * block, j * block, block, block).diagonal().setConstant(a(i, j));
    return out;
}

}  // namespace

Kernel Kernel::polynomial(int degree) {
    require(degree >= 1, ErrorKind::InvalidArgument, "polynomial kernel degree must be >= 1");
    Kernel k;
    k.kind_ = Kind::Polynomial;
    k.degree_ = degree;
    return k;
}

Kernel Kernel::explicit_dictionary(dictionaries::Dictionary dict) {
    Kernel k;
    k.kind_ = Kind::Dictionary;
    k.degree_ = 0;
    k.dict_ = std::make_shared<const dictionaries::Dictionary>(std::move(dict));
    return k;
}

Kernel Kernel::parse(const std::string& spec, const dictionaries::Dictionary* dict) {
    if (spec.rfind("poly", 0) == 0) {
        int degree = 0;
        try {
            std::size_t used = 0;
            degree = std::stoi(spec.substr(4), &used);
            if (used != spec.size() - 4) degree = 0;
        } catch (const std::exception&) {
            degree = 0;
        }
        require(degree >= 1, ErrorKind::Config, "bad polynomial kernel '" + spec + "', expected e.g. poly2");
        return polynomial(degree);
    }
    if (spec == "dictionary") {
        require(dict != nullptr, ErrorKind::Config, "dictionary kernel needs a dictionary");
        return explicit_dictionary(*dict);
    }
    fail(ErrorKind::Config, "unknown kernel '" + spec + "'");
}

std::string Kernel::name() const {
    return kind_ == Kind::Polynomial ? "poly" + std::to_string(degree_) : "dictionary";
}

bool Kernel::is_real() const {
    return kind_ == Kind::Polynomial;
}

cplx Kernel::operator()(const RVector& x, const RVector& y) const {
    require(x.size() == y.size(), ErrorKind::DimensionMismatch, "kernel arguments differ in length");
    if (kind_ == Kind::Polynomial) return std::pow(1.0 + x.dot(y), degree_);
    const CMatrix px = dict_->evaluate(x.transpose()), py = dict_->evaluate(y.transpose());
    return (px * py.adjoint())(0, 0);
}

CMatrix Kernel::matrix(const RMatrix& a, const RMatrix& b) const {
    require(a.cols() == b.cols(), ErrorKind::DimensionMismatch, "kernel arguments differ in dimension");
    if (kind_ == Kind::Dictionary) return dict_->evaluate(a) * dict_->evaluate(b).adjoint();
    RMatrix inner = a * b.transpose();
    parallel_for(static_cast<int>(inner.rows()), [&](int i) {
        for (Eigen::Index j = 0; j < inner.cols(); ++j) {
            const double base = 1.0 + inner(i, j);
            double v = base;
            for (int d = 1; d < degree_; ++d) v *= base;
            inner(i, j) = v;
        }
    });
    return inner.cast<cplx>();
}

double kernel_invariance_residual(const Kernel& kernel, const groups::GroupAction& state_action, const RMatrix& xs,
                                  const RMatrix& ys) {
    require(xs.rows() == ys.rows(), ErrorKind::DimensionMismatch, "pair counts differ");
    require(state_action.dim() == xs.cols(), ErrorKind::DimensionMismatch, "action does not match the state");
    double worst = 0.0;
    for (int g = 0; g < state_action.group().order(); ++g) {
        const RMatrix m = state_action.real_matrix(g);
        for (Eigen::Index i = 0; i < xs.rows(); ++i) {
            const RVector x = xs.row(i).transpose(), y = ys.row(i).transpose();
            worst = std::max(worst, std::abs(kernel(m * x, m * y) - kernel(x, y)));
        }
    }
    return worst;
}

DualModel kdmd_fit(const Kernel& kernel, const dynamics::SnapshotSet& snapshots, double rcond) {
    require(snapshots.pairs() >= 1, ErrorKind::InvalidArgument, "kernel DMD needs at least one snapshot pair");
    DualModel model;
    model.kernel = kernel;
    model.train_x = snapshots.X;
    model.Ghat = hermitize(kernel.matrix(snapshots.X, snapshots.X));
    model.Ahat = kernel.matrix(snapshots.Y, snapshots.X);

    const HermitianEig eig = hermitian_eig(model.Ghat);
    const double top = eig.values.size() ? eig.values(0) : 0.0;
    const int rank = retained(eig.values, rcond * top);
    auto& sp = model.spectrum;
    sp.rcond = rcond;
    sp.rank_of_G = rank;
    sp.basis_ref = "kernel:" + kernel.name();
    sp.K = dual_operator(eig, rank, model.Ahat, model.Q, model.sigma);
    edmd::compute_spectrum(sp);
    return model;
}

groups::GroupAction data_action(const groups::GroupPtr& group, int base_pairs) {
    return groups::tensor_identity(groups::cayley_permutation_rep(group), base_pairs);
}

groups::IsotypicTransform data_transform(const groups::GroupPtr& group, int base_pairs) {
    require(base_pairs >= 1, ErrorKind::InvalidArgument, "base pair count must be >= 1");
    groups::IsotypicTransform reg = groups::unitary_isotypic_transform(groups::cayley_permutation_rep(group));
    groups::IsotypicTransform out;
    out.matrix = kron_identity(reg.matrix, base_pairs);
    out.layout = reg.layout;
    for (auto& s : out.layout) s.size *= base_pairs;
    out.source_size = reg.source_size * base_pairs;
    out.warnings = reg.warnings;
    return out;
}

double data_commutant_residual(const CMatrix& c, const groups::FiniteGroup& group, int base_pairs) {
    const int order = group.order();
    require(c.rows() == c.cols() && c.rows() == static_cast<Eigen::Index>(order) * base_pairs,
            ErrorKind::DimensionMismatch, "matrix does not match the data action");
    const double cn = c.norm();
    if (cn == 0.0) return 0.0;
    const Eigen::Index m = c.rows();
    double worst = 0.0;
    for (int h = 0; h < order; ++h) {
        std::vector<Eigen::Index> perm(m);
        for (int g = 0; g < order; ++g)
            for (int i = 0; i < base_pairs; ++i)
                perm[static_cast<Eigen::Index>(g) * base_pairs + i] =
                    static_cast<Eigen::Index>(group.mul(h, g)) * base_pairs + i;
        double sq = 0.0;
        for (Eigen::Index b = 0; b < m; ++b)
            for (Eigen::Index a = 0; a < m; ++a) sq += std::norm(c(perm[a], perm[b]) - c(a, b));
        worst = std::max(worst, std::sqrt(sq) / cn);
    }
    return worst;
}

DualModel block_kdmd_fit(const Kernel& kernel, const dynamics::SnapshotSet& snapshots,
                         const groups::GroupAction& state_action, const BlockKdmdOptions& options) {
    const auto& group = state_action.group();
    const int order = group.order();
    const int m = snapshots.pairs();
    require(m >= 1, ErrorKind::InvalidArgument, "kernel DMD needs at least one snapshot pair");
    require(state_action.dim() == snapshots.dim(), ErrorKind::DimensionMismatch,
            "state action has dimension " + std::to_string(state_action.dim()) + ", data has " +
                std::to_string(snapshots.dim()));
    require(m % order == 0, ErrorKind::InvalidOrder,
            std::to_string(m) + " snapshot pairs are not a multiple of the group order " + std::to_string(order));
    const int base = m / order;

    DualModel model;
    model.kernel = kernel;
    model.train_x = snapshots.X;
    model.Ghat = hermitize(kernel.matrix(snapshots.X, snapshots.X));
    model.Ahat = kernel.matrix(snapshots.Y, snapshots.X);
    model.ghat_commutant = data_commutant_residual(model.Ghat, group, base);
    model.ahat_commutant = data_commutant_residual(model.Ahat, group, base);
    require(model.ghat_commutant <= options.order_tolerance, ErrorKind::Symmetry,
            "Ghat does not commute with the data permutations (residual " + std::to_string(model.ghat_commutant) +
                "); rows must be grouped by element as g*M0 + i and the data symmetric");

    const groups::IsotypicTransform t = data_transform(state_action.group_ptr(), base);
    const CMatrix tbar = t.matrix.conjugate();
    const auto& layout = t.layout;
    const int slots = static_cast<int>(layout.size());
    std::vector<int> off(slots + 1, 0);
    for (int s = 0; s < slots; ++s) off[s + 1] = off[s] + layout[s].size;

    std::vector<int> source(slots), fitted;
    for (int s = 0; s < slots; ++s) {
        source[s] = layout[s].copy > 0 ? source[s - 1] : s;
        if (source[s] == s && layout[s].size > 0) fitted.push_back(s);
    }
    const int nf = static_cast<int>(fitted.size());
    std::vector<HermitianEig> eigs(nf);
    std::vector<CMatrix> a_blocks(nf);
    parallel_for(nf, [&](int f) {
        const int s = fitted[f];
        const auto rows = tbar.middleRows(off[s], layout[s].size);
        eigs[f] = hermitian_eig(hermitize(rows * model.Ghat * rows.adjoint()));
        a_blocks[f] = rows * model.Ahat * rows.adjoint();
    });
    double top = 0.0;
    for (const auto& e : eigs)
        if (e.values.size()) top = std::max(top, e.values(0));
    const double cut = options.rcond * top;

    auto& sp = model.spectrum;
    sp.rcond = options.rcond;
    sp.basis_ref = "kernel:" + kernel.name() + ", data isotypic";
    sp.assumed_group = group.name();
    sp.commutant_residual = std::max(model.ghat_commutant, model.ahat_commutant);
    std::vector<CMatrix> q_blocks(nf), k_blocks(nf);
    std::vector<RVector> s_blocks(nf);
    std::vector<Eigen::ComplexEigenSolver<CMatrix>> solvers(nf);
    sp.block_seconds.assign(slots, 0.0);
    const auto eig_start = Clock::now();
    parallel_for(nf, [&](int f) {
        const int rank = retained(eigs[f].values, cut);
        k_blocks[f] = dual_operator(eigs[f], rank, a_blocks[f], q_blocks[f], s_blocks[f]);
        const auto t0 = Clock::now();
        if (rank > 0) {
            solvers[f].compute(k_blocks[f], true);
            require(solvers[f].info() == Eigen::Success, ErrorKind::Numerical, "eigen-solver did not converge");
        }
        sp.block_seconds[fitted[f]] = seconds_since(t0);
    });
    sp.eig_seconds = seconds_since(eig_start);

    std::vector<int> fit_index(slots, -1);
    for (int f = 0; f < nf; ++f) fit_index[fitted[f]] = f;
    int r = 0;
    for (int s = 0; s < slots; ++s)
        if (fit_index[source[s]] >= 0) r += static_cast<int>(s_blocks[fit_index[source[s]]].size());

    sp.K = CMatrix::Zero(r, r);
    model.Q = CMatrix::Zero(m, r);
    model.sigma.resize(r);
    CMatrix vectors = CMatrix::Zero(r, r);
    std::vector<cplx> values;
    std::vector<int> blocks;
    int col = 0;
    for (int s = 0; s < slots; ++s) {
        const int f = fit_index[source[s]];
        const int rank = f >= 0 ? static_cast<int>(s_blocks[f].size()) : 0;
        sp.layout.push_back({layout[s].irrep, layout[s].copy, rank});
        if (rank == 0) continue;
        sp.K.block(col, col, rank, rank) = k_blocks[f];
        model.Q.middleCols(col, rank) = t.matrix.middleRows(off[s], layout[s].size).transpose() * q_blocks[f];
        model.sigma.segment(col, rank) = s_blocks[f];
        for (int k = 0; k < rank; ++k) {
            values.push_back(solvers[f].eigenvalues()(k));
            blocks.push_back(s);
        }
        vectors.block(col, col, rank, rank) = solvers[f].eigenvectors();
        col += rank;
    }
    sp.rank_of_G = r;
    edmd::set_spectrum(sp, values, vectors, blocks);
    return model;
}

CMatrix training_eigenfunctions(const DualModel& model) {
    return model.Q * model.sigma.cast<cplx>().asDiagonal() * model.spectrum.right_eigenvectors;
}

CMatrix eigenfunction_eval(const DualModel& model, const RMatrix& states) {
    require(states.cols() == model.train_x.cols(), ErrorKind::DimensionMismatch, "state dimension differs");
    const CVector inv = model.sigma.cwiseInverse().cast<cplx>();
    return model.kernel.matrix(states, model.train_x) * model.Q * inv.asDiagonal() *
           model.spectrum.right_eigenvectors;
}

CMatrix dual_modes(const DualModel& model) {
    const CVector inv = model.sigma.cwiseInverse().cast<cplx>();
    return model.spectrum.left_eigenvectors.adjoint() * inv.asDiagonal() * model.Q.adjoint() *
           model.train_x.cast<cplx>();
}

}  // namespace koopsym::kdmd
