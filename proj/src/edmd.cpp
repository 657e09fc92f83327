#include "koopsym/edmd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "koopsym/error.hpp"
#include "koopsym/parallel.hpp"

namespace koopsym::edmd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Pseudoinverse from a precomputed SVD with an absolute cutoff.
CMatrix pinv_from_svd(const Eigen::JacobiSVD<CMatrix>& svd, double cut, int& rank) {
    const RVector& s = svd.singularValues();
    rank = 0;
    while (rank < s.size() && s(rank) > cut) ++rank;
    const RVector inv = s.head(rank).cwiseInverse();
    return svd.matrixV().leftCols(rank) * inv.asDiagonal() * svd.matrixU().leftCols(rank).adjoint();
}

/// One Householder QR of [X Y] gives X^+ Y = R11^+ R12, so only an N x N
/// triangle needs an SVD and its singular values are those of X.
void qr_reduce(const CMatrix& x, const CMatrix& y, CMatrix& r11, CMatrix& r12) {
    const Eigen::Index n = x.cols();
    CMatrix stacked(x.rows(), n + y.cols());
    stacked << x, y;
    Eigen::HouseholderQR<CMatrix> qr(stacked);
    const Eigen::Index top = std::min<Eigen::Index>(x.rows(), n);
    r11 = CMatrix::Zero(n, n);
    r12 = CMatrix::Zero(n, y.cols());
    r11.topRows(top) = qr.matrixQR().topLeftCorner(top, n).triangularView<Eigen::Upper>();
    r12.topRows(top) = qr.matrixQR().topRightCorner(top, y.cols());
}

CMatrix qr_lstsq(const CMatrix& x, const CMatrix& y, double rcond, int& rank) {
    CMatrix r11, r12;
    qr_reduce(x, y, r11, r12);
    Eigen::JacobiSVD<CMatrix> svd(r11, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    return pinv_from_svd(svd, rcond * smax, rank) * r12;
}

struct Eigenpairs {
    std::vector<cplx> values;
    CMatrix vectors;
};

Eigenpairs eigen_decompose(const CMatrix& k) {
    Eigenpairs out;
    if (k.rows() == 0) return out;
    Eigen::ComplexEigenSolver<CMatrix> es(k, true);
    require(es.info() == Eigen::Success, ErrorKind::Numerical, "eigen-solver did not converge");
    out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    out.vectors = es.eigenvectors();
    return out;
}

/// Order, normalize and compute biorthogonal left eigenvectors.
void finish_spectrum(KoopmanModel& model, const std::vector<cplx>& values, const CMatrix& vectors,
                     const std::vector<int>& blocks) {
    const int n = static_cast<int>(values.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return eigenvalue_order(values[a], values[b]); });
    model.eigenvalues.resize(n);
    model.eigen_block.resize(n);
    model.right_eigenvectors.resize(vectors.rows(), n);
    for (int k = 0; k < n; ++k) {
        model.eigenvalues[k] = values[order[k]];
        model.eigen_block[k] = blocks[order[k]];
        CVector v = vectors.col(order[k]);
        const double norm = v.norm();
        if (norm > 0.0) v /= norm;
        normalize_phase(v);
        model.right_eigenvectors.col(k) = v;
    }
    if (n == 0) {
        model.left_eigenvectors.resize(model.K.rows(), 0);
        return;
    }
    Eigen::FullPivLU<CMatrix> lu(model.right_eigenvectors);
    CMatrix uinv;
    if (lu.isInvertible()) {
        uinv = lu.inverse();
    } else {
        uinv = pinv(model.right_eigenvectors);
        model.warnings.push_back("eigenvector matrix is singular; K is not diagonalizable and left eigenvectors are "
                                 "pseudoinverse rows");
    }
    model.left_eigenvectors = uinv.adjoint();
}

std::vector<int> slot_offsets(const std::vector<groups::BlockSlot>& layout) {
    std::vector<int> off;
    int acc = 0;
    for (const auto& s : layout) {
        off.push_back(acc);
        acc += s.size;
    }
    off.push_back(acc);
    return off;
}

}  // namespace

std::vector<int> KoopmanModel::block_sizes() const {
    if (layout.empty()) return {size()};
    std::vector<int> s;
    for (const auto& b : layout) s.push_back(b.size);
    return s;
}

GramPair assemble_gram(const CMatrix& psix, const CMatrix& psiy) {
    require(psix.rows() == psiy.rows() && psix.cols() == psiy.cols(), ErrorKind::DimensionMismatch,
            "Psi_x is " + std::to_string(psix.rows()) + "x" + std::to_string(psix.cols()) + " but Psi_y is " +
                std::to_string(psiy.rows()) + "x" + std::to_string(psiy.cols()));
    GramPair out;
    out.G.noalias() = psix.adjoint() * psix;
    out.A.noalias() = psix.adjoint() * psiy;
    // exact Hermitian symmetry; the product is symmetric only up to rounding
    out.G = (0.5 * (out.G + out.G.adjoint())).eval();
    out.M_used = static_cast<int>(psix.rows());
    return out;
}

void compute_spectrum(KoopmanModel& model) {
    const auto t0 = Clock::now();
    const Eigenpairs ep = eigen_decompose(model.K);
    finish_spectrum(model, ep.values, ep.vectors, std::vector<int>(ep.values.size(), -1));
    model.eig_seconds = seconds_since(t0);
}

void set_spectrum(KoopmanModel& model, const std::vector<cplx>& values, const CMatrix& vectors,
                  const std::vector<int>& blocks) {
    require(static_cast<Eigen::Index>(values.size()) == vectors.cols() && values.size() == blocks.size(),
            ErrorKind::DimensionMismatch, "eigenpair counts differ");
    finish_spectrum(model, values, vectors, blocks);
}

KoopmanModel edmd_fit(const GramPair& gram, double rcond) {
    require(gram.G.rows() == gram.G.cols() && gram.G.rows() == gram.A.rows() && gram.A.rows() == gram.A.cols(),
            ErrorKind::DimensionMismatch, "G and A must be square and of equal size");
    KoopmanModel model;
    model.rcond = rcond;
    if (gram.G.size() == 0) return model;
    Eigen::JacobiSVD<CMatrix> svd(gram.G, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    const CMatrix ginv = pinv_from_svd(svd, rcond * smax, model.rank_of_G);
    model.K.noalias() = ginv * gram.A;
    if (model.rank_of_G < gram.G.rows())
        model.warnings.push_back("G has rank " + std::to_string(model.rank_of_G) + " of " +
                                 std::to_string(gram.G.rows()));
    compute_spectrum(model);
    return model;
}

KoopmanModel edmd_fit(const CMatrix& psix, const CMatrix& psiy, double rcond, Solver solver) {
    if (solver == Solver::Gram) return edmd_fit(assemble_gram(psix, psiy), rcond);
    require(psix.rows() == psiy.rows() && psix.cols() == psiy.cols(), ErrorKind::DimensionMismatch,
            "Psi_x and Psi_y shapes differ");
    KoopmanModel model;
    model.rcond = rcond;
    model.K = qr_lstsq(psix, psiy, rcond, model.rank_of_G);
    if (model.rank_of_G < psix.cols())
        model.warnings.push_back("Psi_x has rank " + std::to_string(model.rank_of_G) + " of " +
                                 std::to_string(psix.cols()));
    compute_spectrum(model);
    return model;
}

KoopmanModel block_edmd_fit(const CMatrix& psix_xi, const CMatrix& psiy_xi,
                            const std::vector<groups::BlockSlot>& layout, const BlockOptions& options) {
    require(psix_xi.rows() == psiy_xi.rows() && psix_xi.cols() == psiy_xi.cols(), ErrorKind::DimensionMismatch,
            "Xi_x and Xi_y shapes differ");
    const std::vector<int> off = slot_offsets(layout);
    const int n = off.back();
    require(n == psix_xi.cols(), ErrorKind::DimensionMismatch,
            "layout covers " + std::to_string(n) + " functions, data has " + std::to_string(psix_xi.cols()));
    const int slots = static_cast<int>(layout.size());

    KoopmanModel model;
    model.rcond = options.rcond;
    model.layout = layout;
    model.K = CMatrix::Zero(n, n);

    // slot s is fitted from its own columns when it is copy 0 or fits are independent
    std::vector<int> source(slots);
    for (int s = 0; s < slots; ++s) {
        source[s] = s;
        if (!options.independent && layout[s].copy > 0) source[s] = source[s - 1];
    }
    std::vector<int> fitted;
    for (int s = 0; s < slots; ++s)
        if (source[s] == s && layout[s].size > 0) fitted.push_back(s);

    if (options.check_symmetry) {
        const GramPair full = assemble_gram(psix_xi, psiy_xi);
        std::vector<int> sizes;
        for (const auto& b : layout) sizes.push_back(b.size);
        const double gn = full.G.norm(), an = full.A.norm();
        double res = std::max(gn > 0 ? offblock_norm(full.G, sizes) / gn : 0.0,
                              an > 0 ? offblock_norm(full.A, sizes) / an : 0.0);
        // copies of an irrep must see identical blocks
        for (int s = 0; s < slots; ++s) {
            if (layout[s].copy == 0 || layout[s].size == 0) continue;
            int first = s;
            while (layout[first].copy > 0) --first;
            const int sz = layout[s].size;
            const double ref = full.A.block(off[first], off[first], sz, sz).norm();
            if (ref > 0)
                res = std::max(res, (full.A.block(off[s], off[s], sz, sz) -
                                     full.A.block(off[first], off[first], sz, sz)).norm() / ref);
        }
        model.commutant_residual = res;
        if (res > options.asymmetry_warning)
            model.warnings.push_back("data is not symmetric in this basis: block residual " + std::to_string(res));
    }

    // SVDs per fitted block, then one global cutoff
    const int nf = static_cast<int>(fitted.size());
    std::vector<Eigen::JacobiSVD<CMatrix>> svds(nf);
    std::vector<CMatrix> a_blocks(nf);
    parallel_for(nf, [&](int f) {
        const int s = fitted[f];
        const CMatrix x = psix_xi.middleCols(off[s], layout[s].size);
        const auto y = psiy_xi.middleCols(off[s], layout[s].size);
        if (options.solver == Solver::Direct) {
            CMatrix r11;
            qr_reduce(x, y, r11, a_blocks[f]);
            svds[f].compute(r11, Eigen::ComputeThinU | Eigen::ComputeThinV);
            return;
        }
        CMatrix g = x.adjoint() * x;
        g = (0.5 * (g + g.adjoint())).eval();
        a_blocks[f] = x.adjoint() * y;
        svds[f].compute(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    });
    double smax = 0.0;
    for (const auto& svd : svds)
        if (svd.singularValues().size()) smax = std::max(smax, svd.singularValues()(0));

    std::vector<CMatrix> k_blocks(nf);
    std::vector<int> ranks(nf, 0);
    std::vector<Eigenpairs> spectra(nf);
    model.block_seconds.assign(slots, 0.0);
    const auto eig_start = Clock::now();
    parallel_for(nf, [&](int f) {
        k_blocks[f] = pinv_from_svd(svds[f], options.rcond * smax, ranks[f]) * a_blocks[f];
        const auto t0 = Clock::now();
        spectra[f] = eigen_decompose(k_blocks[f]);
        model.block_seconds[fitted[f]] = seconds_since(t0);
    });
    model.eig_seconds = seconds_since(eig_start);

    std::vector<int> fit_index(slots, -1);
    for (int f = 0; f < nf; ++f) fit_index[fitted[f]] = f;
    std::vector<cplx> values;
    std::vector<int> blocks;
    CMatrix vectors = CMatrix::Zero(n, n);
    int col = 0;
    for (int s = 0; s < slots; ++s) {
        const int f = fit_index[source[s]];
        if (f < 0) continue;
        const int sz = layout[s].size;
        model.K.block(off[s], off[s], sz, sz) = k_blocks[f];
        model.rank_of_G += ranks[f];
        for (std::size_t k = 0; k < spectra[f].values.size(); ++k) {
            values.push_back(spectra[f].values[k]);
            blocks.push_back(s);
            vectors.block(off[s], col, sz, 1) = spectra[f].vectors.col(static_cast<Eigen::Index>(k));
            ++col;
        }
    }
    for (int s = 0; s < slots; ++s)
        if (layout[s].size == 0) model.warnings.push_back("slot " + std::to_string(s) + " is empty and was skipped");

    if (options.independent) {
        for (int s = 0; s < slots; ++s) {
            if (layout[s].copy == 0 || layout[s].size == 0) continue;
            int first = s;
            while (layout[first].copy > 0) --first;
            const auto& k0 = k_blocks[fit_index[first]];
            const double ref = k0.norm();
            if (ref > 0) model.copy_deviation = std::max(model.copy_deviation, (k_blocks[fit_index[s]] - k0).norm() / ref);
        }
    }
    if (model.rank_of_G < n)
        model.warnings.push_back("G has rank " + std::to_string(model.rank_of_G) + " of " + std::to_string(n));
    finish_spectrum(model, values, vectors.leftCols(col), blocks);
    return model;
}

CVector eigenfunction_eval(const KoopmanModel& model, int j, const CMatrix& psi) {
    require(j >= 0 && j < model.right_eigenvectors.cols(), ErrorKind::InvalidArgument,
            "eigen index " + std::to_string(j) + " out of range");
    require(psi.cols() == model.right_eigenvectors.rows(), ErrorKind::DimensionMismatch,
            "evaluations do not match the model size");
    return psi * model.right_eigenvectors.col(j);
}

CVector eigenfunction_eval(const KoopmanModel& model, int j, const dictionaries::Dictionary& d, const RMatrix& states) {
    return eigenfunction_eval(model, j, d.evaluate(states));
}

ModeDecomposition koopman_modes(const KoopmanModel& model, const CMatrix& psix, const RMatrix& states_x,
                                double rcond) {
    require(psix.rows() == states_x.rows(), ErrorKind::DimensionMismatch, "snapshot counts differ");
    require(psix.cols() == model.size(), ErrorKind::DimensionMismatch, "evaluations do not match the model size");
    ModeDecomposition out;
    const CMatrix x = states_x.cast<cplx>();
    Eigen::JacobiSVD<CMatrix> svd(psix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    int rank = 0;
    out.B = pinv_from_svd(svd, rcond * smax, rank) * x;
    if (rank < psix.cols())
        out.warnings.push_back("Psi_x has rank " + std::to_string(rank) + " of " + std::to_string(psix.cols()) +
                               "; B is the minimum-norm solution");
    out.modes = model.left_eigenvectors.adjoint() * out.B;
    const double xn = x.norm();
    out.reconstruction_residual = xn > 0 ? (psix * out.B - x).norm() / xn : 0.0;
    return out;
}

CMatrix reconstruct_states(const KoopmanModel& model, const ModeDecomposition& modes, const CMatrix& psi) {
    return (psi * model.right_eigenvectors) * modes.modes;
}

CMatrix propagate(const KoopmanModel& model, const CVector& psi0, int steps) {
    require(psi0.size() == model.size(), ErrorKind::DimensionMismatch, "initial vector does not match the model");
    require(steps >= 0, ErrorKind::InvalidArgument, "negative step count");
    CMatrix out(steps + 1, model.size());
    out.row(0) = psi0.transpose();
    for (int t = 1; t <= steps; ++t) out.row(t) = out.row(t - 1) * model.K;
    return out;
}

double commutant_residual(const CMatrix& K, const groups::GroupAction& index_action) {
    require(index_action.dim() == K.rows(), ErrorKind::DimensionMismatch, "index action does not match K");
    const double kn = K.norm();
    if (kn == 0.0) return 0.0;
    double worst = 0.0;
    for (int g = 0; g < index_action.group().order(); ++g) {
        const CMatrix& p = index_action.matrix(g);
        worst = std::max(worst, (p * K - K * p).norm() / kn);
    }
    return worst;
}

CMatrix to_source_basis(const CMatrix& k_xi, const CMatrix& transform) {
    require(k_xi.rows() == transform.rows() && transform.rows() == transform.cols(), ErrorKind::DimensionMismatch,
            "transform does not match K");
    const CMatrix tt = transform.transpose();
    return tt * k_xi * tt.inverse();
}

}  // namespace koopsym::edmd
