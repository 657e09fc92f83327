#include "koopsym/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace koopsym {

CMatrix pinv(const CMatrix& a, double rcond, int& rank) {
    rank = 0;
    if (a.size() == 0) return CMatrix::Zero(a.cols(), a.rows());
    // JacobiSVD throughout: BDCSVD in Eigen 3.4.0 returns wrong singular
    // values for some complex inputs (seen on 120x120 isotypic projectors)
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& s = svd.singularValues();
    CMatrix out = CMatrix::Zero(a.cols(), a.rows());
    if (s.size() == 0 || s(0) == 0.0) return out;
    const double cut = rcond * s(0);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) <= cut) break;
        ++rank;
    }
    const auto& u = svd.matrixU();
    const auto& v = svd.matrixV();
    RVector inv = s.head(rank).cwiseInverse();
    out.noalias() = v.leftCols(rank) * inv.asDiagonal() * u.leftCols(rank).adjoint();
    return out;
}

CMatrix pinv(const CMatrix& a, double rcond) {
    int rank = 0;
    return pinv(a, rcond, rank);
}

int numerical_rank(const CMatrix& a, double rel_tol) {
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<CMatrix> svd(a);
    const RVector& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

double offblock_norm(const CMatrix& m, const std::vector<int>& block_sizes) {
    std::vector<int> owner;
    owner.reserve(m.rows());
    for (std::size_t b = 0; b < block_sizes.size(); ++b)
        owner.insert(owner.end(), block_sizes[b], static_cast<int>(b));
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (owner[i] != owner[j]) acc += std::norm(m(i, j));
    return std::sqrt(acc);
}

bool eigenvalue_order(const cplx& a, const cplx& b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
}

double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    std::sort(a.begin(), a.end(), eigenvalue_order);
    std::vector<bool> used(b.size(), false);
    double worst = 0.0;
    for (const cplx& x : a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(x - b[j]);
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        used[arg] = true;
        worst = std::max(worst, best);
    }
    return worst;
}

void normalize_phase(CVector& v, double tol) {
    const double n = v.norm();
    if (n == 0.0) return;
    v /= n;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > tol) {
            v *= std::conj(v(i)) / std::abs(v(i));
            v(i) = cplx(std::abs(v(i)), 0.0);
            return;
        }
    }
}

}  // namespace koopsym
