#include "koopsym/groups.hpp"

#include <cmath>
#include <algorithm>
#include <deque>
#include <numbers>
#include <sstream>

#include "koopsym/error.hpp"

namespace koopsym::groups {

namespace {

constexpr double kIrrepTol = 1e-10;

cplx root_of_unity(int k, int n) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    // Exact values where cheap so that characters like -1 come out clean.
    const int r = ((k % n) + n) % n;
    if (r == 0) return {1.0, 0.0};
    if (2 * r == n) return {-1.0, 0.0};
    if (4 * r == n) return {0.0, 1.0};
    if (4 * r == 3 * n) return {0.0, -1.0};
    return std::polar(1.0, angle);
}

Irrep scalar_irrep(std::string name, std::vector<cplx> values) {
    Irrep ir;
    ir.name = std::move(name);
    ir.dim = 1;
    for (const cplx& v : values) {
        CMatrix m(1, 1);
        m(0, 0) = v;
        ir.matrices.push_back(m);
        ir.characters.push_back(v);
    }
    return ir;
}

Irrep matrix_irrep(std::string name, std::vector<CMatrix> mats) {
    Irrep ir;
    ir.name = std::move(name);
    ir.dim = static_cast<int>(mats.front().rows());
    for (const CMatrix& m : mats) ir.characters.push_back(m.trace());
    ir.matrices = std::move(mats);
    return ir;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

FiniteGroup::FiniteGroup(std::string name, std::vector<std::vector<int>> mul_table, std::vector<int> generators,
                         std::vector<std::string> labels, std::vector<Irrep> irreps)
    : name_(std::move(name)),
      table_(std::move(mul_table)),
      generators_(std::move(generators)),
      labels_(std::move(labels)),
      irreps_(std::move(irreps)) {
    const int n = order();
    require(n >= 1, ErrorKind::InvalidOrder, "group must have at least one element");
    require(static_cast<int>(labels_.size()) == n, ErrorKind::InvalidArgument, "one label per element required");
    for (const auto& row : table_) {
        require(static_cast<int>(row.size()) == n, ErrorKind::InvalidArgument, "multiplication table must be square");
        std::vector<bool> seen(n, false);
        for (int v : row) {
            require(v >= 0 && v < n && !seen[v], ErrorKind::InvalidArgument,
                    "multiplication table rows must be permutations of the elements");
            seen[v] = true;
        }
    }
    for (int a = 0; a < n; ++a)
        require(table_[0][a] == a && table_[a][0] == a, ErrorKind::InvalidArgument, "element 0 must be the identity");
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                require(table_[table_[a][b]][c] == table_[a][table_[b][c]], ErrorKind::InvalidArgument,
                        "multiplication table is not associative");

    inverse_.assign(n, -1);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (table_[a][b] == 0) inverse_[a] = b;

    // Words by breadth-first search over left multiplication by generators.
    words_.assign(n, {});
    std::vector<bool> reached(n, false);
    reached[0] = true;
    std::deque<int> queue{0};
    while (!queue.empty()) {
        const int a = queue.front();
        queue.pop_front();
        for (std::size_t s = 0; s < generators_.size(); ++s) {
            const int b = table_[generators_[s]][a];
            if (reached[b]) continue;
            reached[b] = true;
            words_[b].push_back(static_cast<int>(s));
            words_[b].insert(words_[b].end(), words_[a].begin(), words_[a].end());
            queue.push_back(b);
        }
    }
    for (int a = 0; a < n; ++a)
        require(reached[a], ErrorKind::InvalidArgument, "generators do not generate element " + labels_[a]);

    std::vector<bool> assigned(n, false);
    for (int a = 0; a < n; ++a) {
        if (assigned[a]) continue;
        std::vector<int> cls;
        for (int g = 0; g < n; ++g) {
            const int c = table_[table_[g][a]][inverse_[g]];
            if (!assigned[c]) {
                assigned[c] = true;
                cls.push_back(c);
            }
        }
        std::sort(cls.begin(), cls.end());
        classes_.push_back(std::move(cls));
    }

    int dim_sq = 0;
    for (const Irrep& ir : irreps_) {
        require(static_cast<int>(ir.matrices.size()) == n && static_cast<int>(ir.characters.size()) == n,
                ErrorKind::InvalidArgument, "irrep " + ir.name + " must list one matrix per element");
        dim_sq += ir.dim * ir.dim;
        const CMatrix eye = CMatrix::Identity(ir.dim, ir.dim);
        for (int a = 0; a < n; ++a) {
            const CMatrix& m = ir.matrices[a];
            require((m.adjoint() * m - eye).norm() < kIrrepTol, ErrorKind::InvalidArgument,
                    "irrep " + ir.name + " is not unitary at " + labels_[a]);
            for (int b = 0; b < n; ++b)
                require((m * ir.matrices[b] - ir.matrices[table_[a][b]]).norm() < kIrrepTol,
                        ErrorKind::InvalidArgument, "irrep " + ir.name + " is not a homomorphism");
        }
    }
    require(irreps_.empty() || (dim_sq == n && irreps_.size() == classes_.size()), ErrorKind::InvalidArgument,
            "irrep table incomplete for group " + name_);
}

const Irrep& FiniteGroup::irrep(int p) const {
    require(p >= 0 && p < irrep_count(), ErrorKind::InvalidArgument, "irrep index out of range");
    return irreps_[p];
}

cplx FiniteGroup::character_inner(int p, int q) const {
    const Irrep& a = irrep(p);
    const Irrep& b = irrep(q);
    cplx acc = 0.0;
    for (int g = 0; g < order(); ++g) acc += a.characters[g] * std::conj(b.characters[g]);
    return acc / static_cast<double>(order());
}

GroupPtr build_cyclic(int n) {
    require(n >= 1, ErrorKind::InvalidOrder, "cyclic group order must be >= 1, got " + std::to_string(n));
    std::vector<std::vector<int>> table(n, std::vector<int>(n));
    std::vector<std::string> labels;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) table[a][b] = (a + b) % n;
        labels.push_back(a == 0 ? "e" : (a == 1 ? "r" : "r^" + std::to_string(a)));
    }
    std::vector<Irrep> irreps;
    for (int k = 0; k < n; ++k) {
        std::vector<cplx> chi;
        for (int m = 0; m < n; ++m) chi.push_back(root_of_unity(k * m, n));
        std::string name;
        if (k == 0)
            name = "tr";
        else if (n == 2)
            name = "sign";
        else if (n == 3)
            name = (k == 1) ? "omega" : "omega2";
        else
            name = "chi" + std::to_string(k);
        irreps.push_back(scalar_irrep(std::move(name), std::move(chi)));
    }
    std::vector<int> gens{n == 1 ? 0 : 1};
    return std::make_shared<const FiniteGroup>("Z" + std::to_string(n), std::move(table), std::move(gens),
                                               std::move(labels), std::move(irreps));
}

GroupPtr build_dihedral(int n) {
    require(n >= 3, ErrorKind::InvalidOrder, "dihedral group needs n >= 3, got " + std::to_string(n));
    const int order = 2 * n;
    // Element s*n + k is k^s r^k. Using r^k k = k r^{-k}:
    // (k^s r^a)(k^t r^b) = k^{s+t} r^{(-1)^t a + b}.
    auto id = [n](int s, int k) { return s * n + ((k % n) + n) % n; };
    std::vector<std::vector<int>> table(order, std::vector<int>(order));
    std::vector<std::string> labels;
    for (int x = 0; x < order; ++x) {
        const int s = x / n, a = x % n;
        for (int y = 0; y < order; ++y) {
            const int t = y / n, b = y % n;
            table[x][y] = id((s + t) % 2, (t == 1 ? -a : a) + b);
        }
        std::string rot = a == 0 ? "" : (a == 1 ? "r" : "r^" + std::to_string(a));
        if (s == 0)
            labels.push_back(a == 0 ? "e" : rot);
        else
            labels.push_back(a == 0 ? "k" : "k " + rot);
    }

    std::vector<Irrep> irreps;
    auto one_dim = [&](std::string name, int r_sign, int k_sign) {
        std::vector<cplx> chi;
        for (int x = 0; x < order; ++x) {
            const int s = x / n, a = x % n;
            double v = (s == 1 ? k_sign : 1) * ((a % 2 == 1) ? r_sign : 1);
            chi.emplace_back(v, 0.0);
        }
        irreps.push_back(scalar_irrep(std::move(name), std::move(chi)));
    };
    one_dim("tr", 1, 1);
    one_dim("sign", 1, -1);
    if (n % 2 == 0) {
        one_dim("alt", -1, 1);
        one_dim("alt_sign", -1, -1);
    }
    CMatrix swap(2, 2);
    swap << 0.0, 1.0, 1.0, 0.0;
    for (int j = 1; 2 * j < n; ++j) {
        std::vector<CMatrix> mats;
        for (int x = 0; x < order; ++x) {
            const int s = x / n, a = x % n;
            CMatrix rot = CMatrix::Zero(2, 2);
            rot(0, 0) = root_of_unity(j * a, n);
            rot(1, 1) = root_of_unity(-j * a, n);
            mats.push_back(s == 1 ? CMatrix(swap * rot) : rot);
        }
        std::string name = (n == 3) ? "st" : "E" + std::to_string(j);
        irreps.push_back(matrix_irrep(std::move(name), std::move(mats)));
    }
    std::vector<int> gens{1, n};
    return std::make_shared<const FiniteGroup>("D" + std::to_string(n), std::move(table), std::move(gens),
                                               std::move(labels), std::move(irreps));
}

GroupPtr direct_product(const GroupPtr& g1, const GroupPtr& g2) {
    const int n1 = g1->order(), n2 = g2->order();
    const int n = n1 * n2;
    std::vector<std::vector<int>> table(n, std::vector<int>(n));
    std::vector<std::string> labels;
    for (int x = 0; x < n; ++x) {
        const int a1 = x / n2, a2 = x % n2;
        for (int y = 0; y < n; ++y) {
            const int b1 = y / n2, b2 = y % n2;
            table[x][y] = g1->mul(a1, b1) * n2 + g2->mul(a2, b2);
        }
        labels.push_back("(" + g1->label(a1) + "," + g2->label(a2) + ")");
    }
    std::vector<int> gens;
    for (int s : g1->generators())
        if (s != 0) gens.push_back(s * n2);
    for (int s : g2->generators())
        if (s != 0) gens.push_back(s);
    if (gens.empty()) gens.push_back(0);

    std::vector<Irrep> irreps;
    for (const Irrep& p : g1->irreps()) {
        for (const Irrep& q : g2->irreps()) {
            std::vector<CMatrix> mats;
            for (int x = 0; x < n; ++x) mats.push_back(kron(p.matrices[x / n2], q.matrices[x % n2]));
            irreps.push_back(matrix_irrep(p.name + "x" + q.name, std::move(mats)));
        }
    }
    return std::make_shared<const FiniteGroup>(g1->name() + "x" + g2->name(), std::move(table), std::move(gens),
                                               std::move(labels), std::move(irreps));
}

GroupAction::GroupAction(GroupPtr group, std::vector<CMatrix> matrices, double tol)
    : group_(std::move(group)), matrices_(std::move(matrices)) {
    require(group_ != nullptr, ErrorKind::InvalidArgument, "action needs a group");
    require(static_cast<int>(matrices_.size()) == group_->order(), ErrorKind::InvalidArgument,
            "action needs one matrix per group element");
    dim_ = static_cast<int>(matrices_.front().rows());
    for (const CMatrix& m : matrices_)
        require(m.rows() == dim_ && m.cols() == dim_, ErrorKind::DimensionMismatch, "action matrices must be square");
    const double res = representation_residual();
    if (!(res < tol)) {
        std::ostringstream os;
        os << "matrices do not form a representation of " << group_->name() << " (residual " << res << ")";
        fail(ErrorKind::InconsistentAction, os.str());
    }
}

bool GroupAction::is_real(double tol) const {
    for (const CMatrix& m : matrices_)
        if (m.imag().cwiseAbs().maxCoeff() > tol) return false;
    return true;
}

bool GroupAction::is_unitary(double tol) const {
    const CMatrix eye = CMatrix::Identity(dim_, dim_);
    for (const CMatrix& m : matrices_)
        if ((m.adjoint() * m - eye).norm() > tol) return false;
    return true;
}

double GroupAction::representation_residual() const {
    double worst = 0.0;
    const int n = group_->order();
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            worst = std::max(worst, (matrices_[a] * matrices_[b] - matrices_[group_->mul(a, b)]).norm());
    return worst;
}

GroupAction build_action(const GroupPtr& group, const std::vector<CMatrix>& generator_matrices, double tol) {
    const auto& gens = group->generators();
    require(generator_matrices.size() == gens.size(), ErrorKind::InvalidArgument,
            "expected " + std::to_string(gens.size()) + " generator matrices for " + group->name() + ", got " +
                std::to_string(generator_matrices.size()));
    const Eigen::Index dim = generator_matrices.front().rows();
    for (const CMatrix& m : generator_matrices)
        require(m.rows() == dim && m.cols() == dim, ErrorKind::DimensionMismatch,
                "generator matrices must be square and of equal size");

    std::vector<CMatrix> mats(group->order());
    for (int a = 0; a < group->order(); ++a) {
        CMatrix m = CMatrix::Identity(dim, dim);
        for (int s : group->word(a)) m = m * generator_matrices[s];
        mats[a] = std::move(m);
    }
    // M(s)M(a) = M(s a) for all generators s and elements a is exactly the set
    // of defining relations, given that M is defined along words.
    for (std::size_t s = 0; s < gens.size(); ++s) {
        for (int a = 0; a < group->order(); ++a) {
            const int sa = group->mul(gens[s], a);
            const double res = (generator_matrices[s] * mats[a] - mats[sa]).norm();
            if (!(res <= tol)) {
                std::ostringstream os;
                os << "inconsistent action for " << group->name() << ": relation M(" << group->label(gens[s]) << ")M("
                   << group->label(a) << ") = M(" << group->label(sa) << ") violated, residual " << res;
                fail(ErrorKind::InconsistentAction, os.str());
            }
        }
    }
    return GroupAction(group, std::move(mats), tol);
}

GroupAction build_action(const GroupPtr& group, const std::vector<RMatrix>& generator_matrices, double tol) {
    std::vector<CMatrix> c;
    c.reserve(generator_matrices.size());
    for (const RMatrix& m : generator_matrices) c.push_back(m.cast<cplx>());
    return build_action(group, c, tol);
}

GroupAction cayley_permutation_rep(const GroupPtr& group) {
    const int n = group->order();
    std::vector<CMatrix> mats;
    for (int k = 0; k < n; ++k) {
        CMatrix p = CMatrix::Zero(n, n);
        for (int j = 0; j < n; ++j) p(group->mul(k, j), j) = 1.0;
        mats.push_back(std::move(p));
    }
    return GroupAction(group, std::move(mats));
}

GroupAction tensor_identity(const GroupAction& action, int block) {
    require(block >= 1, ErrorKind::InvalidArgument, "identity block must be >= 1");
    std::vector<CMatrix> mats;
    const CMatrix eye = CMatrix::Identity(block, block);
    for (const CMatrix& m : action.matrices()) mats.push_back(kron(m, eye));
    return GroupAction(action.group_ptr(), std::move(mats));
}

CMatrix projector(const GroupAction& action, int p, int m, int n) {
    const FiniteGroup& g = action.group();
    const Irrep& ir = g.irrep(p);
    require(m >= 0 && m < ir.dim && n >= 0 && n < ir.dim, ErrorKind::InvalidArgument,
            "projector indices out of range for irrep " + ir.name);
    CMatrix out = CMatrix::Zero(action.dim(), action.dim());
    for (int a = 0; a < g.order(); ++a) out += std::conj(ir.matrices[a](m, n)) * action.matrix(a);
    return out * (static_cast<double>(ir.dim) / g.order());
}

CMatrix character_projector(const GroupAction& action, int p) {
    const FiniteGroup& g = action.group();
    const Irrep& ir = g.irrep(p);
    CMatrix out = CMatrix::Zero(action.dim(), action.dim());
    for (int a = 0; a < g.order(); ++a) out += std::conj(ir.characters[a]) * action.matrix(a);
    return out * (static_cast<double>(ir.dim) / g.order());
}

std::vector<int> IsotypicTransform::block_sizes() const {
    std::vector<int> s;
    for (const BlockSlot& b : layout) s.push_back(b.size);
    return s;
}

std::vector<int> IsotypicTransform::block_offsets() const {
    std::vector<int> o;
    int acc = 0;
    for (const BlockSlot& b : layout) {
        o.push_back(acc);
        acc += b.size;
    }
    return o;
}

std::vector<int> IsotypicTransform::component_sizes() const {
    std::vector<int> s;
    int last = -1;
    for (const BlockSlot& b : layout) {
        if (b.irrep != last) {
            s.push_back(0);
            last = b.irrep;
        }
        s.back() += b.size;
    }
    return s;
}

namespace {

// Smallest index of each orbit of the support pattern of the action.
std::vector<int> orbit_representatives(const GroupAction& action) {
    const int n = action.dim();
    std::vector<int> owner(n, -1);
    std::vector<int> reps;
    for (int i = 0; i < n; ++i) {
        if (owner[i] >= 0) continue;
        reps.push_back(i);
        std::deque<int> queue{i};
        owner[i] = i;
        while (!queue.empty()) {
            const int j = queue.front();
            queue.pop_front();
            for (const CMatrix& m : action.matrices())
                for (int k = 0; k < n; ++k)
                    if (owner[k] < 0 && std::abs(m(k, j)) > 1e-12) {
                        owner[k] = i;
                        queue.push_back(k);
                    }
        }
    }
    return reps;
}

struct GreedyBasis {
    std::vector<CVector> ortho;
    bool try_add(const CVector& v, double tol) {
        const double scale = v.norm();
        if (scale <= tol) return false;
        CVector r = v;
        for (int pass = 0; pass < 2; ++pass)
            for (const CVector& q : ortho) r -= q.dot(r) * q;
        if (r.norm() <= tol * std::max(1.0, scale)) return false;
        ortho.push_back(r / r.norm());
        return true;
    }
};

std::string slot_warning(const FiniteGroup& g, int p) {
    return "isotypic component " + g.irrep(p).name + " of " + g.name() +
           " receives no functions from this dictionary (size-0 block)";
}

}  // namespace

IsotypicTransform isotypic_transform(const GroupAction& action) {
    const FiniteGroup& g = action.group();
    const int n = action.dim();
    const std::vector<int> reps = orbit_representatives(action);

    IsotypicTransform out;
    out.source_size = n;
    std::vector<CVector> rows;
    for (int p = 0; p < g.irrep_count(); ++p) {
        const int d = g.irrep(p).dim;
        const double scale = static_cast<double>(g.order()) / d;
        std::vector<CMatrix> first_row;  // P^p_{0n}
        for (int c = 0; c < d; ++c) first_row.push_back(projector(action, p, 0, c));
        const int target = static_cast<int>(std::lround(first_row[0].trace().real()));

        // Candidates P^p_{0c} e_i, orbit representatives first, c outermost.
        std::vector<std::pair<int, int>> chosen;  // (c, i)
        GreedyBasis basis;
        auto scan = [&](const std::vector<int>& indices) {
            for (int c = 0; c < d && static_cast<int>(chosen.size()) < target; ++c)
                for (int i : indices) {
                    if (static_cast<int>(chosen.size()) >= target) break;
                    if (basis.try_add(first_row[c].col(i), 1e-10)) chosen.emplace_back(c, i);
                }
        };
        scan(reps);
        if (static_cast<int>(chosen.size()) < target) {
            std::vector<int> all(n);
            for (int i = 0; i < n; ++i) all[i] = i;
            scan(all);
        }
        require(static_cast<int>(chosen.size()) == target, ErrorKind::Numerical,
                "could not span isotypic component " + g.irrep(p).name);
        if (target == 0) out.warnings.push_back(slot_warning(g, p));

        for (int m = 0; m < d; ++m) {
            for (const auto& [c, i] : chosen) rows.push_back(scale * projector(action, p, m, c).col(i));
            out.layout.push_back({p, m, target});
        }
    }
    require(static_cast<int>(rows.size()) == n, ErrorKind::Numerical,
            "isotypic basis has " + std::to_string(rows.size()) + " functions for a space of dimension " +
                std::to_string(n) + "; the action is not a representation of the group on this space");
    out.matrix.resize(n, n);
    for (int k = 0; k < n; ++k) out.matrix.row(k) = rows[k].transpose();
    return out;
}

IsotypicTransform unitary_isotypic_transform(const GroupAction& action, double rank_tol) {
    require(action.is_unitary(), ErrorKind::InvalidArgument, "orthonormal isotypic basis needs a unitary action");
    const FiniteGroup& g = action.group();
    const int n = action.dim();
    IsotypicTransform out;
    out.source_size = n;
    std::vector<CVector> rows;
    for (int p = 0; p < g.irrep_count(); ++p) {
        const int d = g.irrep(p).dim;
        const CMatrix p00 = projector(action, p, 0, 0);
        Eigen::JacobiSVD<CMatrix> svd(p00, Eigen::ComputeThinU);
        const RVector& s = svd.singularValues();
        int rank = 0;
        if (s.size() > 0 && s(0) > 0.0)
            for (Eigen::Index i = 0; i < s.size(); ++i)
                if (s(i) > rank_tol * s(0)) ++rank;
        const CMatrix basis0 = svd.matrixU().leftCols(rank);
        if (rank == 0) out.warnings.push_back(slot_warning(g, p));
        for (int m = 0; m < d; ++m) {
            const CMatrix basis = (m == 0) ? basis0 : CMatrix(projector(action, p, m, 0) * basis0);
            for (int k = 0; k < rank; ++k) rows.push_back(basis.col(k));
            out.layout.push_back({p, m, rank});
        }
    }
    require(static_cast<int>(rows.size()) == n, ErrorKind::Numerical,
            "orthonormal isotypic basis is incomplete; the action is not a representation on this space");
    out.matrix.resize(n, n);
    for (int k = 0; k < n; ++k) out.matrix.row(k) = rows[k].transpose();
    return out;
}

}  // namespace koopsym::groups
