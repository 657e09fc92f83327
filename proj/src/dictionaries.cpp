#include "koopsym/dictionaries.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "koopsym/error.hpp"
#include "koopsym/parallel.hpp"

namespace koopsym::dictionaries {

namespace {

bool same_point(const RVector& a, const RVector& b) {
    const double scale = 1.0 + std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() <= 1e-9 * scale;
}

std::string monomial_label(const std::vector<int>& e) {
    std::string out;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        if (!out.empty()) out += '*';
        out += "x" + std::to_string(i + 1);
        if (e[i] > 1) out += "^" + std::to_string(e[i]);
    }
    return out.empty() ? "1" : out;
}

void enumerate_degree(int n, int degree, int pos, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (pos == n - 1) {
        cur[pos] = degree;
        out.push_back(cur);
        return;
    }
    for (int k = degree; k >= 0; --k) {
        cur[pos] = k;
        enumerate_degree(n, degree - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Union of supports of all P(g) gives orbits of the index action.
std::vector<int> orbit_ids(const std::vector<CMatrix>& mats, int& count) {
    const int n = mats.empty() ? 0 : static_cast<int>(mats.front().rows());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& m : mats)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (std::abs(m(i, j)) > 1e-12) parent[find(i)] = find(j);
    std::map<int, int> relabel;
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) {
        const int root = find(i);
        auto it = relabel.find(root);
        if (it == relabel.end()) it = relabel.emplace(root, static_cast<int>(relabel.size())).first;
        ids[i] = it->second;
    }
    count = static_cast<int>(relabel.size());
    return ids;
}

/// Row i of m has one entry, +-1, at column perm[i]; sign[i] holds it.
bool as_signed_permutation(const RMatrix& m, std::vector<int>& perm, std::vector<double>& sign) {
    const auto n = m.rows();
    perm.assign(n, -1);
    sign.assign(n, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (std::abs(v) < 1e-12) continue;
            if (perm[i] >= 0 || std::abs(std::abs(v) - 1.0) > 1e-12) return false;
            perm[i] = static_cast<int>(j);
            sign[i] = v > 0 ? 1.0 : -1.0;
        }
        if (perm[i] < 0) return false;
    }
    return true;
}

void check_real_orthogonal(const groups::GroupAction& action) {
    require(action.is_real(), ErrorKind::Closure, "state action must be real to transform observables");
    for (int g = 0; g < action.group().order(); ++g) {
        const RMatrix m = action.real_matrix(g);
        require((m.transpose() * m - RMatrix::Identity(m.rows(), m.cols())).norm() < 1e-10, ErrorKind::Closure,
                "radial observables need an orthogonal action; element " + action.group().label(g) +
                    " is not orthogonal");
    }
}

Dictionary close_rbf(const Dictionary& d, const groups::GroupAction& action) {
    check_real_orthogonal(action);
    const auto& group = action.group();
    std::vector<RVector> centers;
    auto index_of = [&centers](const RVector& c) {
        for (std::size_t j = 0; j < centers.size(); ++j)
            if (same_point(centers[j], c)) return static_cast<int>(j);
        return -1;
    };
    for (int g = 0; g < group.order(); ++g) {
        const RMatrix m = action.real_matrix(g);
        for (const auto& obs : d.observables()) {
            const RVector c = m * obs.center;
            if (index_of(c) < 0) centers.push_back(c);
        }
    }
    const int n = static_cast<int>(centers.size());
    std::vector<CMatrix> index_mats(group.order(), CMatrix::Zero(n, n));
    for (int g = 0; g < group.order(); ++g) {
        const RMatrix m = action.real_matrix(g);
        for (int j = 0; j < n; ++j) {
            const int target = index_of(m * centers[j]);
            require(target >= 0, ErrorKind::Closure,
                    "center " + std::to_string(j) + " leaves the dictionary under " + group.label(g));
            index_mats[g](target, j) = 1.0;
        }
    }
    Dictionary closed = rbf_dictionary(centers);
    GroupMetadata meta{action, groups::GroupAction(action.group_ptr(), index_mats), {}, 0};
    meta.orbit_of = orbit_ids(index_mats, meta.orbit_count);
    return closed.with_group(std::move(meta));
}

Dictionary close_monomial(const Dictionary& d, const groups::GroupAction& action) {
    require(action.is_real(), ErrorKind::Closure, "state action must be real to transform observables");
    const auto& group = action.group();
    const int n = d.base_size();
    std::map<std::vector<int>, int> lookup;
    int max_degree = 0;
    for (int j = 0; j < n; ++j) {
        const auto& e = d.observable(j).exponents;
        lookup.emplace(e, j);
        max_degree = std::max(max_degree, std::accumulate(e.begin(), e.end(), 0));
    }
    std::vector<CMatrix> index_mats(group.order(), CMatrix::Zero(n, n));
    for (int g = 0; g < group.order(); ++g) {
        // (g o psi)(x) = psi(M(g^-1) x)
        const RMatrix minv = action.real_matrix(group.inverse(g));
        std::vector<int> perm;
        std::vector<double> sign;
        if (as_signed_permutation(minv, perm, sign)) {
            for (int j = 0; j < n; ++j) {
                const auto& a = d.observable(j).exponents;
                std::vector<int> b(a.size(), 0);
                double coeff = 1.0;
                for (std::size_t i = 0; i < a.size(); ++i) {
                    b[perm[i]] += a[i];
                    if (a[i] % 2) coeff *= sign[i];
                }
                const auto it = lookup.find(b);
                if (it == lookup.end())
                    fail(ErrorKind::Closure, "image of observable '" + d.observable(j).label + "' under " +
                                                 group.label(g) + " is not in the dictionary");
                index_mats[g](it->second, j) = coeff;
            }
        } else {
            require(max_degree <= 1, ErrorKind::Closure,
                    "element " + group.label(g) +
                        " is not a signed permutation; only degree-one dictionaries can be closed under it");
            for (int j = 0; j < n; ++j) {
                const auto& a = d.observable(j).exponents;
                const auto it_var = std::find(a.begin(), a.end(), 1);
                if (it_var == a.end()) {
                    index_mats[g](j, j) = 1.0;
                    continue;
                }
                const auto i = it_var - a.begin();
                for (Eigen::Index k = 0; k < minv.cols(); ++k) {
                    if (std::abs(minv(i, k)) < 1e-15) continue;
                    std::vector<int> b(a.size(), 0);
                    b[k] = 1;
                    const auto it = lookup.find(b);
                    if (it == lookup.end())
                        fail(ErrorKind::Closure, "image of observable '" + d.observable(j).label + "' under " +
                                                     group.label(g) + " is not in the dictionary");
                    index_mats[g](it->second, j) = minv(i, k);
                }
            }
        }
    }
    GroupMetadata meta{action, groups::GroupAction(action.group_ptr(), index_mats), {}, 0};
    meta.orbit_of = orbit_ids(index_mats, meta.orbit_count);
    return Dictionary(d.state_dim(), d.observables()).with_group(std::move(meta));
}

}  // namespace

Dictionary::Dictionary(int state_dim, std::vector<Observable> observables)
    : state_dim_(state_dim), observables_(std::move(observables)) {
    require(state_dim_ >= 1, ErrorKind::InvalidArgument, "state dimension must be positive");
    require(!observables_.empty(), ErrorKind::InvalidArgument, "dictionary is empty");
    for (const auto& o : observables_) {
        switch (o.kind) {
            case ObservableKind::Rbf:
                require(o.center.size() == state_dim_, ErrorKind::DimensionMismatch, "center dimension mismatch");
                break;
            case ObservableKind::Monomial:
                require(static_cast<int>(o.exponents.size()) == state_dim_, ErrorKind::DimensionMismatch,
                        "monomial exponent count mismatch");
                break;
            case ObservableKind::Custom:
                require(static_cast<bool>(o.custom), ErrorKind::InvalidArgument, "custom observable has no function");
                break;
        }
    }
}

int Dictionary::size() const {
    return transform_ ? static_cast<int>(transform_->matrix.rows()) : base_size();
}

std::string Dictionary::kind_name() const {
    const auto k = observables_.front().kind;
    for (const auto& o : observables_)
        if (o.kind != k) return "mixed";
    switch (k) {
        case ObservableKind::Rbf:
            return "rbf";
        case ObservableKind::Monomial:
            return "monomial";
        default:
            return "custom";
    }
}

double rbf_value(const RVector& center, const RVector& x) {
    // squared differences summed in sorted order, so a signed permutation of
    // both arguments gives a bit-identical value
    const auto n = x.size();
    std::array<double, 16> small{};
    std::vector<double> big;
    double* sq = small.data();
    if (n > static_cast<Eigen::Index>(small.size())) {
        big.resize(n);
        sq = big.data();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double diff = x(i) - center(i);
        sq[i] = diff * diff;
    }
    std::sort(sq, sq + n);
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += sq[i];
    if (s == 0.0) return 0.0;
    const double r = std::sqrt(std::sqrt(s));
    return r * std::log(r);
}

cplx Dictionary::evaluate_base(int j, const RVector& x) const {
    const auto& o = observables_[j];
    switch (o.kind) {
        case ObservableKind::Rbf:
            return rbf_value(o.center, x);
        case ObservableKind::Monomial: {
            double v = 1.0;
            for (int i = 0; i < state_dim_; ++i)
                for (int k = 0; k < o.exponents[i]; ++k) v *= x(i);
            return v;
        }
        case ObservableKind::Custom:
            return o.custom(x);
    }
    return 0.0;
}

CMatrix Dictionary::evaluate_base(const RMatrix& states) const {
    require(states.cols() == state_dim_, ErrorKind::DimensionMismatch,
            "states have " + std::to_string(states.cols()) + " columns, dictionary expects " +
                std::to_string(state_dim_));
    const int m = static_cast<int>(states.rows());
    const int n = base_size();
    CMatrix out(m, n);
    parallel_for(m, [&](int i) {
        const RVector x = states.row(i).transpose();
        for (int j = 0; j < n; ++j) {
            const cplx v = evaluate_base(j, x);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                fail(ErrorKind::Numerical, "non-finite value of observable " + std::to_string(j) + " ('" +
                                               observables_[j].label + "') at snapshot " + std::to_string(i));
            out(i, j) = v;
        }
    });
    return out;
}

CMatrix Dictionary::evaluate(const RMatrix& states) const {
    CMatrix psi = evaluate_base(states);
    if (!transform_) return psi;
    return psi * transform_->matrix.transpose();
}

Dictionary Dictionary::with_group(GroupMetadata meta) const {
    require(meta.index_action.dim() == base_size(), ErrorKind::DimensionMismatch,
            "index action dimension does not match dictionary size");
    Dictionary out = *this;
    out.group_ = std::move(meta);
    return out;
}

Dictionary Dictionary::with_transform(groups::IsotypicTransform t) const {
    require(t.matrix.cols() == base_size() && t.source_size == base_size(), ErrorKind::DimensionMismatch,
            "transform expects " + std::to_string(t.source_size) + " observables, dictionary has " +
                std::to_string(base_size()));
    Dictionary out = *this;
    out.transform_ = std::move(t);
    return out;
}

Dictionary rbf_dictionary(const std::vector<RVector>& centers) {
    require(!centers.empty(), ErrorKind::InvalidArgument, "no centers");
    const auto n = centers.front().size();
    std::vector<Observable> obs;
    for (std::size_t j = 0; j < centers.size(); ++j) {
        require(centers[j].size() == n, ErrorKind::DimensionMismatch, "centers differ in dimension");
        for (std::size_t k = 0; k < j; ++k)
            require(!same_point(centers[j], centers[k]), ErrorKind::InvalidArgument,
                    "duplicate centers " + std::to_string(k) + " and " + std::to_string(j));
        Observable o;
        o.kind = ObservableKind::Rbf;
        o.center = centers[j];
        o.label = "rbf" + std::to_string(j);
        obs.push_back(std::move(o));
    }
    return Dictionary(static_cast<int>(n), std::move(obs));
}

Dictionary monomial_dictionary(int n, int max_degree) {
    require(n >= 1 && max_degree >= 0, ErrorKind::InvalidArgument, "invalid monomial dictionary shape");
    std::vector<std::vector<int>> exps;
    std::vector<int> cur(n, 0);
    for (int deg = 0; deg <= max_degree; ++deg) enumerate_degree(n, deg, 0, cur, exps);
    std::vector<Observable> obs;
    for (auto& e : exps) {
        Observable o;
        o.kind = ObservableKind::Monomial;
        o.label = monomial_label(e);
        o.exponents = std::move(e);
        obs.push_back(std::move(o));
    }
    return Dictionary(n, std::move(obs));
}

Dictionary linear_dictionary(int n) {
    require(n >= 1, ErrorKind::InvalidArgument, "invalid dimension");
    std::vector<Observable> obs;
    for (int i = 0; i < n; ++i) {
        Observable o;
        o.kind = ObservableKind::Monomial;
        o.exponents.assign(n, 0);
        o.exponents[i] = 1;
        o.label = monomial_label(o.exponents);
        obs.push_back(std::move(o));
    }
    return Dictionary(n, std::move(obs));
}

Dictionary custom_dictionary(int n, std::vector<std::function<cplx(const RVector&)>> fns,
                             std::vector<std::string> labels) {
    std::vector<Observable> obs;
    for (std::size_t j = 0; j < fns.size(); ++j) {
        Observable o;
        o.kind = ObservableKind::Custom;
        o.custom = std::move(fns[j]);
        o.label = j < labels.size() ? labels[j] : "f" + std::to_string(j);
        obs.push_back(std::move(o));
    }
    return Dictionary(n, std::move(obs));
}

std::vector<RVector> sample_centers(const RMatrix& data, int count, std::uint64_t seed) {
    require(data.rows() >= 1 && count >= 1, ErrorKind::InvalidArgument, "need data and a positive center count");
    const RVector lo = data.colwise().minCoeff().transpose();
    const RVector hi = data.colwise().maxCoeff().transpose();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<RVector> out(count, RVector(data.cols()));
    for (auto& c : out)
        for (Eigen::Index j = 0; j < data.cols(); ++j) c(j) = lo(j) + (hi(j) - lo(j)) * unit(rng);
    return out;
}

Dictionary close_under_group(const Dictionary& d, const groups::GroupAction& state_action) {
    require(state_action.dim() == d.state_dim(), ErrorKind::DimensionMismatch,
            "action dimension " + std::to_string(state_action.dim()) + " does not match state dimension " +
                std::to_string(d.state_dim()));
    require(!d.transform(), ErrorKind::InvalidArgument, "close the dictionary before applying a transform");
    const auto kind = d.kind_name();
    if (kind == "rbf") return close_rbf(d, state_action);
    if (kind == "monomial") return close_monomial(d, state_action);
    if (state_action.group().order() == 1) {
        std::vector<CMatrix> id{CMatrix::Identity(d.base_size(), d.base_size())};
        GroupMetadata meta{state_action, groups::GroupAction(state_action.group_ptr(), id), {}, 0};
        meta.orbit_of = orbit_ids(id, meta.orbit_count);
        return d.with_group(std::move(meta));
    }
    fail(ErrorKind::Closure, "observable '" + d.observable(0).label +
                                 "' has no transformation rule; custom dictionaries can only carry the trivial group");
}

Dictionary apply_isotypic(const Dictionary& d, const groups::IsotypicTransform& t) {
    require(d.group().has_value(), ErrorKind::InvalidArgument, "dictionary carries no group action");
    require(t.source_size == d.base_size(), ErrorKind::DimensionMismatch,
            "transform expects " + std::to_string(t.source_size) + " observables, dictionary has " +
                std::to_string(d.base_size()));
    return d.with_transform(t);
}

}  // namespace koopsym::dictionaries
