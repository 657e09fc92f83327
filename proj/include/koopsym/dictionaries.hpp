#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "koopsym/groups.hpp"
#include "koopsym/linalg.hpp"

namespace koopsym::dictionaries {

enum class ObservableKind { Rbf, Monomial, Custom };

/// One scalar observable. Linear coordinates are degree-one monomials and
/// the constant is the degree-zero monomial.
struct Observable {
    ObservableKind kind = ObservableKind::Custom;
    RVector center;              ///< Rbf
    std::vector<int> exponents;  ///< Monomial
    std::function<cplx(const RVector&)> custom;
    std::string label;
};

/// Index-space action induced by a state action. With P = index_action,
/// Psi(g^-1 x) = Psi(x) P(g) for every element g.
struct GroupMetadata {
    groups::GroupAction state_action;
    groups::GroupAction index_action;
    std::vector<int> orbit_of;  ///< orbit id per observable
    int orbit_count = 0;
};

class Dictionary {
public:
    Dictionary(int state_dim, std::vector<Observable> observables);

    /// Number of functions after any transform.
    int size() const;
    int base_size() const { return static_cast<int>(observables_.size()); }
    int state_dim() const { return state_dim_; }
    const std::vector<Observable>& observables() const { return observables_; }
    const Observable& observable(int j) const { return observables_.at(j); }

    const std::optional<GroupMetadata>& group() const { return group_; }
    const std::optional<groups::IsotypicTransform>& transform() const { return transform_; }
    std::string kind_name() const;

    /// Base observable j at one state.
    cplx evaluate_base(int j, const RVector& x) const;

    /// M x size() matrix, row i = Psi(states.row(i)), transform applied when
    /// present (Xi = Psi T^T). Rows are evaluated in parallel.
    CMatrix evaluate(const RMatrix& states) const;
    /// Base observables only, ignoring any transform.
    CMatrix evaluate_base(const RMatrix& states) const;

    Dictionary with_group(GroupMetadata meta) const;
    Dictionary with_transform(groups::IsotypicTransform t) const;

private:
    int state_dim_ = 0;
    std::vector<Observable> observables_;
    std::optional<GroupMetadata> group_;
    std::optional<groups::IsotypicTransform> transform_;
};

/// psi(c, x) = r log r with r = ||x - c||^(1/2), and psi(c, c) = 0.
double rbf_value(const RVector& center, const RVector& x);

/// One observable per center. Throws InvalidArgument on duplicate centers.
Dictionary rbf_dictionary(const std::vector<RVector>& centers);

/// All monomials of total degree 0..max_degree in n variables, graded
/// lexicographic order (constant first).
Dictionary monomial_dictionary(int n, int max_degree);

/// Coordinates x_1..x_n.
Dictionary linear_dictionary(int n);

Dictionary custom_dictionary(int n, std::vector<std::function<cplx(const RVector&)>> fns,
                             std::vector<std::string> labels = {});

/// Seeded uniform samples inside the bounding box of the rows of `data`.
std::vector<RVector> sample_centers(const RMatrix& data, int count, std::uint64_t seed);

/// Closes the dictionary under the state action and records the induced
/// index action. RBF dictionaries expand to every orbit of their centers,
/// ordered element-major (all centers moved by g_0, then g_1, ...), with
/// repeated centers dropped. Monomial dictionaries must already be closed
/// and the action must be a signed permutation, otherwise Closure is thrown
/// naming the offending observable.
Dictionary close_under_group(const Dictionary& d, const groups::GroupAction& state_action);

/// Records t; evaluations become Xi = Psi T^T.
Dictionary apply_isotypic(const Dictionary& d, const groups::IsotypicTransform& t);

}  // namespace koopsym::dictionaries
