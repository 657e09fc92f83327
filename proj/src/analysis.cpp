#include "koopsym/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "koopsym/error.hpp"
#include "koopsym/parallel.hpp"

namespace koopsym::analysis {

namespace {

std::vector<int> prefix(const std::vector<int>& sizes) {
    std::vector<int> off(sizes.size() + 1, 0);
    for (std::size_t b = 0; b < sizes.size(); ++b) off[b + 1] = off[b] + sizes[b];
    return off;
}

std::vector<int> owners(const std::vector<int>& sizes) {
    std::vector<int> out;
    for (std::size_t b = 0; b < sizes.size(); ++b) out.insert(out.end(), sizes[b], static_cast<int>(b));
    return out;
}

/// Kahan-compensated running sum.
struct Compensated {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

BlockPattern extract_block_pattern(const CMatrix& K, const std::vector<int>& sizes, double tau) {
    require(K.rows() == K.cols(), ErrorKind::DimensionMismatch, "K must be square");
    const auto off = prefix(sizes);
    require(off.back() == K.rows(), ErrorKind::DimensionMismatch,
            "layout covers " + std::to_string(off.back()) + " functions, K has " + std::to_string(K.rows()));
    const int nb = static_cast<int>(sizes.size());
    BlockPattern out;
    out.sizes = sizes;
    out.tau = tau;
    out.residuals = RMatrix::Zero(nb, nb);
    out.interaction = BoolMatrix::Constant(nb, nb, false);
    const double kn = K.norm();
    if (kn == 0.0) return out;
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
            out.residuals(i, j) = K.block(off[i], off[j], sizes[i], sizes[j]).norm() / kn;
            out.interaction(i, j) = i == j || out.residuals(i, j) > tau;
        }
    return out;
}

BlockPattern component_pattern(const CMatrix& K, const groups::IsotypicTransform& transform,
                               const groups::FiniteGroup& group, double tau) {
    BlockPattern out = extract_block_pattern(K, transform.component_sizes(), tau);
    int last = -1;
    for (const auto& slot : transform.layout) {
        if (slot.irrep == last) continue;
        last = slot.irrep;
        out.irreps.push_back(slot.irrep);
        out.labels.push_back(group.irrep(slot.irrep).name);
    }
    return out;
}

std::vector<int> embed_subgroup(const groups::GroupAction& sigma, const groups::GroupAction& gamma, double tol) {
    require(sigma.dim() == gamma.dim(), ErrorKind::InvalidArgument,
            "actions have dimensions " + std::to_string(sigma.dim()) + " and " + std::to_string(gamma.dim()));
    const auto& gs = sigma.group();
    const auto& gg = gamma.group();
    std::vector<int> map(gg.order(), -1);
    for (int a = 0; a < gg.order(); ++a) {
        for (int s = 0; s < gs.order() && map[a] < 0; ++s)
            if ((sigma.matrix(s) - gamma.matrix(a)).norm() < tol) map[a] = s;
        require(map[a] >= 0, ErrorKind::InvalidArgument,
                gg.name() + " is not a subgroup of " + gs.name() + ": element " + gg.label(a) + " has no match");
    }
    for (int a = 0; a < gg.order(); ++a)
        for (int b = 0; b < gg.order(); ++b)
            require(map[gg.mul(a, b)] == gs.mul(map[a], map[b]), ErrorKind::InvalidArgument,
                    gg.name() + " does not embed into " + gs.name() + " as a subgroup");
    return map;
}

InteractionPrediction predict_interactions(const groups::GroupAction& sigma, const groups::GroupAction& gamma,
                                           double tol) {
    const auto& gs = sigma.group();
    const auto& gg = gamma.group();
    InteractionPrediction out;
    out.assumed_group = gs.name();
    out.candidate_group = gg.name();
    out.embedding = embed_subgroup(sigma, gamma);

    const auto regular = groups::cayley_permutation_rep(sigma.group_ptr());
    const int ps = gs.irrep_count(), qs = gg.irrep_count();
    std::vector<CMatrix> p_sigma(ps), p_gamma(qs);
    for (int p = 0; p < ps; ++p) p_sigma[p] = groups::character_projector(regular, p);
    for (int q = 0; q < qs; ++q) {
        const auto& ir = gg.irrep(q);
        p_gamma[q] = CMatrix::Zero(gs.order(), gs.order());
        for (int a = 0; a < gg.order(); ++a) p_gamma[q] += std::conj(ir.characters[a]) * regular.matrix(out.embedding[a]);
        p_gamma[q] *= static_cast<double>(ir.dim) / gg.order();
    }

    // left coset representatives h of h Gamma
    std::vector<int> reps;
    std::vector<bool> covered(gs.order(), false);
    for (int s = 0; s < gs.order(); ++s) {
        if (covered[s]) continue;
        reps.push_back(s);
        for (int a = 0; a < gg.order(); ++a) covered[gs.mul(s, out.embedding[a])] = true;
    }

    out.overlap_rank = Eigen::MatrixXi::Zero(ps, qs);
    out.character_overlap = BoolMatrix::Constant(ps, qs, false);
    bool printed_agrees = true;
    for (int p = 0; p < ps; ++p)
        for (int q = 0; q < qs; ++q) {
            // commuting orthogonal projectors: the product is a projector and
            // its squared Frobenius norm is its rank
            const double sq = (p_sigma[p] * p_gamma[q]).squaredNorm();
            out.overlap_rank(p, q) = static_cast<int>(std::lround(sq));
            bool any = false;
            for (int h : reps) {
                cplx sum = 0.0;
                for (int a = 0; a < gg.order(); ++a) {
                    const int arg = gs.mul(h, gs.inverse(out.embedding[a]));
                    sum += std::conj(gs.irrep(p).characters[arg]) * std::conj(gg.irrep(q).characters[a]);
                }
                any = any || std::abs(sum) > tol * gg.order();
            }
            out.character_overlap(p, q) = any;
            const bool by_rank = out.overlap_rank(p, q) > 0;
            if (any != by_rank) out.character_agrees = false;
            if (!any != by_rank) printed_agrees = false;
        }
    out.printed_wording_agrees = printed_agrees;
    if (!out.character_agrees)
        out.notes.push_back("coset character sums disagree with projector ranks; ranks are used");
    if (!printed_agrees)
        out.notes.push_back("the criterion 'sum = 0 for all cosets' gives the complement of the projector-rank "
                            "overlaps; overlaps are read as 'sum != 0 for some coset'");

    out.interaction = BoolMatrix::Constant(ps, ps, false);
    for (int p1 = 0; p1 < ps; ++p1)
        for (int p2 = 0; p2 < ps; ++p2)
            for (int q = 0; q < qs; ++q)
                if (out.overlap_rank(p1, q) > 0 && out.overlap_rank(p2, q) > 0) out.interaction(p1, p2) = true;
    return out;
}

Candidate score_candidate(const BlockPattern& observed, const InteractionPrediction& prediction) {
    require(observed.irreps.size() == observed.sizes.size(), ErrorKind::InvalidArgument,
            "observed pattern is not over isotypic components");
    Candidate c;
    c.name = prediction.candidate_group;
    const int nb = observed.blocks();
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
            if (i == j || observed.sizes[i] == 0 || observed.sizes[j] == 0) continue;
            const int pi = observed.irreps[i], pj = observed.irreps[j];
            require(pi < prediction.interaction.rows() && pj < prediction.interaction.rows(),
                    ErrorKind::InvalidArgument, "prediction does not cover the observed irreps");
            const bool zero = observed.residuals(i, j) < observed.tau;
            if (prediction.interaction(pi, pj)) {
                ++c.predicted_nonzero;
                c.missing_nonzero += zero;
            } else {
                ++c.predicted_zero;
                c.matched_zero += zero;
            }
        }
    const double kept = c.predicted_zero ? static_cast<double>(c.matched_zero) / c.predicted_zero : 1.0;
    const double lost = c.predicted_nonzero ? static_cast<double>(c.missing_nonzero) / c.predicted_nonzero : 0.0;
    c.score = kept - lost;
    return c;
}

std::vector<Candidate> infer_symmetry(const BlockPattern& observed,
                                      const std::vector<InteractionPrediction>& candidates) {
    std::vector<Candidate> out;
    for (const auto& p : candidates) out.push_back(score_candidate(observed, p));
    std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j)
            if (i != j && std::abs(out[i].score - out[j].score) < 1e-12) out[i].tied = true;
    return out;
}

double bootstrap_noise_floor(const CMatrix& xi_x, const CMatrix& xi_y, const std::vector<int>& sizes, int resamples,
                             std::uint64_t seed) {
    require(resamples >= 2, ErrorKind::InvalidArgument, "bootstrap needs at least two resamples");
    const Eigen::Index m = xi_x.rows(), n = xi_x.cols();
    const auto off = prefix(sizes);
    require(off.back() == n, ErrorKind::DimensionMismatch, "layout does not match the data");
    const double kn = edmd::edmd_fit(xi_x, xi_y).K.norm();
    if (kn == 0.0) return 0.0;

    std::vector<CMatrix> ks(resamples);
    parallel_for(resamples, [&](int r) {
        auto rng = stream(seed, static_cast<std::uint64_t>(r));
        std::uniform_int_distribution<Eigen::Index> pick(0, m - 1);
        CMatrix bx(m, n), by(m, n);
        for (Eigen::Index i = 0; i < m; ++i) {
            const Eigen::Index k = pick(rng);
            bx.row(i) = xi_x.row(k);
            by.row(i) = xi_y.row(k);
        }
        ks[r] = edmd::edmd_fit(bx, by).K;
    });
    CMatrix mean = CMatrix::Zero(n, n);
    for (const auto& k : ks) mean += k;
    mean /= static_cast<double>(resamples);
    RMatrix var = RMatrix::Zero(n, n);
    for (const auto& k : ks) var += (k - mean).cwiseAbs2();
    var /= static_cast<double>(resamples - 1);

    const int nb = static_cast<int>(sizes.size());
    double worst = 0.0;
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
            if (i != j) worst = std::max(worst, std::sqrt(var.block(off[i], off[j], sizes[i], sizes[j]).sum()));
    return 3.0 * worst / kn;
}

NoiseSetup z2_linear_benchmark(int base_points, std::uint64_t seed) {
    RMatrix lambda(2, 2);
    lambda << 0.7, 0.2, 0.2, 0.7;
    auto action = groups::build_action(groups::build_cyclic(2), std::vector<RMatrix>{-RMatrix::Identity(2, 2)});
    const auto base =
        dynamics::linear_map_snapshots(lambda, dynamics::uniform_initial_conditions(base_points, 2, 1.0, seed));
    auto dict = dictionaries::close_under_group(dictionaries::monomial_dictionary(2, 3), action);
    auto transform = groups::isotypic_transform(dict.group()->index_action);
    return {dynamics::symmetrize_snapshots(base, action), std::move(action), std::move(dict), std::move(transform)};
}

NoiseReport noise_experiment(const NoiseSetup& setup, const NoiseOptions& options) {
    require(options.realizations >= 1, ErrorKind::InvalidArgument, "need at least one realization");
    require(options.noise_scale >= 0.0, ErrorKind::InvalidArgument, "noise scale must be non-negative");
    const auto& action = setup.state_action;
    require(action.dim() == setup.data.dim(), ErrorKind::DimensionMismatch, "action does not match the state");
    for (int g = 0; g < action.group().order(); ++g) {
        const CMatrix& mg = action.matrix(g);
        require((mg * mg.adjoint() - CMatrix::Identity(mg.rows(), mg.cols())).norm() < 1e-10, ErrorKind::Symmetry,
                "isotropic Gaussian noise is not invariant under a non-orthogonal action");
    }
    const CMatrix tt = setup.transform.matrix.transpose();
    const int n = static_cast<int>(tt.cols());
    require(setup.dictionary.size() == tt.rows(), ErrorKind::DimensionMismatch,
            "transform does not match the dictionary");

    const int r_count = options.realizations;
    std::vector<std::optional<RMatrix>> ks(r_count);
    const Eigen::Index m = setup.data.pairs(), dim = setup.data.dim();
    parallel_for(r_count, [&](int r) {
        auto rng = stream(options.seed, static_cast<std::uint64_t>(r));
        std::normal_distribution<double> normal(0.0, 1.0);
        RMatrix x = setup.data.X, y = setup.data.Y;
        if (options.noise_scale > 0.0) {
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < dim; ++j) x(i, j) += options.noise_scale * normal(rng);
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < dim; ++j) y(i, j) += options.noise_scale * normal(rng);
        }
        const auto model = edmd::edmd_fit(setup.dictionary.evaluate(x) * tt, setup.dictionary.evaluate(y) * tt,
                                          options.rcond);
        if (model.rank_of_G < n) return;
        ks[r] = model.K.real();
    });

    NoiseReport rep;
    rep.noise_scale = options.noise_scale;
    rep.realizations = r_count;
    std::vector<const RMatrix*> used;
    for (const auto& k : ks) {
        if (k) used.push_back(&*k);
        else ++rep.skipped;
    }
    rep.used = static_cast<int>(used.size());
    if (rep.skipped > 0)
        rep.warnings.push_back(std::to_string(rep.skipped) + " realizations skipped: G was rank deficient");
    if (used.empty()) {
        rep.consistent = false;
        rep.fraction_consistent = 0.0;
        return rep;
    }
    rep.stderr_defined = used.size() >= 2;
    if (!rep.stderr_defined) rep.warnings.push_back("standard error undefined with a single realization");

    Compensated knorm;
    for (const RMatrix* k : used) knorm.add(k->norm());
    const double zero = options.zero_tolerance * knorm.sum / static_cast<double>(used.size());

    const auto owner = owners(setup.transform.component_sizes());
    int passed = 0;
    Compensated stderr_sum;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (owner[i] == owner[j]) continue;
            Compensated sum;
            for (const RMatrix* k : used) sum.add((*k)(i, j));
            NoiseEntry e;
            e.row = i;
            e.col = j;
            e.mean = sum.sum / static_cast<double>(used.size());
            if (rep.stderr_defined) {
                Compensated sq;
                for (const RMatrix* k : used) sq.add(((*k)(i, j) - e.mean) * ((*k)(i, j) - e.mean));
                e.stderr_ = std::sqrt(sq.sum / static_cast<double>(used.size() - 1) / static_cast<double>(used.size()));
            }
            e.consistent = std::abs(e.mean) <= zero ||
                           (rep.stderr_defined && std::abs(e.mean) <= options.sigmas * e.stderr_);
            passed += e.consistent;
            stderr_sum.add(e.stderr_);
            rep.max_abs_mean = std::max(rep.max_abs_mean, std::abs(e.mean));
            rep.off_block.push_back(e);
        }
    if (!rep.off_block.empty()) {
        rep.fraction_consistent = static_cast<double>(passed) / static_cast<double>(rep.off_block.size());
        rep.mean_stderr = stderr_sum.sum / static_cast<double>(rep.off_block.size());
    }
    rep.consistent = rep.fraction_consistent >= 0.95;
    return rep;
}

}  // namespace koopsym::analysis
