#include <doctest.h>

#include <random>

#include "koopsym/analysis.hpp"
#include "koopsym/error.hpp"
#include "koopsym/parallel.hpp"
#include "support.hpp"

using namespace koopsym;
using namespace koopsym::analysis;

namespace {

BoolMatrix pattern(std::initializer_list<std::initializer_list<int>> rows) {
    BoolMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (int v : r) out(i, j++) = v != 0;
        ++i;
    }
    return out;
}

/// Data symmetric under `truth`, dictionary and basis from `assumed`.
BlockPattern observed_pattern(const std::string& scheme, const std::string& truth, const std::string& assumed,
                              int ics, int centers) {
    const auto sigma = presets::network_action(assumed);
    const auto rhs = dynamics::vector_field(presets::duffing_network(scheme));
    const auto base = dynamics::sample_snapshots(rhs, dynamics::uniform_initial_conditions(ics, 6, 2.0, 21), 0.01, 10);
    const auto data = dynamics::symmetrize_snapshots(base, presets::network_action(truth));
    const auto dict = dictionaries::close_under_group(
        dictionaries::rbf_dictionary(dictionaries::sample_centers(base.X, centers, 22)), sigma);
    const auto t = groups::isotypic_transform(dict.group()->index_action);
    const CMatrix tt = t.matrix.transpose();
    const auto model = edmd::edmd_fit(dict.evaluate(data.X) * tt, dict.evaluate(data.Y) * tt);
    return component_pattern(model.K, t, sigma.group());
}

std::vector<InteractionPrediction> network_candidates(const std::string& assumed) {
    const auto sigma = presets::network_action(assumed);
    std::vector<InteractionPrediction> out;
    for (const auto& name : presets::network_group_names()) {
        const auto gamma = presets::network_action(name);
        try {
            out.push_back(predict_interactions(sigma, gamma));
        } catch (const Error&) {
            // not a subgroup of the assumed group
        }
    }
    return out;
}

}  // namespace

TEST_CASE("block pattern of simple matrices") {
    CMatrix k = CMatrix::Zero(5, 5);
    k.block(0, 0, 2, 2).setConstant(1.0);
    k.block(2, 2, 3, 3).setConstant(2.0);
    auto p = extract_block_pattern(k, {2, 3});
    CHECK((p.interaction == pattern({{1, 0}, {0, 1}})).all());
    CHECK(p.residuals(0, 1) == 0.0);
    CHECK(p.residuals(0, 0) == doctest::Approx(2.0 / std::sqrt(4.0 + 36.0)));

    const CMatrix dense = CMatrix::Random(5, 5);
    CHECK(extract_block_pattern(dense, {2, 3}).interaction.all());
    CHECK(extract_block_pattern(dense, {1, 1, 1, 1, 1}).interaction.all());
    CHECK_THROWS_AS(extract_block_pattern(dense, {2, 2}), Error);

    // diagonal stays true even for a tiny diagonal block
    k.block(0, 0, 2, 2).setConstant(1e-9);
    CHECK(extract_block_pattern(k, {2, 3}).interaction(0, 0));
}

TEST_CASE("subgroup embedding by matching matrices") {
    const auto d3 = presets::network_action("D3");
    const auto z3 = presets::network_action("Z3");
    const auto map = embed_subgroup(d3, z3);
    CHECK(map.size() == 3);
    CHECK(map[0] == 0);
    for (int a = 0; a < 3; ++a)
        CHECK((d3.matrix(map[a]) - z3.matrix(a)).norm() < 1e-12);
    CHECK_THROWS_AS(embed_subgroup(z3, d3), Error);
    CHECK_THROWS_AS(embed_subgroup(d3, presets::network_action("Z2xZ3")), Error);
    CHECK_THROWS_AS(embed_subgroup(d3, test::d3_point_action()), Error);
}

TEST_CASE("predicted interactions for subgroups of D3") {
    const auto d3 = presets::network_action("D3");
    // irreps: tr, sign, st
    const auto z3 = predict_interactions(d3, presets::network_action("Z3"));
    CHECK((z3.interaction == pattern({{1, 1, 0}, {1, 1, 0}, {0, 0, 1}})).all());
    CHECK(z3.overlap_rank(2, 1) == 2);  // st meets omega in a 2-dim subspace of the regular rep
    CHECK(z3.overlap_rank(2, 0) == 0);

    const auto z2 = predict_interactions(d3, presets::network_action("Z2"));
    CHECK((z2.interaction == pattern({{1, 0, 1}, {0, 1, 1}, {1, 1, 1}})).all());

    const auto e = predict_interactions(d3, presets::network_action("trivial"));
    CHECK(e.interaction.all());

    const auto same = predict_interactions(d3, d3);
    CHECK((same.interaction == pattern({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})).all());
}

TEST_CASE("rank and character routes agree on all network subgroups") {
    for (const std::string assumed : {"D3", "Z2xD3"}) {
        const auto candidates = network_candidates(assumed);
        CHECK(candidates.size() == (assumed == "D3" ? 4u : 8u));
        for (const auto& c : candidates) {
            INFO(assumed << " > " << c.candidate_group);
            CHECK(c.character_agrees);
            CHECK((c.character_overlap == (c.overlap_rank.array() > 0)).all());
            // predictions are symmetric
            CHECK((c.interaction == c.interaction.transpose()).all());
            // every Sigma irrep meets some Gamma irrep; ranks add up to d_p^2
            const auto& g = presets::network_action(assumed).group();
            for (int p = 0; p < g.irrep_count(); ++p)
                CHECK(c.overlap_rank.row(p).sum() == g.irrep(p).dim * g.irrep(p).dim);
        }
    }
}

TEST_CASE("the printed coset wording is reported as the complement") {
    const auto pred = predict_interactions(presets::network_action("D3"), presets::network_action("Z3"));
    CHECK_FALSE(pred.printed_wording_agrees);
    CHECK_FALSE(pred.notes.empty());
}

TEST_CASE("Z2xD3 subgroups keep the sign-flip sectors apart") {
    const auto sigma = presets::network_action("Z2xD3");
    // components: trxtr trxsign trxst signxtr signxsign signxst
    const auto ring = predict_interactions(sigma, presets::network_action("Z2xZ3"));
    CHECK((ring.interaction == pattern({{1, 1, 0, 0, 0, 0},
                                        {1, 1, 0, 0, 0, 0},
                                        {0, 0, 1, 0, 0, 0},
                                        {0, 0, 0, 1, 1, 0},
                                        {0, 0, 0, 1, 1, 0},
                                        {0, 0, 0, 0, 0, 1}}))
              .all());
    const auto swap = predict_interactions(sigma, presets::network_action("Z2xZ2"));
    CHECK((swap.interaction == pattern({{1, 0, 1, 0, 0, 0},
                                        {0, 1, 1, 0, 0, 0},
                                        {1, 1, 1, 0, 0, 0},
                                        {0, 0, 0, 1, 0, 1},
                                        {0, 0, 0, 0, 1, 1},
                                        {0, 0, 0, 1, 1, 1}}))
              .all());
}

TEST_CASE("block-diagonal model scores 1 against the assumed group") {
    const auto sigma = presets::network_action("D3");
    BlockPattern observed = extract_block_pattern(CMatrix::Identity(6, 6), {1, 1, 4});
    observed.irreps = {0, 1, 2};
    const auto ranked = infer_symmetry(observed, {predict_interactions(sigma, sigma)});
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0].score == 1.0);
    CHECK_FALSE(ranked[0].tied);

    BlockPattern plain = extract_block_pattern(CMatrix::Identity(6, 6), {1, 1, 4});
    CHECK_THROWS_AS(score_candidate(plain, predict_interactions(sigma, sigma)), Error);
}

TEST_CASE("ties are reported") {
    const auto sigma = presets::network_action("D3");
    BlockPattern observed = extract_block_pattern(CMatrix::Identity(3, 3), {1, 1, 1});
    observed.irreps = {0, 1, 2};
    const auto p = predict_interactions(sigma, sigma);
    const auto ranked = infer_symmetry(observed, {p, p});
    CHECK(ranked[0].tied);
    CHECK(ranked[1].tied);
}

TEST_CASE("matched groups give block-diagonal fits") {
    const auto d3 = observed_pattern("equal", "D3", "D3", 60, 6);
    CHECK(d3.labels == std::vector<std::string>{"tr", "sign", "st"});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(d3.residuals(i, j) < 1e-8);
}

TEST_CASE("symmetry inference on the three coupling schemes") {
    const auto candidates = network_candidates("Z2xD3");
    for (const std::string scheme : {"equal", "ring", "swap"}) {
        const std::string truth = presets::scheme_group(scheme);
        INFO(scheme);
        const auto observed = observed_pattern(scheme, truth, "Z2xD3", 60, 6);
        const auto ranked = infer_symmetry(observed, candidates);
        CHECK(ranked.front().name == truth);
        CHECK_FALSE(ranked.front().tied);
        CHECK(ranked.front().score == 1.0);
        if (scheme == "ring") {
            CHECK(observed.residuals(0, 1) > 1e-6);
            CHECK(observed.residuals(0, 2) < 1e-6);
        }
        if (scheme == "swap") {
            CHECK(observed.residuals(0, 1) < 1e-6);
            CHECK(observed.residuals(0, 2) > 1e-6);
            CHECK(observed.residuals(1, 2) > 1e-6);
        }
    }
}

TEST_CASE("noise experiment: no noise is trivially consistent") {
    const auto setup = z2_linear_benchmark(50);
    NoiseOptions opts;
    opts.noise_scale = 0.0;
    opts.realizations = 5;
    const auto rep = noise_experiment(setup, opts);
    CHECK(rep.used == 5);
    CHECK(rep.consistent);
    CHECK(rep.max_abs_mean < 1e-8);
    CHECK(rep.off_block.size() == 2u * 4u * 6u);
}

TEST_CASE("noise experiment: off-block means vanish at the Monte Carlo rate") {
    const auto setup = z2_linear_benchmark();
    NoiseOptions opts;
    opts.noise_scale = 0.01;
    opts.realizations = 200;
    opts.seed = 7;
    const auto rep = noise_experiment(setup, opts);
    CHECK(rep.skipped == 0);
    CHECK(rep.stderr_defined);
    CHECK(rep.fraction_consistent >= 0.95);
    CHECK(rep.consistent);

    opts.realizations = 100;
    const double s100 = noise_experiment(setup, opts).mean_stderr;
    opts.realizations = 400;
    const double s400 = noise_experiment(setup, opts).mean_stderr;
    CHECK(s100 / s400 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("noise experiment is deterministic across thread counts") {
    const auto setup = z2_linear_benchmark(50);
    NoiseOptions opts;
    opts.realizations = 20;
    opts.seed = 3;
    const auto a = noise_experiment(setup, opts);
    set_max_threads(4);
    const auto b = noise_experiment(setup, opts);
    set_max_threads(1);
    REQUIRE(a.off_block.size() == b.off_block.size());
    for (std::size_t i = 0; i < a.off_block.size(); ++i) {
        CHECK(a.off_block[i].mean == b.off_block[i].mean);
        CHECK(a.off_block[i].stderr_ == b.off_block[i].stderr_);
    }
}

TEST_CASE("a single realization flags the standard error") {
    const auto setup = z2_linear_benchmark(50);
    NoiseOptions opts;
    opts.realizations = 1;
    const auto rep = noise_experiment(setup, opts);
    CHECK_FALSE(rep.stderr_defined);
    CHECK_FALSE(rep.warnings.empty());
}

TEST_CASE("bootstrap noise floor separates noise from structure") {
    const auto setup = z2_linear_benchmark(200);
    RMatrix x = setup.data.X, y = setup.data.Y;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x(i) += 0.01 * n01(rng);
        y(i) += 0.01 * n01(rng);
    }
    const CMatrix tt = setup.transform.matrix.transpose();
    const CMatrix xx = setup.dictionary.evaluate(x) * tt, xy = setup.dictionary.evaluate(y) * tt;
    const auto sizes = setup.transform.component_sizes();
    const double tau = bootstrap_noise_floor(xx, xy, sizes, 40, 1);
    const auto observed = extract_block_pattern(edmd::edmd_fit(xx, xy).K, sizes, tau);
    CHECK(tau > 0.0);
    CHECK(tau < 0.1);
    CHECK_FALSE(observed.interaction(0, 1));
    CHECK_FALSE(observed.interaction(1, 0));
    CHECK(observed.residuals(0, 0) > tau);
    CHECK(observed.residuals(1, 1) > tau);
}
