#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "koopsym/dynamics.hpp"
#include "koopsym/error.hpp"
#include "koopsym/io.hpp"
#include "koopsym/parallel.hpp"
#include "support.hpp"

using namespace koopsym;
using namespace koopsym::dynamics;

namespace {

RMatrix sorted_rows(const RMatrix& a) {
    std::vector<std::vector<double>> rows(a.rows(), std::vector<double>(a.cols()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) rows[i][j] = a(i, j);
    std::sort(rows.begin(), rows.end());
    RMatrix out(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out(i, j) = rows[i][j];
    return out;
}

double duffing_energy(const DuffingNetwork& net, const RVector& s) {
    const double x = s(0), y = s(1);
    return 0.5 * y * y + 0.5 * net.beta * x * x + 0.25 * net.alpha * net.alpha * x * x * x * x;
}

}  // namespace

TEST_CASE("duffing rhs examples") {
    auto single = DuffingNetwork::uniform(1, 0.0);
    RVector s(2);
    s << 1.0, 0.0;
    CHECK(duffing_rhs(single, s).norm() == 0.0);
    s << -1.0, 0.0;
    CHECK(duffing_rhs(single, s).norm() == 0.0);
    s << 0.5, 2.0;
    const RVector d = duffing_rhs(single, s);
    CHECK(d(0) == doctest::Approx(2.0));
    CHECK(d(1) == doctest::Approx(-0.5 * 2.0 - 0.5 * (-1.0 + 0.25)));

    RVector bad(3);
    CHECK_THROWS_AS(duffing_rhs(single, bad), Error);
}

TEST_CASE("duffing coupling term") {
    auto net = DuffingNetwork::uniform(2, 0.0, 1.0, 0.0, 0.0);
    net.eta(0, 1) = 2.0;
    RVector s(4);
    s << 1.0, 0.0, 3.0, 0.0;
    const RVector d = duffing_rhs(net, s);
    // node 1: -x^3 + 2 (x1 - x2) = -1 - 4
    CHECK(d(1) == doctest::Approx(-5.0));
    // node 2 has no coupling: -27
    CHECK(d(3) == doctest::Approx(-27.0));
}

TEST_CASE("equal couplings are equivariant under Z2 x D3") {
    const auto action = test::z2xd3_state_action();
    CHECK(action.group().order() == 12);
    const auto rhs = vector_field(DuffingNetwork::uniform(3, 1.0));
    const auto samples = uniform_initial_conditions(50, 6, 2.0, 7);
    CHECK(equivariance_residual(rhs, action, samples) < 1e-12);

    const auto trivial = groups::build_action(groups::build_cyclic(1), std::vector<RMatrix>{RMatrix::Identity(6, 6)});
    CHECK(equivariance_residual(rhs, trivial, samples) == 0.0);
}

TEST_CASE("broken coupling symmetry is detected with the right magnitude") {
    const auto action = test::d3_node_action();
    const double delta = 0.3;
    auto net = DuffingNetwork::uniform(3, 1.0);
    net.eta(0, 1) += delta;
    const auto samples = uniform_initial_conditions(50, 6, 2.0, 11);
    double max_x = 0.0;
    for (const auto& v : samples) max_x = std::max(max_x, v.cwiseAbs().maxCoeff());
    const double res = equivariance_residual(vector_field(net), action, samples);
    CHECK(res > 0.1 * delta);
    // |eta_12 - eta_21| |x_i - x_j| bounds every component difference; at most two rows differ
    CHECK(res <= 2.0 * std::sqrt(2.0) * delta * 2.0 * max_x);
}

TEST_CASE("rk4 examples") {
    const VectorField zero = [](const RVector& x) { return RVector(RVector::Zero(x.size())); };
    RVector x0(3);
    x0 << 1.0, -2.0, 0.5;
    const RMatrix traj = integrate(zero, x0, 0.1, 5);
    CHECK(traj.rows() == 6);
    for (Eigen::Index i = 0; i < traj.rows(); ++i) CHECK((traj.row(i).transpose() - x0).norm() == 0.0);

    const VectorField decay = [](const RVector& x) { return RVector(-x); };
    RVector one(1);
    one << 1.0;
    const RMatrix e = integrate(decay, one, 0.01, 100);
    CHECK(std::abs(e(100, 0) - std::exp(-1.0)) < 1e-8);

    CHECK_THROWS_AS(integrate(decay, one, 0.0, 10), Error);
    CHECK_THROWS_AS(integrate(decay, one, -0.1, 10), Error);
}

TEST_CASE("rk4 reports divergence with the step index") {
    const VectorField blowup = [](const RVector& x) { return RVector(x.array().square().matrix() * 10.0); };
    RVector x0(1);
    x0 << 1.0;
    try {
        integrate(blowup, x0, 0.5, 200);
        FAIL("expected divergence");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::Divergence);
        CHECK(std::string(err.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("damped duffing stays bounded and loses energy") {
    const auto net = DuffingNetwork::uniform(1, 0.0);
    RVector x0(2);
    x0 << 0.5, 0.0;
    const RMatrix traj = integrate(vector_field(net), x0, 0.01, 10000);
    CHECK(traj.allFinite());
    double prev = duffing_energy(net, x0);
    int increases = 0;
    for (Eigen::Index i = 100; i < traj.rows(); i += 100) {
        const double e = duffing_energy(net, traj.row(i).transpose());
        if (e > prev + 1e-10) ++increases;
        prev = e;
    }
    CHECK(increases == 0);
    // settles into the right well
    CHECK(std::abs(traj(10000, 0) - 1.0) < 1e-3);
}

TEST_CASE("trajectories map to trajectories") {
    const auto action = test::z2xd3_state_action();
    const auto rhs = vector_field(DuffingNetwork::uniform(3, 1.0));
    const auto ics = uniform_initial_conditions(3, 6, 2.0, 3);
    for (const auto& x0 : ics) {
        const RMatrix base = integrate(rhs, x0, 0.01, 100);
        for (int g = 0; g < action.group().order(); ++g) {
            const RMatrix m = action.real_matrix(g);
            const RMatrix moved = integrate(rhs, m * x0, 0.01, 100);
            CHECK((moved - base * m.transpose()).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("sample_snapshots shape, pairing and determinism") {
    const auto rhs = vector_field(DuffingNetwork::uniform(3, 1.0));
    RVector x0 = RVector::Constant(6, 0.3);
    auto one = sample_snapshots(rhs, {x0}, 0.01, 10);
    CHECK(one.pairs() == 10);
    for (int i = 0; i + 1 < 10; ++i) CHECK((one.Y.row(i) - one.X.row(i + 1)).norm() == 0.0);

    const auto ics = uniform_initial_conditions(500, 6, 2.0, 0);
    for (const auto& v : ics) CHECK(v.cwiseAbs().maxCoeff() <= 2.0);
    const auto s1 = sample_snapshots(rhs, ics, 0.01, 10);
    CHECK(s1.pairs() == 5000);
    for (int t = 0; t < 500; ++t)
        for (int k = 0; k + 1 < 10; ++k) CHECK(s1.Y.row(t * 10 + k) == s1.X.row(t * 10 + k + 1));
    const auto s2 = sample_snapshots(rhs, uniform_initial_conditions(500, 6, 2.0, 0), 0.01, 10);
    CHECK(snapshot_hash(s1) == snapshot_hash(s2));

    set_max_threads(4);
    const auto s3 = sample_snapshots(rhs, ics, 0.01, 10);
    set_max_threads(1);
    CHECK(snapshot_hash(s1) == snapshot_hash(s3));

    const auto other = sample_snapshots(rhs, uniform_initial_conditions(500, 6, 2.0, 1), 0.01, 10);
    CHECK(snapshot_hash(s1) != snapshot_hash(other));

    CHECK_THROWS_AS(sample_snapshots(rhs, {}, 0.01, 10), Error);
}

TEST_CASE("symmetrize examples") {
    RMatrix x(3, 2), y(3, 2);
    x << 1, 2, 3, 4, 5, 6;
    y << 0.5, 1, 1.5, 2, 2.5, 3;
    SnapshotSet s{x, y, 0.1, ""};

    const auto trivial = groups::build_action(groups::build_cyclic(1), std::vector<RMatrix>{RMatrix::Identity(2, 2)});
    const auto same = symmetrize_snapshots(s, trivial);
    CHECK(same.X == s.X);
    CHECK(same.Y == s.Y);

    const auto flip = groups::build_action(groups::build_cyclic(2), std::vector<RMatrix>{-RMatrix::Identity(2, 2)});
    const auto sym = symmetrize_snapshots(s, flip);
    CHECK(sym.pairs() == 6);
    CHECK(sym.X.bottomRows(3) == -x);
    CHECK(symmetry_residual(sym, flip) == 0.0);
    CHECK(symmetry_residual(s, flip) > 0.0);

    const auto d3 = test::d3_point_action();
    CHECK_THROWS_AS(symmetrize_snapshots(s, d3), Error);
}

TEST_CASE("symmetrized duffing data is exactly closed") {
    const auto action = test::z2xd3_state_action();
    const auto rhs = vector_field(DuffingNetwork::uniform(3, 1.0));
    const auto base = sample_snapshots(rhs, uniform_initial_conditions(500, 6, 2.0, 0), 0.01, 10);
    const auto sym = symmetrize_snapshots(base, action);
    CHECK(sym.pairs() == 60000);
    CHECK(symmetry_residual(sym, action) == 0.0);
}

TEST_CASE("symmetrizing twice duplicates each pair |G| times") {
    const auto action = test::d3_node_action();
    const auto rhs = vector_field(DuffingNetwork::uniform(3, 1.0));
    const auto base = sample_snapshots(rhs, uniform_initial_conditions(4, 6, 2.0, 5), 0.01, 3);
    const auto once = symmetrize_snapshots(base, action);
    const auto twice = symmetrize_snapshots(once, action);
    CHECK(twice.pairs() == 6 * once.pairs());

    RMatrix pairs_once(once.pairs(), 12), pairs_twice(twice.pairs(), 12);
    pairs_once << once.X, once.Y;
    pairs_twice << twice.X, twice.Y;
    RMatrix repeated(6 * once.pairs(), 12);
    for (int k = 0; k < 6; ++k) repeated.middleRows(k * once.pairs(), once.pairs()) = pairs_once;
    CHECK((sorted_rows(repeated) - sorted_rows(pairs_twice)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear map snapshots") {
    RMatrix a(2, 2);
    a << 0.7, 0.2, 0.2, 0.7;
    std::vector<RVector> xs{RVector::Unit(2, 0), RVector::Unit(2, 1)};
    const auto s = linear_map_snapshots(a, xs);
    CHECK(s.Y.row(0).transpose() == a.col(0));
    CHECK(s.Y.row(1).transpose() == a.col(1));
}

TEST_CASE("snapshot csv round trip is bit exact") {
    const auto rhs = vector_field(DuffingNetwork::uniform(3, 1.0));
    auto s = sample_snapshots(rhs, uniform_initial_conditions(20, 6, 2.0, 9), 0.01, 5);
    s.X(0, 0) = std::numeric_limits<double>::denorm_min();
    s.X(0, 1) = -0.0;
    s.Y(1, 2) = std::numeric_limits<double>::max();
    s.Y(2, 3) = 1.0 / 3.0;
    std::stringstream buf;
    io::write_snapshots(buf, s);
    const std::string text = buf.str();
    CHECK(text.rfind("n=6,M=100,dt=0.01", 0) == 0);
    const auto back = io::read_snapshots(buf);
    CHECK(back.dt == s.dt);
    CHECK(snapshot_hash(back) == snapshot_hash(s));
    CHECK(std::signbit(back.X(0, 1)));

    std::stringstream again;
    io::write_snapshots(again, back);
    CHECK(again.str() == text);
}

TEST_CASE("snapshot csv rejects malformed input") {
    std::stringstream missing("n=2,M=2,dt=0.1\n1,2,3,4\n");
    CHECK_THROWS_AS(io::read_snapshots(missing), Error);
    std::stringstream short_row("n=2,M=1,dt=0.1\n1,2,3\n");
    CHECK_THROWS_AS(io::read_snapshots(short_row), Error);
    std::stringstream junk("n=2,M=1,dt=0.1\n1,2,x,4\n");
    CHECK_THROWS_AS(io::read_snapshots(junk), Error);
    std::stringstream header("hello\n");
    CHECK_THROWS_AS(io::read_snapshots(header), Error);
    std::stringstream versioned("n=1,M=1,dt=0.5,format_version=1\n1,2\n");
    CHECK(io::read_snapshots(versioned).Y(0, 0) == 2.0);
}

TEST_CASE("matrix csv round trip") {
    CMatrix m(2, 2);
    m << cplx(1.5, -2.0), cplx(0.1, 1e-300), cplx(-3.0, 0.0), cplx(2.0 / 3.0, -1.0 / 7.0);
    std::stringstream buf;
    io::write_matrix(buf, m);
    const CMatrix back = io::read_matrix(buf);
    CHECK(back == m);

    RMatrix r(1, 3);
    r << 1.0, -2.5e-17, 3.0;
    std::stringstream rbuf;
    io::write_matrix(rbuf, CMatrix(r.cast<cplx>()));
    CHECK(rbuf.str().find('j') == std::string::npos);
    CHECK(io::read_matrix(rbuf).real() == r);
}
