import json

import numpy as np
import pytest

import koopsym


def test_groups():
    names = koopsym.network_group_names()
    assert "Z2xD3" in names
    g = koopsym.network_action("Z2xD3")
    assert (g.order, g.dim) == (12, 6)
    assert g.irrep_names == ["trxtr", "trxsign", "trxst", "signxtr", "signxsign", "signxst"]
    flip = koopsym.group_action("cyclic", 2, [-np.eye(2)])
    assert np.allclose(flip.matrix(1), -np.eye(2))
    with pytest.raises(koopsym.KoopsymError):
        koopsym.group_action("cyclic", 3, [-np.eye(2)])


def test_symmetric_fit_blocks():
    X, Y = koopsym.duffing_snapshots("equal", initial_conditions=20, seed=0)
    assert X.shape == (200, 6)
    g = koopsym.network_action("Z2xD3")
    Xs, Ys = koopsym.symmetrize(X, Y, g)
    assert Xs.shape == (2400, 6)
    assert koopsym.symmetry_residual(Xs, Ys, g) == 0.0

    d = koopsym.close_under_group(koopsym.rbf_dictionary(koopsym.sample_centers(X, 4, 1)), g)
    assert d.size == 48
    T, layout = koopsym.isotypic_transform(d.index_action)
    assert [s for _, _, s in layout] == [4, 4, 8, 8, 4, 4, 8, 8]

    px, py = d.evaluate(Xs), d.evaluate(Ys)
    dense = koopsym.edmd_fit(px, py)
    assert koopsym.commutant_residual(dense.K, d.index_action) < 1e-8
    block = koopsym.block_edmd_fit(px @ T.T, py @ T.T, layout)
    k_src = koopsym.to_source_basis(block.K, T)
    assert np.linalg.norm(k_src - dense.K) / np.linalg.norm(dense.K) < 1e-8
    rest = list(block.eigenvalues)
    for z in dense.eigenvalues:
        i = int(np.argmin([abs(z - w) for w in rest]))
        assert abs(z - rest.pop(i)) < 1e-8


def test_linear_recovery_and_kernel():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(50, 2))
    Y = X @ np.diag([0.5, 0.9])
    d = koopsym.monomial_dictionary(2, 1)
    m = koopsym.edmd_fit(d.evaluate(X), d.evaluate(Y))
    ev = sorted(abs(np.array(m.eigenvalues)))
    assert np.allclose(ev, [0.5, 0.9, 1.0], atol=1e-10)

    dual = koopsym.kdmd_fit(X, Y, "poly1")
    assert dual.rank == 3
    assert np.allclose(sorted(abs(np.array(dual.eigenvalues))), [0.5, 0.9, 1.0], atol=1e-10)


def test_interactions():
    sigma = koopsym.network_action("Z2xD3")
    full = koopsym.predict_interactions(sigma, sigma)
    assert full.dtype == bool and np.array_equal(full, np.eye(6, dtype=bool))
    ring = koopsym.predict_interactions(sigma, koopsym.network_action("Z2xZ3"))
    assert ring[0, 1] and not ring[0, 2]
    res, mask = koopsym.block_pattern(np.eye(4, dtype=complex), [2, 2])
    assert np.array_equal(mask, np.eye(2, dtype=bool))


def test_cli_in_process(tmp_path):
    code, _, err = koopsym.run_cli(["simulate", "--out", str(tmp_path / "s.csv"), "--ics", "0"])
    assert code == 2 and "initial_conditions" in err
    code, out, _ = koopsym.run_cli(["noise", "--out", str(tmp_path / "n.json"), "--realizations", "5"])
    assert code == 0
    report = json.loads((tmp_path / "n.json").read_text())
    assert report["format_version"] == 1 and report["stderr_defined"]
