import math

import numpy as np
import pytest

import hslift


def psi1(t):
    return np.exp(-t * t) * (1.5 - t * t) / math.sqrt(math.pi)


def test_basis_shape():
    b = hslift.Basis(2, 3)
    assert len(b) == math.comb(5, 2)
    assert b.dim == 2 and b.max_degree == 3
    for r in range(len(b)):
        assert b.rank(b.index(r)) == r


def test_hermite_functions_orthonormal():
    x = np.linspace(-12.0, 12.0, 4001)
    h = np.array([hslift.hermite_functions(8, float(t)) for t in x])
    gram = np.trapezoid(h[:, :, None] * h[:, None, :], x, axis=0)
    assert np.abs(gram - np.eye(9)).max() < 1e-8


def test_expand_matches_named_vector():
    b = hslift.Basis(1, 64)
    v = hslift.expand(lambda x: float(psi1(x[0])), b, 1.0)
    w = hslift.named_vector("psi1", b, 1.0)
    assert np.abs(np.asarray(v.coeffs) - np.asarray(w.coeffs)).max() < 1e-10
    assert v.tag == 1.0
    # p = 0 norm is the L2 norm
    x = np.linspace(-10.0, 10.0, 20001)
    l2 = math.sqrt(np.trapezoid(psi1(x) ** 2, x))
    assert v.norm(0.0) == pytest.approx(l2, rel=1e-8)
    assert hslift.reconstruct(v, [0.7]) == pytest.approx(float(psi1(0.7)), abs=1e-9)


def test_operators_skew_and_symmetric():
    b = hslift.Basis(1, 20)
    d = np.asarray(hslift.derivative_matrix(b, 0))
    m = np.asarray(hslift.multiplication_matrix(b, 0))
    assert np.abs(d + d.T).max() < 1e-14
    assert np.abs(m - m.T).max() < 1e-14


def test_translation_is_orthogonal():
    b = hslift.Basis(1, 30)
    t = np.asarray(hslift.translation_matrix([0.8], b))
    assert np.abs(t.T @ t - np.eye(len(b))).max() < 1e-10


def test_quartic_drift_and_set_c():
    b = hslift.Basis(1, 96)
    psi = hslift.named_vector("psi1", b, 2.0)
    for x in (-1.3, 0.0, 1.0):
        assert hslift.b_bar("quartic", psi, 2.0, [x])[0] == pytest.approx(-(x ** 3), abs=1e-8)
    check = hslift.set_c_check("quartic", psi)
    assert check["member"]
    assert check["max_residual"] < 1e-10


def test_tag_mismatch_raises():
    b = hslift.Basis(1, 10)
    with pytest.raises(hslift.TagMismatch):
        hslift.pairing(hslift.named_vector("psi1", b, -2.0), hslift.named_vector("psi1", b, 1.0))


def test_quartic_law():
    x = np.linspace(-6.0, 6.0, 24001)
    dens = np.array([hslift.quartic_density(float(t)) for t in x])
    assert np.trapezoid(dens, x) == pytest.approx(1.0, abs=1e-8)
    assert hslift.quartic_cdf(0.0) == pytest.approx(0.5, abs=1e-14)
    left = np.linspace(-6.0, 0.9, 13801)
    mass = np.trapezoid([hslift.quartic_density(float(t)) for t in left], left)
    assert hslift.quartic_cdf(0.9) == pytest.approx(mass, abs=1e-7)
    a = hslift.sample_quartic(4000, 3)
    c = hslift.sample_quartic(4000, 4)
    assert hslift.ks_two_sample(a, c) < 0.05


def test_selftest_quick_passes():
    checks = hslift.selftest(True, 1)
    assert checks and all(c["pass"] for c in checks)


def test_correspondence_small():
    r = hslift.correspondence(paths=4, halvings=1)
    assert len(r["levels"]) == 2
    assert all(level["mean_error"] < 0.05 for level in r["levels"])
