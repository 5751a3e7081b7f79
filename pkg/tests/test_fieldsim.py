import math
import warnings

import numpy as np
import pytest

from hfclt.convolve import BudgetError, convolve_power
from hfclt.fieldsim import (AliasingWarning, CoefficientDraw, default_grid, draw_coefficients,
                            mc_moments, replication_rng, simulate_coefficients,
                            subordinated_coefficients, synthesize)
from hfclt.hermite import HermiteTransform, PointwiseTransform, PolynomialTransform
from hfclt.spectrum import LatticeBox, algebraic, exponential


def _mirror(values):
    return values[(slice(None, None, -1),) * values.ndim]


@pytest.mark.parametrize("s", [exponential(0.5, 6), algebraic(2.0, 3, dim=2)])
def test_draw_conjugate_symmetry(s):
    for r in range(5):
        a = draw_coefficients(s, replication_rng(7, r)).values
        assert np.array_equal(_mirror(a), np.conj(a))
        assert a[(s.cutoff,) * s.dim] == 0  # C_0 = 0


def test_synthesize_two_term():
    box = LatticeBox(1, 1)
    a = np.array([(1 + 1j) / 2, 0, (1 - 1j) / 2])
    T = synthesize(CoefficientDraw(box, a), 8).grid
    theta = 2 * np.pi * np.arange(8) / 8
    np.testing.assert_allclose(T, np.cos(theta) + np.sin(theta), atol=1e-15)


def test_synthesize_zero_and_small_grid():
    box = LatticeBox(1, 3)
    assert not np.any(synthesize(CoefficientDraw(box, np.zeros(7, complex)), 9).grid)
    with pytest.raises(ValueError):
        synthesize(CoefficientDraw(box, np.zeros(7, complex)), 6)


def test_synthesize_rejects_nonreal():
    box = LatticeBox(1, 1)
    with pytest.raises(FloatingPointError):
        synthesize(CoefficientDraw(box, np.array([0, 0, 1.0 + 0j])), 4)


def test_h1_roundtrip():
    s = algebraic(2.0, 5, dim=2)
    draw = draw_coefficients(s, replication_rng(3, 0))
    sample = synthesize(draw, 11)
    freqs = [tuple(k) for k in s.box.coords().reshape(-1, 2).tolist()]
    got = subordinated_coefficients(sample, HermiteTransform(1), freqs)
    np.testing.assert_allclose(got, draw.values.ravel(), atol=1e-14)


def test_h2_two_point_by_hand(two_point):
    draw = draw_coefficients(two_point, replication_rng(11, 0))
    a1 = draw.values[2]
    sample = synthesize(draw, default_grid(1, 2))
    got = subordinated_coefficients(sample, HermiteTransform(2), [2, -2, 0])
    assert got[0] == pytest.approx(a1 ** 2, abs=1e-15)
    assert got[1] == pytest.approx(np.conj(a1) ** 2, abs=1e-15)
    assert got[2] == pytest.approx(2 * abs(a1) ** 2 - 1, abs=1e-15)


def test_grid_independence():
    s = exponential(0.5, 6)
    draw = draw_coefficients(s, replication_rng(5, 2))
    F = PolynomialTransform((0.3, -1.0, 0.5, 2.0))
    freqs = list(range(-18, 19))
    a = subordinated_coefficients(synthesize(draw, 37), F, freqs)
    b = subordinated_coefficients(synthesize(draw, 64), F, freqs)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-10 * np.abs(a).max())
    np.testing.assert_array_equal(a[::-1], np.conj(a))


def test_aliasing_warnings():
    s = exponential(0.5, 4)
    sample = synthesize(draw_coefficients(s, replication_rng(0, 0)), 9)
    with pytest.warns(AliasingWarning):
        subordinated_coefficients(sample, HermiteTransform(2), [1])
    with pytest.warns(AliasingWarning):
        subordinated_coefficients(sample, PointwiseTransform(np.tanh), [1])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        subordinated_coefficients(sample, HermiteTransform(1), [1])


def test_coefficient_variance(two_point):
    rep = mc_moments(two_point, [1], orders=[1], reps=100_000, seed=1)
    est = rep.get(1, 1, "abs2")
    assert abs(est.estimate - 0.5) <= 5 * est.stderr
    reim = rep.get(1, 1, "reim")
    assert abs(reim.estimate) <= 5 * reim.stderr


def test_grid_variance_parseval():
    s = exponential(0.5, 6)
    G = 13
    vals = np.array([synthesize(draw_coefficients(s, replication_rng(9, r)), G).grid
                     for r in range(10_000)])
    x = vals[:, 0] ** 2
    assert abs(x.mean() - s.total) <= 5 * x.std(ddof=1) / np.sqrt(x.size)


def test_reproducible_across_workers():
    s = exponential(0.5, 8)
    args = dict(freqs=[4, 8], orders=(1, 2, 3), reps=1200, seed=42)
    a = mc_moments(s, workers=1, **args)
    b = mc_moments(s, workers=3, **args)
    assert a.to_csv() == b.to_csv()
    c = simulate_coefficients(s.normalized(), [(4,)], [2], 700, 42, 64)
    d = simulate_coefficients(s.normalized(), [(4,)], [2], 1200, 42, 64)
    np.testing.assert_array_equal(c, d[:700])


def test_variance_identity_and_orthogonality():
    s = algebraic(2.0, 8)
    freqs = [1, 3, 5, 7, 8]
    rep = mc_moments(s, freqs, orders=(1, 2, 3), reps=4000, seed=3)
    for k in freqs:
        for m in (1, 2, 3):
            r = rep.get(k, m, "abs2_ratio")
            assert abs(r.estimate - 1) <= 5 * r.stderr
            reim = rep.get(k, m, "reim")
            assert abs(reim.estimate) <= 5 * reim.stderr
        for name in ("cross_re", "cross_im"):
            c = rep.get(k, "2,3", name)
            assert abs(c.estimate) <= 5 * c.stderr


def test_first_order_fourth_moment():
    s = exponential(0.5, 8)
    rep = mc_moments(s, [2, 5], orders=[1], reps=20_000, seed=8)
    for k in (2, 5):
        for stat in ("re4", "im4"):
            e = rep.get(k, 1, stat)
            assert abs(e.estimate - 0.75) <= 5 * e.stderr


def test_transform_variance_matches_expansion():
    s = exponential(0.5, 6).normalized()
    powers = convolve_power(s, 3)
    rep = mc_moments(s, [4], orders=[1], reps=6000, seed=5,
                     transform=PolynomialTransform((0, 0, 0, 1.0)))
    e = rep.get(4, "F", "abs2")
    expect = 9 * powers[0][4] + 6 * powers[2][4]
    assert abs(e.estimate - expect) <= 5 * e.stderr


def test_csv_layout():
    rep = mc_moments(exponential(0.5, 4), [2], orders=[1, 2], reps=50, seed=0)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "freq,order,stat,estimate,stderr,reps"
    assert all(l.split(",")[-1] == "50" for l in lines[1:])


def test_guards():
    s = exponential(0.5, 4)
    with pytest.raises(ValueError):
        mc_moments(s, [1], reps=1)
    with pytest.raises(ValueError):
        mc_moments(s, [1], orders=[0])
    with pytest.raises(ValueError):
        mc_moments(s, [1], G=5)
    with pytest.raises(BudgetError):
        mc_moments(algebraic(2.0, 1000), [1], reps=10**8)
    with pytest.warns(AliasingWarning):
        mc_moments(s, [1], orders=[3], reps=10, G=12)
