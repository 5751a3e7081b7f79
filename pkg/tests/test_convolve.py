import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from hfclt.convolve import (BudgetError, ConvolvedSpectrum, convolve_pair, convolve_power,
                            get_order, pair_terms, recursion_sum, verify_recursion)
from hfclt.spectrum import algebraic, exponential, table

from oracles import power_by_loops, power_by_paths


def test_two_point_square(two_point):
    p2 = convolve_power(two_point, 2, method="direct")[1]
    assert p2[0] == 0.5 and p2[2] == 0.25 and p2[-2] == 0.25
    assert p2[1] == 0 and p2[-1] == 0


def test_two_point_cube(two_point):
    p3 = convolve_power(two_point, 3, method="direct")[2]
    assert p3[1] == 0.375 and p3[-1] == 0.375
    assert p3[3] == 0.125 and p3[-3] == 0.125
    assert p3[0] == 0 and p3[2] == 0


def test_recursion_exact_on_two_point(two_point):
    powers = convolve_power(two_point, 2, method="direct")
    assert verify_recursion(powers, 0, 1) == 0.0


@pytest.mark.parametrize("method", ["direct", "fft"])
@pytest.mark.parametrize("s", [algebraic(2.0, 3), exponential(0.5, 2, dim=2, h=(1.0, 1.0))])
def test_against_loop_oracle(s, method):
    powers = convolve_power(s, 3, method=method)
    for m in (2, 3):
        ref = power_by_loops(s, m)
        p = get_order(powers, m)
        peak = max(ref.values())
        for idx in zip(*np.nonzero(np.ones(p.values.shape))):
            k = p.box.point(idx)
            assert abs(p.values[idx] - ref.get(k, 0.0)) <= 1e-13 * peak


def test_against_path_sums():
    s = algebraic(1.5, 2)
    p3 = convolve_power(s, 3, method="direct")[2]
    for k in range(-6, 7):
        assert p3[k] == pytest.approx(power_by_paths(s, 3, (k,)), rel=1e-13, abs=1e-300)


def test_mass_and_symmetry():
    s = exponential(0.3, 5, dim=2)
    powers = convolve_power(s, 4)
    for m, p in enumerate(powers, start=1):
        assert p.values.sum() == pytest.approx(s.total ** m, rel=1e-12)
        assert np.array_equal(p.values, p.values[::-1, ::-1])
        assert np.all(p.values >= 0)


def test_auto_switches_to_fft_and_agrees():
    s = algebraic(2.0, 200)
    a = convolve_power(s, 2, method="auto")[1]
    b = convolve_power(s, 2, method="direct")[1]
    assert np.max(np.abs(a.values - b.values)) <= 1e-13 * b.values.max()


def test_pair_terms_matches_loop():
    s = algebraic(2.0, 4, dim=2)
    powers = convolve_power(s, 3, method="direct")
    a, b = get_order(powers, 1), get_order(powers, 2)
    for k in [(0, 0), (3, -2), (7, 5), (12, 12), (-10, 1)]:
        t = pair_terms(a, b, k)
        ref = sum(s[lam] * b[(k[0] - lam[0], k[1] - lam[1])]
                  for lam in map(tuple, s.box.coords().reshape(-1, 2).tolist()))
        assert t.sum() == pytest.approx(ref, rel=1e-13, abs=1e-300)


def test_pair_terms_far_frequency_is_zero():
    powers = convolve_power(algebraic(2.0, 3), 2, method="direct")
    assert not np.any(pair_terms(powers[0], powers[0], 7))
    assert recursion_sum(powers, 6, 2, 1) == pytest.approx(powers[1][6])


def test_support_tracks_reachability_under_underflow():
    s = exponential(400.0, 4)  # C_k underflows for |k| >= 2
    powers = convolve_power(s, 2, method="direct")
    assert powers[1].reachable(2)
    assert not powers[1].reachable(9)


def test_budget_guard():
    with pytest.raises(BudgetError):
        convolve_power(algebraic(2.0, 1000, dim=2), 4, max_points=10**6)
    p = ConvolvedSpectrum.from_spectrum(algebraic(2.0, 3))
    with pytest.raises(BudgetError):
        convolve_pair(p, p, max_order=1)


def test_bad_inputs():
    s = algebraic(2.0, 3)
    with pytest.raises(ValueError):
        convolve_power(s, 0)
    with pytest.raises(ValueError):
        convolve_power(s, 2, method="magic")
    powers = convolve_power(s, 2)
    with pytest.raises(KeyError):
        get_order(powers, 3)
    with pytest.raises(ValueError):
        convolve_pair(powers[0], ConvolvedSpectrum.from_spectrum(algebraic(2.0, 4)))


def test_cache_roundtrip(tmp_path):
    p = convolve_power(exponential(0.5, 3, dim=2), 2)[1]
    p.save(tmp_path / "c.json")
    q = ConvolvedSpectrum.load(tmp_path / "c.json")
    assert np.array_equal(p.values, q.values) and q.order == 2


@st.composite
def random_spectra(draw, max_cutoff=6, max_dim=2):
    dim = draw(st.integers(1, max_dim))
    K = draw(st.integers(1, max_cutoff if dim == 1 else 3))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    v = rng.exponential(size=(2 * K + 1,) * dim)
    v[rng.random(v.shape) < 0.3] = 0.0
    v = 0.5 * (v + v[(slice(None, None, -1),) * dim])
    assume(v.sum() > 0)
    return table(v.ravel(), dim=dim)


@given(s=random_spectra(), m=st.integers(2, 4))
def test_recursion_property(s, m):
    powers = convolve_power(s, m, method="direct")
    top = get_order(powers, m)
    peak = top.values.max()
    for idx in zip(*np.nonzero(top.values > 1e-9 * peak)):
        k = top.box.point(idx)
        for q in range(1, m):
            assert verify_recursion(powers, k, q) <= 1e-12


@given(s=random_spectra(), m=st.integers(2, 4))
def test_fft_matches_direct_property(s, m):
    d = get_order(convolve_power(s, m, method="direct"), m).values
    f = get_order(convolve_power(s, m, method="fft"), m).values
    assert np.max(np.abs(f - d)) <= 1e-12 * d.max()
