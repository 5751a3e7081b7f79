"""Finite-frequency diagnostics for the high-frequency CLT of Hermite coefficients.

For a frequency k, order m and split q, the terms
``t(lam) = C^_{lam,q} C^_{k-lam,m-q}`` sum to C^_{k,m}. The CLT for
ã_k(H_m) holds along a frequency sequence iff, for every q, either

* the contraction sum  sum t(lam)^2 / C^_{k,m}^2  tends to 0, or
* the concentration ratio  max t(lam) / sum t(lam)  tends to 0.

The ratio is also the largest hitting probability of a random-walk bridge
pinned at k after m steps, which is computed here by a separate route.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .convolve import get_order, pair_terms
from .spectrum import as_point


class UnachievableFrequency(ValueError):
    """The frequency cannot be reached by any m-step path of the spectrum's support."""


class SpectralUnderflow(FloatingPointError):
    """The frequency is reachable but every term underflowed to zero in float64."""


@dataclass(frozen=True)
class SplitRow:
    q: int
    cond2_sum: float
    cond3_ratio: float


@dataclass(frozen=True)
class CltDiagnostic:
    freq: tuple
    order: int
    rows: tuple
    variance: float

    @property
    def max_cond2(self) -> float:
        return max((r.cond2_sum for r in self.rows), default=0.0)

    @property
    def max_cond3(self) -> float:
        return max((r.cond3_ratio for r in self.rows), default=0.0)


@dataclass
class BridgeDistribution:
    order: int
    endpoint: tuple
    step: int
    points: np.ndarray  # (n_support, dim) lattice points lam with positive probability
    probs: np.ndarray

    def as_dict(self) -> dict:
        if self.points.shape[1] == 1:
            return {int(p[0]): float(v) for p, v in zip(self.points, self.probs)}
        return {tuple(int(c) for c in p): float(v) for p, v in zip(self.points, self.probs)}

    @property
    def max(self) -> float:
        return float(self.probs.max())


def _terms(powers, k, m: int, q: int) -> np.ndarray:
    if not 1 <= q <= m - 1:
        raise ValueError(f"split q={q} must lie in 1..{m - 1}")
    top = get_order(powers, m)
    k = as_point(k, top.dim)
    if not top.reachable(k):
        raise UnachievableFrequency(f"frequency {k} is outside the order-{m} support")
    t = pair_terms(get_order(powers, q), get_order(powers, m - q), k)
    if not np.any(t > 0):
        raise SpectralUnderflow(f"all order-{m} terms at frequency {k} underflow to zero")
    return t


def cond2_sum(powers, k, m: int, q: int) -> float:
    """C^_{k,m}^-2 * sum_lam C^_{lam,q}^2 C^_{k-lam,m-q}^2.

    C^_{k,m} is taken as the sum of the same terms, which equals the stored
    power exactly in exact arithmetic and keeps the estimate consistent when
    the powers came from the FFT path.
    """
    t = _terms(powers, k, m, q)
    total = t.sum()
    return float(np.sum((t / total) ** 2))


def cond3_ratio(powers, k, m: int, q: int) -> float:
    """max_lam t(lam) / sum_mu t(mu), with t the split-q product terms."""
    t = _terms(powers, k, m, q)
    return float(t.max() / t.sum())


def bridge_distribution(powers, k, m: int, q: int) -> BridgeDistribution:
    """Law of Z_q given Z_m = k, for the walk with steps distributed as C / sum(C)."""
    if not 1 <= q <= m - 1:
        raise ValueError(f"split q={q} must lie in 1..{m - 1}")
    base = get_order(powers, 1)
    top = get_order(powers, m)
    k = as_point(k, top.dim)
    c_star = base.values.sum()
    # P[Z_j = x] = C^_{x,j} / C_*^j
    p_end = top[k] / c_star ** m
    if not top.reachable(k):
        raise UnachievableFrequency(f"frequency {k} is outside the order-{m} support")
    if p_end == 0:
        raise SpectralUnderflow(f"P[Z_{m} = {k}] underflows to zero")
    first = get_order(powers, q)
    rest = get_order(powers, m - q)
    coords = first.box.coords().reshape(-1, first.dim)
    p_first = first.values.ravel() / c_star ** q
    keep = p_first > 0
    pts = coords[keep]
    p_rest = np.array([rest[tuple(k_i - l_i for k_i, l_i in zip(k, lam))] for lam in pts])
    p_rest = p_rest / c_star ** (m - q)
    joint = p_first[keep] * p_rest
    mask = joint > 0
    return BridgeDistribution(m, k, q, pts[mask], joint[mask] / p_end)


def diagnose(powers, k, m: int) -> CltDiagnostic:
    top = get_order(powers, m)
    k = as_point(k, top.dim)
    rows = tuple(SplitRow(q, cond2_sum(powers, k, m, q), cond3_ratio(powers, k, m, q))
                 for q in range(1, m))
    return CltDiagnostic(k, m, rows, math.factorial(m) * top[k])


def clt_report(powers, freqs, m: int, workers: int = 1) -> list:
    """One diagnostic per frequency, in input order."""
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(lambda k: diagnose(powers, k, m), freqs))
    return [diagnose(powers, k, m) for k in freqs]


def _fmt_freq(k) -> str:
    return str(k[0]) if len(k) == 1 else " ".join(str(c) for c in k)


def report_csv(diags) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq", "m", "q", "cond2_sum", "cond3_ratio", "variance"])
    for d in diags:
        for r in d.rows:
            w.writerow([_fmt_freq(d.freq), d.order, r.q, repr(r.cond2_sum),
                        repr(r.cond3_ratio), repr(d.variance)])
    return buf.getvalue()


# --- general transforms ------------------------------------------------------

@dataclass
class GeneralTransformReport:
    freqs: list
    orders: list            # orders m with c_m != 0
    ratios: list            # ratios[i][j] = m_j! C^_{k_i,m_j} / Var_i
    sigma_sq_f: float       # sum_m (c_m/m!)^2 * ratio at the last frequency
    split_order: int
    tail: float             # sum_{m > p} c_m^2/m! C^_{k,m} at the last frequency
    tail_grid: dict = field(default_factory=dict)  # p -> tail per frequency
    variance: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["freqs"] = [list(k) for k in self.freqs]
        d["tail_grid"] = {str(p): v for p, v in self.tail_grid.items()}
        return d


def general_transform_report(powers, expansion, freqs, max_order: int | None = None,
                             split_order: int | None = None) -> GeneralTransformReport:
    """Variance and order-mixing diagnostics for ã_k(F) with F given by its Hermite expansion."""
    M = expansion.max_order if max_order is None else min(max_order, expansion.max_order)
    orders = [m for m in range(1, M + 1) if expansion.c(m) != 0]
    if not orders:
        raise ValueError("expansion has no nonzero coefficient up to the requested order")
    for m in orders:
        get_order(powers, m)
    p = orders[-1] if split_order is None else split_order
    dim = get_order(powers, 1).dim
    freqs = [as_point(k, dim) for k in freqs]

    def weighted(k, m):
        return expansion.c(m) ** 2 / math.factorial(m) * get_order(powers, m)[k]

    variance, ratios, tail_grid = [], [], {}
    for k in freqs:
        var = sum(weighted(k, m) for m in orders)
        if var == 0:
            raise UnachievableFrequency(f"Var ã_{k}(F) is zero")
        variance.append(var)
        ratios.append([math.factorial(m) * get_order(powers, m)[k] / var for m in orders])
    for split in range(0, M + 1):
        tail_grid[split] = [sum(weighted(k, m) for m in orders if m > split) for k in freqs]
    sigma_sq = sum((expansion.c(m) / math.factorial(m)) ** 2 * r
                   for m, r in zip(orders, ratios[-1]))
    tail = sum(weighted(freqs[-1], m) for m in orders if m > p)
    return GeneralTransformReport(freqs, orders, ratios, sigma_sq, p, tail, tail_grid, variance)
