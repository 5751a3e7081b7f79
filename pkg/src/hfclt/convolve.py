"""Convolution powers of a lattice spectrum.

The order-m power is the m-fold additive convolution of C with itself; it
lives on the box of cutoff m*K. Two interchangeable paths compute a pairwise
convolution: an exact shift-and-add direct sum (the oracle) and a zero-padded
FFT.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from .spectrum import LatticeBox, Spectrum, as_point

FFT_THRESHOLD = 10_000  # output box size above which "auto" picks the FFT path
DEFAULT_MAX_POINTS = 50_000_000
DEFAULT_MAX_ORDER = 64
# FFT round-off on nonnegative data: negatives below this fraction of the peak are clamped
FFT_CLAMP_RTOL = 1e-12


class BudgetError(MemoryError):
    """A requested box or tensor exceeds the configured size budget."""


@dataclass(frozen=True, eq=False)
class ConvolvedSpectrum:
    order: int
    base_cutoff: int
    values: np.ndarray
    support: np.ndarray | None = None  # structural nonzero pattern (independent of underflow)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        dim = vals.ndim
        box = LatticeBox(dim, self.order * self.base_cutoff)
        if vals.shape != box.shape:
            raise ValueError(f"values shape {vals.shape} does not match order-{self.order} box")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        sup = vals > 0 if self.support is None else np.asarray(self.support, dtype=bool)
        sup.setflags(write=False)
        object.__setattr__(self, "support", sup)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def box(self) -> LatticeBox:
        return LatticeBox(self.dim, self.order * self.base_cutoff)

    @property
    def cutoff(self) -> int:
        return self.order * self.base_cutoff

    def __getitem__(self, k) -> float:
        k = as_point(k, self.dim)
        if not self.box.contains(k):
            return 0.0
        return float(self.values[self.box.index(k)])

    def reachable(self, k) -> bool:
        """True when some m-step path of nonzero spectrum entries ends at k."""
        k = as_point(k, self.dim)
        return self.box.contains(k) and bool(self.support[self.box.index(k)])

    @classmethod
    def from_spectrum(cls, s: Spectrum) -> "ConvolvedSpectrum":
        return cls(1, s.cutoff, s.values, s.values > 0)

    # --- cache dump -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {"dim": self.dim, "base_cutoff": self.base_cutoff, "order": self.order,
                "values": self.values.ravel().tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ConvolvedSpectrum":
        dim, K, m = int(d["dim"]), int(d["base_cutoff"]), int(d["order"])
        shape = LatticeBox(dim, m * K).shape
        return cls(m, K, np.asarray(d["values"], dtype=float).reshape(shape))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "ConvolvedSpectrum":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _direct(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full linear convolution by explicit shift-and-add over the nonzeros of ``a``."""
    out_shape = tuple(x + y - 1 for x, y in zip(a.shape, b.shape))
    out = np.zeros(out_shape)
    for idx in zip(*np.nonzero(a)):
        sl = tuple(slice(i, i + n) for i, n in zip(idx, b.shape))
        out[sl] += a[idx] * b
    return out


def _fft(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out_shape = tuple(x + y - 1 for x, y in zip(a.shape, b.shape))
    fshape = [sfft.next_fast_len(n, real=True) for n in out_shape]
    axes = tuple(range(a.ndim))
    spec = sfft.rfftn(a, fshape, axes=axes) * sfft.rfftn(b, fshape, axes=axes)
    out = sfft.irfftn(spec, fshape, axes=axes)[tuple(slice(0, n) for n in out_shape)]
    peak = out.max(initial=0.0)
    neg = out < 0
    if np.any(out[neg] < -FFT_CLAMP_RTOL * peak):
        raise FloatingPointError("FFT convolution produced negatives beyond round-off level")
    out[neg] = 0.0
    return out


def _symmetrize(x: np.ndarray) -> np.ndarray:
    # the true power is even; (x + flip x)/2 is exactly even in IEEE arithmetic
    return 0.5 * (x + x[(slice(None, None, -1),) * x.ndim])


def convolve_pair(a: ConvolvedSpectrum, b: ConvolvedSpectrum, method: str = "auto",
                  max_order: int = DEFAULT_MAX_ORDER,
                  max_points: int = DEFAULT_MAX_POINTS) -> ConvolvedSpectrum:
    """Order-(p+q) power from powers of orders p and q of the same base spectrum."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.base_cutoff != b.base_cutoff:
        raise ValueError("powers derive from spectra with different cutoffs")
    m = a.order + b.order
    if m > max_order:
        raise BudgetError(f"order {m} exceeds the configured maximum {max_order}")
    box = LatticeBox(a.dim, m * a.base_cutoff)
    if box.size > max_points:
        raise BudgetError(f"order-{m} box has {box.size} points (budget {max_points})")
    if method == "auto":
        method = "fft" if box.size > FFT_THRESHOLD else "direct"
    if method == "direct":
        vals = _direct(a.values, b.values)
    elif method == "fft":
        vals = _fft(a.values, b.values)
    else:
        raise ValueError(f"unknown method {method!r}")
    support = _fft(a.support.astype(float), b.support.astype(float)) > 0.5
    return ConvolvedSpectrum(m, a.base_cutoff, _symmetrize(vals), support)


def convolve_power(s: Spectrum, m: int, method: str = "auto",
                   max_points: int = DEFAULT_MAX_POINTS) -> list:
    """Powers of orders 1..m; entry ``j - 1`` has order ``j``."""
    if int(m) != m or m < 1:
        raise ValueError(f"order must be a positive integer, got {m}")
    last = LatticeBox(s.dim, m * s.cutoff)
    if last.size > max_points:
        raise BudgetError(f"order-{m} box has {last.size} points (budget {max_points})")
    base = ConvolvedSpectrum.from_spectrum(s)
    powers = [base]
    for _ in range(1, m):
        powers.append(convolve_pair(powers[-1], base, method=method,
                                    max_order=max(m, DEFAULT_MAX_ORDER), max_points=max_points))
    return powers


def get_order(powers, m: int) -> ConvolvedSpectrum:
    if m < 1 or m > len(powers):
        raise KeyError(f"convolution order {m} not available (have 1..{len(powers)})")
    p = powers[m - 1]
    if p.order != m:
        raise ValueError(f"powers list is out of order: slot {m} holds order {p.order}")
    return p


def pair_terms(a: ConvolvedSpectrum, b: ConvolvedSpectrum, k) -> np.ndarray:
    """Array of a[lam] * b[k - lam] over the box of ``a`` (zero where k - lam leaves b's box).

    Entry ``i`` along each axis corresponds to lam = i - a.cutoff.
    """
    k = as_point(k, a.dim)
    Ka, Kb = a.cutoff, b.cutoff
    out = np.zeros(a.values.shape)
    a_sl, b_sl = [], []
    for c in k:
        # b index j = (c - lam) + Kb with lam = i - Ka  ->  j = c + Ka + Kb - i
        lo = max(0, c + Ka - Kb)
        hi = min(2 * Ka, c + Ka + Kb)
        if lo > hi:
            return out
        a_sl.append(slice(lo, hi + 1))
        top = c + Ka + Kb - lo
        bottom = c + Ka + Kb - hi
        b_sl.append(slice(top, bottom - 1 if bottom > 0 else None, -1))
    a_sl, b_sl = tuple(a_sl), tuple(b_sl)
    out[a_sl] = a.values[a_sl] * b.values[b_sl]
    return out


def recursion_sum(powers, k, m: int, q: int) -> float:
    """sum_mu C^_{mu,q} C^_{k-mu,m-q}, evaluated directly at one lattice point."""
    return float(pair_terms(get_order(powers, q), get_order(powers, m - q), k).sum())


def verify_recursion(powers, k, q: int, m: int | None = None, tiny: float = 1e-300) -> float:
    """Relative residual of the pairwise recursion at ``k`` for split ``q``.

    ``m`` defaults to the highest available order.
    """
    m = len(powers) if m is None else m
    if not 1 <= q <= m - 1:
        raise ValueError(f"split q={q} must lie in 1..{m - 1}")
    target = get_order(powers, m)[k]
    return abs(target - recursion_sum(powers, k, m, q)) / max(target, tiny)
