"""Probabilists' Hermite polynomials and Hermite expansions of transforms.

A centered transform F is written F = sum_{m>=1} c_m / m! * H_m with
c_m = E[F(Z) H_m(Z)], Z standard Gaussian.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .convolve import get_order

DEFAULT_ORDER = 12
DEFAULT_NODES = 128
SPARSITY_RTOL = 1e-12
QUAD_RTOL = 1e-8
# coefficients below this fraction of the largest are compared in absolute terms
QUAD_FLOOR = 1e-6


class QuadratureWarning(RuntimeWarning):
    pass


def hermite_eval(m: int, x):
    """H_m(x) by the recurrence H_{j+1} = x H_j - j H_{j-1}."""
    if m < 0:
        raise ValueError("Hermite order must be >= 0")
    x = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(x), x.copy()
    if m == 0:
        return prev if prev.ndim else float(prev)
    for j in range(1, m):
        prev, cur = cur, x * cur - j * prev
    return cur if cur.ndim else float(cur)


def hermite_table(M: int, x) -> np.ndarray:
    """Stack of H_0..H_M evaluated at ``x``; shape ``(M + 1, *x.shape)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((M + 1,) + x.shape)
    out[0] = 1.0
    if M >= 1:
        out[1] = x
    for j in range(1, M):
        out[j + 1] = x * out[j] - j * out[j - 1]
    return out


# --- transforms -------------------------------------------------------------

@dataclass(frozen=True)
class HermiteTransform:
    m: int

    @property
    def degree(self) -> int:
        return self.m

    def __call__(self, x):
        return hermite_eval(self.m, x)

    def label(self) -> str:
        return f"hermite:{self.m}"


@dataclass(frozen=True)
class PolynomialTransform:
    """F(x) = a0 + a1 x + a2 x^2 + ..."""
    coeffs: tuple

    @property
    def degree(self) -> int:
        nz = [i for i, a in enumerate(self.coeffs) if a != 0]
        return nz[-1] if nz else 0

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, np.asarray(self.coeffs, dtype=float))

    def label(self) -> str:
        return "poly:" + ",".join(repr(float(a)) for a in self.coeffs)


@dataclass(frozen=True)
class PointwiseTransform:
    """Any real function evaluable on arrays; must lie in L^2 of the Gaussian weight."""
    func: Callable = field(compare=False)
    name: str = "pointwise"

    degree = None

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def label(self) -> str:
        return self.name


Transform = HermiteTransform | PolynomialTransform | PointwiseTransform

NAMED = {
    "square": PolynomialTransform((-1.0, 0.0, 1.0)),
    "cube": PolynomialTransform((0.0, 0.0, 0.0, 1.0)),
}


def parse_transform(text: str):
    """Parse ``hermite:m``, ``poly:a0,a1,...``, ``square`` or ``cube``."""
    text = text.strip()
    if text in NAMED:
        return NAMED[text]
    kind, _, arg = text.partition(":")
    if kind == "hermite":
        m = int(arg)
        if m < 0:
            raise ValueError("hermite order must be >= 0")
        return HermiteTransform(m)
    if kind == "poly":
        coeffs = tuple(float(a) for a in arg.split(",") if a.strip())
        if not coeffs:
            raise ValueError("poly transform needs at least one coefficient")
        return PolynomialTransform(coeffs)
    raise ValueError(f"unrecognized transform {text!r} (use hermite:m, poly:a0,a1,..., square, cube)")


# --- expansions -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HermiteExpansion:
    """Coefficients c_1..c_M; ``coeffs[m]`` holds c_m and ``coeffs[0]`` is 0."""
    coeffs: np.ndarray
    converged: bool = True
    exact: bool = True

    @property
    def max_order(self) -> int:
        return len(self.coeffs) - 1

    def c(self, m: int) -> float:
        return float(self.coeffs[m]) if 0 <= m < len(self.coeffs) else 0.0

    def orders(self) -> list:
        return [m for m in range(1, len(self.coeffs)) if self.coeffs[m] != 0]

    def norm_sq(self) -> float:
        """sum c_m^2 / m!, the variance E[F(Z)^2] of the truncated expansion."""
        return sum(self.coeffs[m] ** 2 / math.factorial(m) for m in range(1, len(self.coeffs)))

    def __call__(self, x):
        H = hermite_table(self.max_order, x)
        return sum(self.coeffs[m] / math.factorial(m) * H[m] for m in range(1, len(self.coeffs)))


def monomial_to_hermite(coeffs) -> np.ndarray:
    """Coefficients b with sum_j a_j x^j = sum_m b_m H_m(x).

    Builds x^j in the Hermite basis from x * H_m = H_{m+1} + m H_{m-1}.
    """
    a = np.asarray(coeffs, dtype=float)
    deg = len(a) - 1
    out = np.zeros(deg + 1)
    power = np.zeros(deg + 1)  # x^j in Hermite coordinates
    power[0] = 1.0
    out += a[0] * power
    for j in range(1, deg + 1):
        nxt = np.zeros(deg + 1)
        for m in range(j):
            if power[m] == 0:
                continue
            nxt[m + 1] += power[m]
            if m >= 1:
                nxt[m - 1] += m * power[m]
        power = nxt
        out += a[j] * power
    return out


def _sparsify(c: np.ndarray) -> np.ndarray:
    c = c.copy()
    c[0] = 0.0
    peak = np.abs(c).max(initial=0.0)
    c[np.abs(c) < SPARSITY_RTOL * peak] = 0.0
    return c


def _quadrature_coeffs(F, M: int, nodes: int) -> np.ndarray:
    # E[g(Z)] = pi^{-1/2} sum_i w_i g(sqrt(2) x_i) for Gauss-Hermite nodes of weight e^{-x^2}
    x, w = np.polynomial.hermite.hermgauss(nodes)
    z = np.sqrt(2.0) * x
    fz = F(z)
    H = hermite_table(M, z)
    return H @ (w * fz) / np.sqrt(np.pi)


def expand(transform, M: int = DEFAULT_ORDER, nodes: int = DEFAULT_NODES) -> HermiteExpansion:
    """Hermite coefficients c_1..c_M of the centered transform."""
    if M < 1:
        raise ValueError("truncation order must be >= 1")
    if isinstance(transform, HermiteTransform):
        c = np.zeros(M + 1)
        if 1 <= transform.m <= M:
            c[transform.m] = math.factorial(transform.m)
        return HermiteExpansion(c)
    if isinstance(transform, PolynomialTransform):
        b = monomial_to_hermite(transform.coeffs)
        c = np.zeros(M + 1)
        n = min(len(b), M + 1)
        c[:n] = [b[m] * math.factorial(m) for m in range(n)]
        return HermiteExpansion(_sparsify(c))
    c = _quadrature_coeffs(transform, M, nodes)
    c2 = _quadrature_coeffs(transform, M, 2 * nodes)
    scale = np.maximum(np.abs(c2), np.abs(c2).max(initial=0.0) * QUAD_FLOOR)
    shift = np.abs(c - c2)[1:] / np.where(scale[1:] > 0, scale[1:], 1.0)
    converged = bool(np.all(shift <= QUAD_RTOL))
    if not converged:
        warnings.warn(f"Hermite quadrature did not converge for {transform.label()} "
                      f"(max relative shift {shift.max():.2e} on doubling nodes)",
                      QuadratureWarning, stacklevel=2)
    return HermiteExpansion(_sparsify(c2), converged=converged, exact=False)


def reconstruct_polynomial(expansion: HermiteExpansion) -> np.ndarray:
    """Monomial coefficients of sum_m c_m/m! H_m."""
    M = expansion.max_order
    out = np.zeros(M + 1)
    for m in range(1, M + 1):
        if expansion.coeffs[m] != 0:
            hm = np.polynomial.hermite_e.herme2poly(np.eye(M + 1)[m])
            out[:len(hm)] += expansion.coeffs[m] / math.factorial(m) * hm
    return out


def variance_subordinated(expansion: HermiteExpansion, powers, k) -> float:
    """E|ã_k(F)|^2 = sum_m c_m^2/m! C^_{k,m} for a unit-variance Gaussian layer."""
    total = 0.0
    for m in expansion.orders():
        total += expansion.c(m) ** 2 / math.factorial(m) * get_order(powers, m)[k]
    return total
