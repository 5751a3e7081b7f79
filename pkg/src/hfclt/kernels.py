"""Wiener-chaos kernel algebra over a finite atomic measure space.

Kernels are dense complex tensors of shape ``(N,) * d``. Inner products and
contractions integrate against the atom weights, so every identity reduces to
a finite sum that can be checked exactly up to round-off. This stands in for
the non-atomic measure space of the chaos theory only as far as the
deterministic kernel identities go.
"""
from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass

import numpy as np

from .convolve import BudgetError, convolve_power, get_order, pair_terms
from .spectrum import Spectrum, is_positive

MAX_ENTRIES = 2 ** 24


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0 or not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise ValueError("atom weights must be finite and strictly positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_atoms(self) -> int:
        return self.weights.size

    @classmethod
    def uniform(cls, n: int, weight: float = 1.0) -> "AtomicMeasure":
        return cls(np.full(n, float(weight)))

    def same_as(self, other: "AtomicMeasure") -> bool:
        return self is other or np.array_equal(self.weights, other.weights)


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    values: np.ndarray
    measure: AtomicMeasure

    def __post_init__(self):
        v = np.asarray(self.values)
        if not np.iscomplexobj(v):
            v = v.astype(float)
        N = self.measure.n_atoms
        if v.ndim < 1 or any(s != N for s in v.shape):
            raise ValueError(f"kernel shape {v.shape} does not match {N} atoms")
        object.__setattr__(self, "values", v)

    @property
    def order(self) -> int:
        return self.values.ndim

    def conj(self) -> "DiscreteKernel":
        return DiscreteKernel(np.conj(self.values), self.measure)

    @property
    def real(self) -> "DiscreteKernel":
        return DiscreteKernel(self.values.real.copy(), self.measure)

    @property
    def imag(self) -> "DiscreteKernel":
        return DiscreteKernel(self.values.imag.copy(), self.measure)

    def scaled(self, c) -> "DiscreteKernel":
        return DiscreteKernel(self.values * c, self.measure)

    def is_symmetric(self, atol: float = 0.0) -> bool:
        for perm in itertools.permutations(range(self.order)):
            if not np.allclose(self.values, self.values.transpose(perm), rtol=0, atol=atol):
                return False
        return True


def _weight_tensor(w: np.ndarray, d: int) -> np.ndarray:
    out = np.ones(())
    for _ in range(d):
        out = np.multiply.outer(out, w)
    return out


def inner(f: DiscreteKernel, g: DiscreteKernel) -> complex:
    """(f, g) = sum f * conj(g) * prod mu."""
    if f.order != g.order or not f.measure.same_as(g.measure):
        raise ValueError("inner product needs kernels of equal order on the same measure")
    return complex(np.sum(f.values * np.conj(g.values) * _weight_tensor(f.measure.weights, f.order)))


def kernel_norm(f: DiscreteKernel) -> float:
    """Plain L^2 norm; the chaos isometry multiplies its square by d!."""
    w = _weight_tensor(f.measure.weights, f.order)
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2 * w)))


def contract(f: DiscreteKernel, g: DiscreteKernel, q: int) -> DiscreteKernel:
    """Contraction f (x)_q g: pair the first q arguments of f and g against the measure.

    The result has order d_f + d_g - 2q with f's free arguments first; it is
    generally not symmetric.
    """
    if not f.measure.same_as(g.measure):
        raise ValueError("contraction needs kernels on the same measure")
    if not 1 <= q <= min(f.order, g.order) - 1:
        raise ValueError(f"contraction index q={q} out of range 1..{min(f.order, g.order) - 1}")
    out_order = f.order + g.order - 2 * q
    N = f.measure.n_atoms
    if N ** out_order > MAX_ENTRIES:
        raise BudgetError(f"contraction would hold {N ** out_order} entries (budget {MAX_ENTRIES})")
    letters = string.ascii_letters
    shared = letters[:q]
    free_f = letters[q:f.order]
    free_g = letters[f.order:f.order + g.order - q]
    w = _weight_tensor(f.measure.weights, q)
    spec = f"{shared}{free_f},{shared}{free_g},{shared}->{free_f}{free_g}"
    return DiscreteKernel(np.einsum(spec, f.values, g.values, w, optimize=True), f.measure)


def contract_by_parts(g1: DiscreteKernel, g2: DiscreteKernel, q: int) -> DiscreteKernel:
    """Complex contraction assembled from real and imaginary parts.

    a1 (x)_q a2 - b1 (x)_q b2 + i (a1 (x)_q b2 + b1 (x)_q a2)
    """
    a1, b1, a2, b2 = g1.real, g1.imag, g2.real, g2.imag
    re = contract(a1, a2, q).values - contract(b1, b2, q).values
    im = contract(a1, b2, q).values + contract(b1, a2, q).values
    return DiscreteKernel(re + 1j * im, g1.measure)


def symmetrize(f: DiscreteKernel) -> DiscreteKernel:
    """Average over all argument permutations."""
    perms = list(itertools.permutations(range(f.order)))
    acc = sum(f.values.transpose(p) for p in perms)
    return DiscreteKernel(acc / len(perms), f.measure)


def tensor_power(h: DiscreteKernel, m: int) -> DiscreteKernel:
    if h.order != 1:
        raise ValueError("tensor power is defined here for order-1 kernels")
    v = np.ones(())
    for _ in range(m):
        v = np.multiply.outer(v, h.values)
    return DiscreteKernel(v, h.measure)


def random_symmetric_kernel(rng: np.random.Generator, n_atoms: int, order: int,
                            complex_valued: bool = True, measure: AtomicMeasure | None = None
                            ) -> DiscreteKernel:
    measure = measure or AtomicMeasure.uniform(n_atoms)
    shape = (n_atoms,) * order
    v = rng.standard_normal(shape)
    if complex_valued:
        v = v + 1j * rng.standard_normal(shape)
    return symmetrize(DiscreteKernel(v, measure))


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float  # ||g (x)_q conj(g)||^2
    rhs: float  # ||g (x)_q g||^2
    holds: bool


def check_complex_inequality(g: DiscreteKernel, q: int, slack: float = 1e-12) -> InequalityCheck:
    """Check ||g (x)_q conj g||^2 >= ||g (x)_q g||^2 (relative slack for round-off)."""
    lhs = kernel_norm(contract(g, g.conj(), q)) ** 2
    rhs = kernel_norm(contract(g, g, q)) ** 2
    return InequalityCheck(lhs, rhs, lhs >= rhs - slack * max(lhs, rhs, 1e-300))


# --- spectral kernels -------------------------------------------------------

def spectral_basis(s: Spectrum) -> tuple:
    """Order-1 kernels f_sigma for every lattice point of the box, plus the atom measure.

    One atom per lattice point, unit weights. For sigma positive (lexicographic)
    with atom j and -sigma with atom j',
    f_sigma = sqrt(C/2) (e_j + i e_j'), f_{-sigma} = conj(f_sigma), and
    f_0 = sqrt(C_0) e_0, so that ||f_sigma||^2 = C_sigma.
    Returns ``(F, measure, coords)`` with ``F[p]`` the values of f at point p.
    """
    coords = s.box.coords().reshape(-1, s.dim)
    P = coords.shape[0]
    index = {tuple(c): i for i, c in enumerate(coords.tolist())}
    C = s.values.ravel()
    F = np.zeros((P, P), dtype=complex)
    for i, k in enumerate(coords.tolist()):
        k = tuple(k)
        if not any(k):
            F[i, i] = np.sqrt(C[i])
        elif is_positive(k):
            j = index[tuple(-c for c in k)]
            amp = np.sqrt(C[i] / 2.0)
            F[i, i], F[i, j] = amp, 1j * amp
            F[j, i], F[j, j] = amp, -1j * amp
    return F, AtomicMeasure.uniform(P), coords


def build_spectral_kernel(s: Spectrum, m: int, k) -> DiscreteKernel:
    """h_{m,k}(x_1..x_m) = sum over sigma_1 + ... + sigma_m = k of f_{sigma_1}(x_1)...f_{sigma_m}(x_m)."""
    if m < 1:
        raise ValueError("order must be >= 1")
    F, measure, coords = spectral_basis(s)
    P = F.shape[0]
    if P ** m > MAX_ENTRIES:
        raise BudgetError(f"order-{m} kernel on {P} atoms needs {P ** m} entries "
                          f"(budget {MAX_ENTRIES})")
    k = tuple(int(c) for c in np.atleast_1d(k))
    pts = [tuple(c) for c in coords.tolist()]
    live = [i for i in range(P) if np.any(F[i] != 0)]
    # partial[t] = sum over sigma_1..sigma_j with sum t of the tensor product f_sigma_1 (x) ...
    partial = {pts[i]: F[i] for i in live}
    for _ in range(m - 2):
        nxt = {}
        for t, T in partial.items():
            for i in live:
                u = tuple(a + b for a, b in zip(t, pts[i]))
                term = np.multiply.outer(T, F[i])
                if u in nxt:
                    nxt[u] = nxt[u] + term
                else:
                    nxt[u] = term
        partial = nxt
    if m == 1:
        return DiscreteKernel(F[pts.index(k)] if k in pts else np.zeros(P, complex), measure)
    index = {p: i for i, p in enumerate(pts)}
    out = np.zeros((P,) * m, dtype=complex)
    for t, T in partial.items():
        last = tuple(a - b for a, b in zip(k, t))
        if last in index and index[last] in live:
            out += np.multiply.outer(T, F[index[last]])
    return DiscreteKernel(out, measure)


@dataclass(frozen=True)
class CccCheck:
    bruteforce: float
    formula: float

    @property
    def rel_error(self) -> float:
        return abs(self.bruteforce - self.formula) / max(abs(self.formula), 1e-300)


def verify_ccc(s: Spectrum, m: int, k, q: int, powers=None) -> CccCheck:
    """Contraction norm of the normalized spectral kernel, by brute force and by formula.

    The kernel is scaled by (m! C^_{k,m})^{-1/2}; the formula side is
    (m! C^_{k,m})^{-2} sum_lam C^_{lam,q}^2 C^_{k-lam,m-q}^2 from the
    convolution powers.
    """
    if not 1 <= q <= m - 1:
        raise ValueError(f"split q={q} must lie in 1..{m - 1}")
    powers = powers or convolve_power(s, m, method="direct")
    c_km = get_order(powers, m)[k]
    if c_km <= 0:
        raise ValueError(f"C^_(k={k}, m={m}) is zero")
    scale = math.factorial(m) * c_km
    h = build_spectral_kernel(s, m, k).scaled(scale ** -0.5)
    brute = kernel_norm(contract(h, h.conj(), q)) ** 2
    t = pair_terms(get_order(powers, q), get_order(powers, m - q), k)
    formula = float(np.sum(t ** 2)) / scale ** 2
    return CccCheck(brute, formula)
