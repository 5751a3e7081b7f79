"""Monte Carlo synthesis of Gaussian torus fields and their subordinated Fourier coefficients.

Grid points are theta_j = 2 pi j / G per axis. A coefficient draw places a_k at
DFT index k mod G, the field is T = G^n * ifftn(a), and the Fourier
coefficient of F[T] at k is fftn(F(T))[k mod G] / G^n. For a polynomial F of
degree d this is exact once G >= 2 d K + 1.

Every replication r draws from its own stream seeded by (seed, r), so
estimates do not depend on how replications are batched or parallelized.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .convolve import BudgetError, convolve_power, get_order
from .hermite import hermite_table
from .spectrum import LatticeBox, Spectrum, as_point, is_positive

REAL_RESIDUE_RTOL = 1e-10
BLOCK = 512
MAX_WORK = 4e10  # reps * G^n


class AliasingWarning(UserWarning):
    """The DFT on this grid only approximates the Fourier integral."""


@dataclass(frozen=True, eq=False)
class CoefficientDraw:
    box: LatticeBox
    values: np.ndarray  # complex, indexed like the spectrum box


@dataclass(frozen=True, eq=False)
class FieldSample:
    grid: np.ndarray  # real, shape (G,) * n
    cutoff: int       # band limit of the Gaussian layer

    @property
    def size(self) -> int:
        return self.grid.shape[0]

    @property
    def dim(self) -> int:
        return self.grid.ndim


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(rep,))))


def _half_lattice(box: LatticeBox):
    """Flat indices of the positive half-lattice, of their mirrors, and of the origin."""
    coords = box.coords().reshape(-1, box.dim)
    pos = np.array([is_positive(c) for c in coords.tolist()])
    pos_idx = np.nonzero(pos)[0]
    # the box is centrally symmetric, so -k sits at the mirrored flat index
    neg_idx = box.size - 1 - pos_idx
    return pos_idx, neg_idx, box.size // 2


def draw_coefficients(s: Spectrum, rng: np.random.Generator) -> CoefficientDraw:
    """Gaussian coefficients with E|a_k|^2 = C_k and a_{-k} = conj(a_k)."""
    pos_idx, neg_idx, origin = _half_lattice(s.box)
    C = s.values.ravel()
    sd = np.sqrt(C[pos_idx] / 2.0)
    re = rng.standard_normal(pos_idx.size) * sd
    im = rng.standard_normal(pos_idx.size) * sd
    a0 = rng.standard_normal() * np.sqrt(C[origin])
    out = np.zeros(s.box.size, dtype=complex)
    out[pos_idx] = re + 1j * im
    out[neg_idx] = re - 1j * im
    out[origin] = a0
    return CoefficientDraw(s.box, out.reshape(s.box.shape))


def _check_grid(G: int, K: int):
    if G < 2 * K + 1:
        raise ValueError(f"grid size {G} aliases the Gaussian layer; need G >= {2 * K + 1}")


def _embed(a: np.ndarray, K: int, G: int) -> np.ndarray:
    """Place box-indexed coefficients (leading batch axis allowed) into DFT layout."""
    dim = a.ndim - 1
    out = np.zeros((a.shape[0],) + (G,) * dim, dtype=complex)
    pos = np.arange(-K, K + 1) % G
    out[(slice(None),) + np.ix_(*([pos] * dim))] = a
    return out


def _synthesize_batch(a: np.ndarray, K: int, G: int) -> np.ndarray:
    dim = a.ndim - 1
    axes = tuple(range(1, dim + 1))
    T = sfft.ifftn(_embed(a, K, G), axes=axes, norm="forward")
    amp = np.abs(T).max(initial=0.0)
    resid = np.abs(T.imag).max(initial=0.0)
    if resid > REAL_RESIDUE_RTOL * max(amp, 1e-300):
        raise FloatingPointError(f"synthesized field is not real (residue {resid:.2e})")
    return T.real


def synthesize(draw: CoefficientDraw, G: int) -> FieldSample:
    """T(theta_j) = sum_k a_k exp(i k . theta_j) on the G^n grid."""
    K = draw.box.cutoff
    _check_grid(G, K)
    return FieldSample(_synthesize_batch(draw.values[None], K, G)[0], K)


def _grid_indices(freqs, G: int, dim: int) -> tuple:
    pts = np.array([as_point(k, dim) for k in freqs]) % G
    return tuple(pts[:, j] for j in range(dim))


def _aliasing_check(transform, K: int, G: int, freqs):
    deg = getattr(transform, "degree", None)
    if deg is None:
        warnings.warn("non-polynomial transform: DFT coefficients approximate the Fourier "
                      "integral", AliasingWarning, stacklevel=3)
    elif G < 2 * deg * K + 1:
        warnings.warn(f"grid {G} < {2 * deg * K + 1}: degree-{deg} coefficients alias",
                      AliasingWarning, stacklevel=3)


def subordinated_coefficients(sample: FieldSample, transform, freqs) -> np.ndarray:
    """ã_k(F) = G^-n sum_j F(T(theta_j)) exp(-i k . theta_j) for each k in ``freqs``."""
    G, K = sample.size, sample.cutoff
    _aliasing_check(transform, K, G, freqs)
    spec = sfft.fftn(transform(sample.grid), norm="forward")
    return spec[_grid_indices(freqs, G, sample.dim)]


def default_grid(cutoff: int, max_order: int, dim: int = 1) -> int:
    return sfft.next_fast_len(max_order * (2 * cutoff + 1))


# --- Monte Carlo moments ----------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    freq: tuple
    order: str
    stat: str
    estimate: float
    stderr: float
    reps: int


@dataclass
class MomentReport:
    reps: int
    seed: int
    grid: int
    normalized_spectrum: bool
    rows: list = field(default_factory=list)

    def get(self, freq, order, stat) -> Estimate:
        freq = tuple(np.atleast_1d(freq).tolist())
        order = str(order)
        for r in self.rows:
            if r.freq == freq and r.order == order and r.stat == stat:
                return r
        raise KeyError((freq, order, stat))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["freq", "order", "stat", "estimate", "stderr", "reps"])
        for r in self.rows:
            f = str(r.freq[0]) if len(r.freq) == 1 else " ".join(map(str, r.freq))
            w.writerow([f, r.order, r.stat, repr(r.estimate), repr(r.stderr), r.reps])
        return buf.getvalue()


def _block_coefficients(s: Spectrum, start: int, stop: int, seed: int, G: int,
                        orders, transform, fidx) -> np.ndarray:
    """Coefficients for replications start..stop-1: shape (reps, n_series, n_freqs)."""
    pos_idx, neg_idx, origin = _half_lattice(s.box)
    C = s.values.ravel()
    sd = np.sqrt(C[pos_idx] / 2.0)
    sd0 = np.sqrt(C[origin])
    n = stop - start
    a = np.zeros((n, s.box.size), dtype=complex)
    for i, r in enumerate(range(start, stop)):
        z = replication_rng(seed, r).standard_normal(2 * pos_idx.size + 1)
        re, im = z[:pos_idx.size] * sd, z[pos_idx.size:2 * pos_idx.size] * sd
        a[i, pos_idx] = re + 1j * im
        a[i, neg_idx] = re - 1j * im
        a[i, origin] = z[-1] * sd0
    a = a.reshape((n,) + s.box.shape)
    T = _synthesize_batch(a, s.cutoff, G)
    axes = tuple(range(1, T.ndim))
    H = hermite_table(max(orders), T)
    series = [H[m] for m in orders]
    if transform is not None:
        series.append(transform(T))
    out = np.empty((n, len(series), len(fidx[0])), dtype=complex)
    for j, field_values in enumerate(series):
        spec = sfft.fftn(field_values, axes=axes, norm="forward")
        out[:, j, :] = spec[(slice(None),) + fidx]
    return out


def simulate_coefficients(s: Spectrum, freqs, orders, reps: int, seed: int, G: int,
                          transform=None, workers: int = 1) -> np.ndarray:
    """Per-replication ã_k(H_m) (and ã_k(F)); shape (reps, n_series, n_freqs)."""
    fidx = _grid_indices(freqs, G, s.dim)
    blocks = [(b, min(b + BLOCK, reps)) for b in range(0, reps, BLOCK)]

    def run(bounds):
        return _block_coefficients(s, bounds[0], bounds[1], seed, G, orders, transform, fidx)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return np.concatenate(parts, axis=0)


def _mean_se(x: np.ndarray) -> tuple:
    n = x.shape[0]
    return x.mean(axis=0), x.std(axis=0, ddof=1) / np.sqrt(n)


def mc_moments(s: Spectrum, freqs, orders=(1, 2, 3), reps: int = 1000, seed: int = 0,
               G: int | None = None, transform=None, normalize: bool = True,
               workers: int = 1) -> MomentReport:
    """Replication estimates of second, fourth and cross moments of ã_k(H_m).

    The spectrum is rescaled to unit mass first (``normalize``), since the
    Hermite identities assume a unit-variance field. Fourth moments are
    normalized by the analytic variance m! C^_{k,m}.

    Stats per (freq, order): ``abs2`` E|ã|^2, ``abs2_ratio`` E|ã|^2/(m! C^),
    ``re2``/``im2`` E[Re^2], E[Im^2] (normalized), ``re4``/``im4`` normalized
    fourth moments (Gaussian value 3/4), ``reim`` normalized E[Re Im].
    Cross-order rows (order ``"a,b"``) carry ``cross_re``/``cross_im``, the
    real and imaginary parts of E[ã(H_a) conj ã(H_b)] normalized by both
    standard deviations, and ``pcross_re``/``pcross_im`` for E[ã(H_a) ã(H_b)].
    """
    if reps < 2:
        raise ValueError("need at least 2 replications for standard errors")
    orders = sorted(set(int(m) for m in orders))
    if orders[0] < 1:
        raise ValueError("Hermite orders must be >= 1")
    if normalize:
        s = s.normalized()
    K = s.cutoff
    max_deg = max(orders + ([transform.degree] if transform is not None and
                            transform.degree is not None else []))
    G = default_grid(K, max_deg, s.dim) if G is None else int(G)
    _check_grid(G, K)
    if G < 2 * max_deg * K + 1:
        warnings.warn(f"grid {G} below the exactness bound {2 * max_deg * K + 1}",
                      AliasingWarning, stacklevel=2)
    if reps * G ** s.dim > MAX_WORK:
        raise BudgetError(f"reps * G^n = {reps * G ** s.dim:.3g} exceeds budget {MAX_WORK:.3g}")
    freqs = [as_point(k, s.dim) for k in freqs]
    powers = convolve_power(s, max(orders))
    coef = simulate_coefficients(s, freqs, orders, reps, seed, G, transform, workers)

    report = MomentReport(reps, seed, G, normalize)
    for fi, k in enumerate(freqs):
        scale = {}
        for oi, m in enumerate(orders):
            var = math.factorial(m) * get_order(powers, m)[k]
            scale[m] = var
            z = coef[:, oi, fi]
            stats = {"abs2": np.abs(z) ** 2}
            if var > 0:
                zn = z / np.sqrt(var)
                stats.update({
                    "abs2_ratio": np.abs(zn) ** 2,
                    "re2": zn.real ** 2, "im2": zn.imag ** 2,
                    "re4": zn.real ** 4, "im4": zn.imag ** 4,
                    "reim": zn.real * zn.imag,
                })
            for name, x in stats.items():
                est, se = _mean_se(x)
                report.rows.append(Estimate(k, str(m), name, float(est), float(se), reps))
        for i, ma in enumerate(orders):
            for j in range(i + 1, len(orders)):
                mb = orders[j]
                if scale[ma] <= 0 or scale[mb] <= 0:
                    continue
                za = coef[:, i, fi] / np.sqrt(scale[ma])
                zb = coef[:, j, fi] / np.sqrt(scale[mb])
                cov, pcov = za * np.conj(zb), za * zb
                for name, x in (("cross_re", cov.real), ("cross_im", cov.imag),
                                ("pcross_re", pcov.real), ("pcross_im", pcov.imag)):
                    est, se = _mean_se(x)
                    report.rows.append(Estimate(k, f"{ma},{mb}", name, float(est), float(se), reps))
        if transform is not None:
            z = coef[:, len(orders), fi]
            for name, x in (("abs2", np.abs(z) ** 2), ("reim", z.real * z.imag)):
                est, se = _mean_se(x)
                report.rows.append(Estimate(k, "F", name, float(est), float(se), reps))
    return report


__all__ = [
    "CoefficientDraw", "FieldSample", "MomentReport", "Estimate", "AliasingWarning",
    "draw_coefficients", "synthesize", "subordinated_coefficients", "mc_moments",
    "simulate_coefficients", "replication_rng", "default_grid",
]
