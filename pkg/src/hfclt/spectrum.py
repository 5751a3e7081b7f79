"""Band-limited power spectra on the integer lattice Z^n.

Spectra are stored densely over the centered box {-K, ..., K}^n. Array index
``i`` along an axis corresponds to lattice coordinate ``i - K``; flattening is
row-major (slowest axis first, coordinate -K first).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np


class SpectrumError(ValueError):
    """Invalid spectrum parameters or spectrum file."""


@dataclass(frozen=True)
class LatticeBox:
    dim: int
    cutoff: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise SpectrumError(f"dim must be a positive integer, got {self.dim!r}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 0:
            raise SpectrumError(f"cutoff must be a non-negative integer, got {self.cutoff!r}")

    @property
    def width(self) -> int:
        return 2 * self.cutoff + 1

    @property
    def shape(self) -> tuple:
        return (self.width,) * self.dim

    @property
    def size(self) -> int:
        return self.width ** self.dim

    def contains(self, k) -> bool:
        k = as_point(k, self.dim)
        return all(abs(c) <= self.cutoff for c in k)

    def index(self, k) -> tuple:
        """Array index of lattice point ``k``."""
        k = as_point(k, self.dim)
        if not self.contains(k):
            raise IndexError(f"lattice point {k} outside box of cutoff {self.cutoff}")
        return tuple(c + self.cutoff for c in k)

    def point(self, index) -> tuple:
        return tuple(int(i) - self.cutoff for i in index)

    def coords(self) -> np.ndarray:
        """Integer coordinates of every point, shape ``(*shape, dim)``."""
        axis = np.arange(-self.cutoff, self.cutoff + 1)
        grids = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack(grids, axis=-1)

    def norms(self) -> np.ndarray:
        """Euclidean norm of every lattice point."""
        return np.sqrt((self.coords().astype(float) ** 2).sum(axis=-1))


def as_point(k, dim: int) -> tuple:
    """Coerce an int or a sequence of ints into a lattice point of ``dim`` coordinates."""
    if np.isscalar(k):
        k = (k,)
    k = tuple(int(c) for c in k)
    if len(k) != dim:
        raise ValueError(f"expected a point with {dim} coordinates, got {k}")
    return k


def is_positive(k: Sequence[int]) -> bool:
    """Lexicographic positivity: first nonzero coordinate is positive."""
    for c in k:
        if c != 0:
            return c > 0
    return False


# --- models -----------------------------------------------------------------

@dataclass(frozen=True)
class Algebraic:
    alpha: float
    scale: float = 1.0

    type = "algebraic"

    def params(self) -> dict:
        return {"alpha": self.alpha, "scale": self.scale}


@dataclass(frozen=True)
class Exponential:
    """C_k = h(|k|) exp(-<theta, |k|>) with h a polynomial in the Euclidean norm.

    ``theta`` may be a scalar (same rate on every axis) or one rate per axis;
    the exponent is separable, theta_1|k_1| + ... + theta_n|k_n|.
    """
    theta: Union[float, tuple] = 0.5
    poly: tuple = (1.0,)

    type = "exponential"

    def params(self) -> dict:
        theta = list(self.theta) if isinstance(self.theta, tuple) else self.theta
        return {"theta": theta, "h": list(self.poly)}


@dataclass(frozen=True)
class Table:
    values: np.ndarray = field(compare=False)

    type = "table"

    def params(self) -> dict:
        return {"values": np.asarray(self.values, dtype=float).ravel().tolist()}


SpectrumModel = Union[Algebraic, Exponential, Table]


@dataclass(frozen=True, eq=False)
class Spectrum:
    box: LatticeBox
    values: np.ndarray
    model: SpectrumModel | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.box.shape:
            raise SpectrumError(
                f"values shape {values.shape} does not match box shape {self.box.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def cutoff(self) -> int:
        return self.box.cutoff

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def __getitem__(self, k) -> float:
        k = as_point(k, self.dim)
        if not self.box.contains(k):
            return 0.0
        return float(self.values[self.box.index(k)])

    def normalized(self) -> "Spectrum":
        """Rescale to unit total mass, i.e. a unit-variance Gaussian layer."""
        tot = self.total
        if not tot > 0:
            raise SpectrumError("cannot normalize a spectrum with zero total mass")
        return Spectrum(self.box, self.values / tot, Table(self.values / tot))


def _check_model(model: SpectrumModel, box: LatticeBox):
    if isinstance(model, Algebraic):
        if not model.alpha > 1:
            raise SpectrumError(f"alpha must be > 1, got {model.alpha}")
        if not model.scale > 0:
            raise SpectrumError(f"scale must be > 0, got {model.scale}")
    elif isinstance(model, Exponential):
        thetas = np.atleast_1d(np.asarray(model.theta, dtype=float))
        if thetas.size not in (1, box.dim):
            raise SpectrumError(f"theta needs 1 or {box.dim} entries, got {thetas.size}")
        if not np.all(thetas > 0):
            raise SpectrumError(f"theta must be > 0, got {model.theta}")
        if len(model.poly) == 0:
            raise SpectrumError("h must have at least one coefficient")
        # h is evaluated at Euclidean norms; check every norm that occurs in the box
        radii = np.unique(box.norms())
        radii = radii[radii > 0]
        hv = np.polynomial.polynomial.polyval(radii, np.asarray(model.poly, dtype=float))
        if np.any(hv <= 0):
            bad = radii[hv <= 0][0]
            raise SpectrumError(f"h must be positive on the box; h({bad:g}) = {hv[hv <= 0][0]:g}")


def build_spectrum(model: SpectrumModel, box: LatticeBox) -> Spectrum:
    """Materialize ``model`` on ``box``. Built-in models have C_0 = 0."""
    if box.cutoff < 1:
        raise SpectrumError("cutoff must be >= 1")
    if isinstance(model, Table):
        return Spectrum(box, np.asarray(model.values, dtype=float).reshape(box.shape), model)
    _check_model(model, box)
    r = box.norms()
    origin = r == 0
    r_safe = np.where(origin, 1.0, r)
    if isinstance(model, Algebraic):
        vals = model.scale * r_safe ** (-float(model.alpha))
    else:
        thetas = np.broadcast_to(np.atleast_1d(np.asarray(model.theta, dtype=float)), (box.dim,))
        expo = (np.abs(box.coords()) * thetas).sum(axis=-1)
        h = np.polynomial.polynomial.polyval(r_safe, np.asarray(model.poly, dtype=float))
        vals = h * np.exp(-expo)
    vals[origin] = 0.0
    return Spectrum(box, vals, model)


def algebraic(alpha: float, cutoff: int, dim: int = 1, scale: float = 1.0) -> Spectrum:
    return build_spectrum(Algebraic(alpha, scale), LatticeBox(dim, cutoff))


def exponential(theta, cutoff: int, dim: int = 1, h=(1.0,)) -> Spectrum:
    theta = tuple(theta) if np.ndim(theta) else float(theta)
    return build_spectrum(Exponential(theta, tuple(h)), LatticeBox(dim, cutoff))


def table(values, dim: int = 1) -> Spectrum:
    values = np.asarray(values, dtype=float)
    width = round(values.size ** (1.0 / dim))
    if width ** dim != values.size or width % 2 == 0:
        raise SpectrumError(f"{values.size} values do not fill a centered box in dimension {dim}")
    box = LatticeBox(dim, (width - 1) // 2)
    return build_spectrum(Table(values.reshape(box.shape)), box)


# --- validation -------------------------------------------------------------

class Violation(NamedTuple):
    kind: str  # "symmetry" | "negative" | "nonfinite"
    point: tuple
    message: str


def validate_spectrum(s: Spectrum) -> list:
    """List every broken spectrum invariant; empty when the spectrum is valid."""
    out = []
    v = s.values
    flipped = v[(slice(None, None, -1),) * s.dim]
    for idx in zip(*np.nonzero(~np.isfinite(v))):
        k = s.box.point(idx)
        out.append(Violation("nonfinite", k, f"C{list(k)} = {v[idx]} is not finite"))
    for idx in zip(*np.nonzero(v < 0)):
        k = s.box.point(idx)
        out.append(Violation("negative", k, f"C{list(k)} = {v[idx]:g} < 0"))
    asym = (v != flipped) & np.isfinite(v) & np.isfinite(flipped)
    for idx in zip(*np.nonzero(asym)):
        k = s.box.point(idx)
        # report each asymmetric pair once, at its positive member
        if is_positive(k):
            neg = tuple(-c for c in k)
            out.append(Violation("symmetry", k,
                                 f"C{list(k)} = {v[idx]:g} != C{list(neg)} = {s[neg]:g}"))
    return out


# --- serialization ----------------------------------------------------------

def spectrum_to_dict(s: Spectrum) -> dict:
    model = s.model if s.model is not None else Table(s.values)
    if isinstance(model, Table):
        model = Table(s.values)
    return {"dim": s.dim, "cutoff": s.cutoff, "model": {"type": model.type, **model.params()}}


def spectrum_from_dict(d: dict) -> Spectrum:
    for key in ("dim", "cutoff", "model"):
        if key not in d:
            raise SpectrumError(f"spectrum file is missing required field {key!r}")
    box = LatticeBox(d["dim"], d["cutoff"])
    m = d["model"]
    if not isinstance(m, dict) or "type" not in m:
        raise SpectrumError("model must be an object with a 'type' field")
    try:
        if m["type"] == "algebraic":
            model = Algebraic(float(m["alpha"]), float(m.get("scale", 1.0)))
        elif m["type"] == "exponential":
            theta = m.get("theta", 0.5)
            theta = tuple(float(t) for t in theta) if isinstance(theta, list) else float(theta)
            model = Exponential(theta, tuple(float(c) for c in m.get("h", [1.0])))
        elif m["type"] == "table":
            vals = np.asarray(m["values"], dtype=float)
            if vals.size != box.size:
                raise SpectrumError(f"table has {vals.size} values, box needs {box.size}")
            model = Table(vals.reshape(box.shape))
        else:
            raise SpectrumError(f"unknown model type {m['type']!r}")
    except KeyError as exc:
        raise SpectrumError(f"model of type {m['type']!r} is missing parameter {exc}") from None
    s = build_spectrum(model, box)
    bad = validate_spectrum(s)
    if bad:
        raise SpectrumError("invalid spectrum: " + "; ".join(v.message for v in bad[:5]))
    return s


def save_spectrum(s: Spectrum, path) -> None:
    Path(path).write_text(json.dumps(spectrum_to_dict(s), indent=1))


def load_spectrum(path) -> Spectrum:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpectrumError(f"malformed spectrum file {path}: {exc}") from None
    if not isinstance(d, dict):
        raise SpectrumError("spectrum file must contain a JSON object")
    return spectrum_from_dict(d)


__all__ = [
    "SpectrumError", "LatticeBox", "Spectrum", "Algebraic", "Exponential", "Table",
    "build_spectrum", "algebraic", "exponential", "table", "validate_spectrum",
    "Violation", "save_spectrum", "load_spectrum", "spectrum_to_dict",
    "spectrum_from_dict", "as_point", "is_positive",
]
