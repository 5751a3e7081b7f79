"""Experiment runners for the algebraic / exponential decay dichotomy."""
from __future__ import annotations

import csv
import io
import json
import platform
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cltcheck import SpectralUnderflow, UnachievableFrequency, cond2_sum, cond3_ratio
from .convolve import convolve_power, get_order
from .fieldsim import mc_moments
from .spectrum import SpectrumError, spectrum_from_dict


@dataclass
class ExperimentConfig:
    model: dict = field(default_factory=lambda: {"type": "algebraic", "alpha": 2.0, "scale": 1.0})
    cutoff: int = 2048
    dim: int = 1
    orders: list = field(default_factory=lambda: [2])
    freqs: list | None = None       # explicit ladder; overrides the generated one
    ladder_start: int = 8
    ladder_stop: int = 512
    ladder: str = "geometric"       # "geometric" (doubling) or "linear"
    ladder_step: int = 8
    reps: int = 1000
    seed: int | None = None
    grid: int | None = None
    method: str = "auto"
    workers: int = 1

    def frequencies(self) -> list:
        if self.freqs is not None:
            out = [int(k) for k in self.freqs]
        elif self.ladder == "geometric":
            out, k = [], self.ladder_start
            while k <= self.ladder_stop:
                out.append(k)
                k *= 2
        elif self.ladder == "linear":
            out = list(range(self.ladder_start, self.ladder_stop + 1, self.ladder_step))
        else:
            raise ValueError(f"unknown ladder kind {self.ladder!r}")
        return out

    def validate(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.orders or min(self.orders) < 1:
            raise ValueError("orders must be positive integers")
        freqs = self.frequencies()
        if not freqs:
            raise ValueError("frequency ladder is empty")
        if self.ladder == "geometric" and self.freqs is None and self.ladder_start < 1:
            raise ValueError("geometric ladder needs a positive start")
        reach = max(self.orders) * self.cutoff
        bad = [k for k in freqs if abs(k) > min(self.orders) * self.cutoff]
        if bad:
            raise ValueError(f"frequencies {bad} exceed the support {min(self.orders)}*K; "
                             f"largest reachable is {reach}")

    def spectrum(self):
        return spectrum_from_dict({"dim": self.dim, "cutoff": self.cutoff, "model": self.model})

    def point(self, k) -> tuple:
        return (int(k),) + (0,) * (self.dim - 1)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)


def manifest(config: ExperimentConfig, command: str, outputs: dict) -> dict:
    import scipy
    return {
        "command": command,
        "config": asdict(config),
        "seed": config.seed,
        "versions": {"hfclt": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "argv": sys.argv,
        "outputs": outputs,
    }


def write_outputs(table: str, config: ExperimentConfig, command: str, out: str | None,
                  manifest_path: str | None = None):
    if out is None:
        sys.stdout.write(table)
        return
    Path(out).write_text(table)
    mpath = manifest_path or str(Path(out).with_suffix(".manifest.json"))
    Path(mpath).write_text(json.dumps(manifest(config, command, {"table": out}), indent=1))


def _to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


RATIO_HEADER = ["freq", "m", "q", "cond3_ratio", "cond2_sum", "status"]


def ratio_ladder(config: ExperimentConfig) -> list:
    """Rows (freq, m, q, cond3_ratio, cond2_sum, status) for every order and split."""
    config.validate()
    s = config.spectrum()
    powers = convolve_power(s, max(config.orders), method=config.method)
    rows = []
    for m in config.orders:
        get_order(powers, m)
        for k in config.frequencies():
            pt = config.point(k)
            for q in range(1, m):
                try:
                    r3 = cond3_ratio(powers, pt, m, q)
                    r2 = cond2_sum(powers, pt, m, q)
                    status = "ok"
                except SpectralUnderflow:
                    # every term is below the float64 range: report 0 and flag it
                    r3 = r2 = 0.0
                    status = "underflow"
                except UnachievableFrequency:
                    r3 = r2 = float("nan")
                    status = "unachievable"
                rows.append((k, m, q, r3, r2, status))
    return rows


def run_example1(config: ExperimentConfig) -> str:
    """Concentration ratios along the ladder for an algebraically decaying spectrum."""
    if config.model.get("type") != "algebraic":
        raise SpectrumError("example1 needs an algebraic spectrum model")
    return _to_csv(RATIO_HEADER, ratio_ladder(config))


def run_example2(config: ExperimentConfig) -> str:
    """Concentration ratios along the ladder for an exponentially decaying spectrum."""
    if config.model.get("type") != "exponential":
        raise SpectrumError("example2 needs an exponential spectrum model")
    return _to_csv(RATIO_HEADER, ratio_ladder(config))


MC_HEADER = ["freq", "m", "cond3_max", "abs2_ratio", "abs2_ratio_se",
             "re4", "re4_se", "im4", "im4_se"]


def run_mc_validation(config: ExperimentConfig) -> str:
    """Analytic concentration ratios next to Monte Carlo fourth moments, per frequency."""
    if config.seed is None:
        raise ValueError("mc-validate needs an explicit seed")
    config.validate()
    s = config.spectrum().normalized()
    orders = sorted(set([1] + list(config.orders)))
    freqs = config.frequencies()
    powers = convolve_power(s, max(orders), method=config.method)
    rep = mc_moments(s, [config.point(k) for k in freqs], orders, config.reps, config.seed,
                     config.grid, normalize=False, workers=config.workers)
    rows = []
    for k in freqs:
        pt = config.point(k)
        for m in orders:
            if m == 1:
                c3 = float("nan")
            else:
                try:
                    c3 = max(cond3_ratio(powers, pt, m, q) for q in range(1, m))
                except (SpectralUnderflow, UnachievableFrequency):
                    c3 = float("nan")
            try:
                vals = [rep.get(pt, m, st) for st in ("abs2_ratio", "re4", "im4")]
            except KeyError:
                continue
            rows.append((k, m, c3, vals[0].estimate, vals[0].stderr, vals[1].estimate,
                         vals[1].stderr, vals[2].estimate, vals[2].stderr))
    return _to_csv(MC_HEADER, rows)
