"""Command-line entry point: ``hfclt <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .cltcheck import (SpectralUnderflow, UnachievableFrequency, clt_report,
                       general_transform_report, report_csv)
from .convolve import BudgetError, convolve_power
from .experiments import (ExperimentConfig, run_example1, run_example2, run_mc_validation,
                          write_outputs)
from .fieldsim import mc_moments
from .hermite import expand, parse_transform
from .kernels import AtomicMeasure, check_complex_inequality, random_symmetric_kernel
from .spectrum import (Algebraic, Exponential, LatticeBox, SpectrumError, build_spectrum,
                       load_spectrum, save_spectrum, spectrum_to_dict, validate_spectrum)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_NUMERICAL = 4

log = logging.getLogger("hfclt")


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list:
    return [int(x) for x in text.split(",") if x.strip()]


def _freqs(text: str, dim: int) -> list:
    """``8,16,32`` in 1-d; ``1:2,3:0`` for points in n-d."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        pt = tuple(int(c) for c in item.split(":"))
        if len(pt) == 1 and dim > 1:
            pt = pt + (0,) * (dim - 1)
        out.append(pt)
    return out


def _add_spectrum_args(p):
    p.add_argument("--spectrum", help="JSON spectrum file (overrides model flags)")
    p.add_argument("--model", choices=["algebraic", "exponential"], default="algebraic")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--theta", type=_floats, default=[0.5])
    p.add_argument("--h", type=_floats, default=[1.0], help="coefficients of h, constant first")
    p.add_argument("--cutoff", type=int, default=64)
    p.add_argument("--dim", type=int, default=1)


def _spectrum(args):
    if args.spectrum:
        return load_spectrum(args.spectrum)
    box = LatticeBox(args.dim, args.cutoff)
    if args.model == "algebraic":
        model = Algebraic(args.alpha, args.scale)
    else:
        theta = args.theta[0] if len(args.theta) == 1 else tuple(args.theta)
        model = Exponential(theta, tuple(args.h))
    return build_spectrum(model, box)


def _write(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- subcommands ------------------------------------------------------------

def cmd_spectrum(args):
    s = _spectrum(args)
    bad = validate_spectrum(s)
    for v in bad:
        log.warning(v.message)
    if args.out:
        save_spectrum(s, args.out)
    else:
        print(json.dumps(spectrum_to_dict(s)))
    return EXIT_NUMERICAL if bad else EXIT_OK


def cmd_convolve(args):
    s = _spectrum(args)
    powers = convolve_power(s, args.order, method=args.method)
    d = powers[-1].to_dict()
    _write(json.dumps(d) + "\n", args.out)
    return EXIT_OK


def cmd_clt_check(args):
    s = _spectrum(args)
    freqs = _freqs(args.freqs, s.dim)
    if args.transform:
        expansion = expand(parse_transform(args.transform), args.max_order)
        powers = convolve_power(s.normalized(), expansion.orders()[-1], method=args.method)
        rep = general_transform_report(powers, expansion, freqs, split_order=args.split)
        _write(json.dumps(rep.to_dict(), indent=1) + "\n", args.out)
        return EXIT_OK
    powers = convolve_power(s, args.order, method=args.method)
    _write(report_csv(clt_report(powers, freqs, args.order, workers=args.workers)), args.out)
    return EXIT_OK


def cmd_expand(args):
    e = expand(parse_transform(args.transform), args.max_order)
    lines = ["m,c_m"] + [f"{m},{e.c(m)!r}" for m in range(1, e.max_order + 1)]
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args):
    s = _spectrum(args)
    transform = parse_transform(args.transform) if args.transform else None
    rep = mc_moments(s, _freqs(args.freqs, s.dim), _ints(args.orders), args.reps, args.seed,
                     args.grid, transform=transform, workers=args.workers)
    _write(rep.to_csv(), args.out)
    return EXIT_OK


def cmd_kernel_verify(args):
    rng = np.random.default_rng(args.seed)
    lhs_min_gap = np.inf
    failures = 0
    for _ in range(args.trials):
        w = rng.uniform(0.2, 2.0, args.atoms)
        g = random_symmetric_kernel(rng, args.atoms, args.order, measure=AtomicMeasure(w))
        for q in range(1, args.order):
            chk = check_complex_inequality(g, q)
            failures += not chk.holds
            lhs_min_gap = min(lhs_min_gap, (chk.lhs - chk.rhs) / max(chk.lhs, 1e-300))
    summary = {"atoms": args.atoms, "order": args.order, "trials": args.trials,
               "seed": args.seed, "failures": failures, "min_relative_gap": lhs_min_gap}
    _write(json.dumps(summary) + "\n", args.out)
    return EXIT_OK if failures == 0 else EXIT_NUMERICAL


def _experiment_config(args, defaults: dict) -> ExperimentConfig:
    if args.config:
        d = json.loads(Path(args.config).read_text())
        d = d.get("config", d)  # accept a run manifest directly
        return ExperimentConfig.from_dict(d)
    d = dict(defaults)
    if args.cutoff is not None:
        d["cutoff"] = args.cutoff
    if args.orders:
        d["orders"] = _ints(args.orders)
    if args.freqs:
        d["freqs"] = _ints(args.freqs)
    for key in ("ladder", "reps", "seed", "grid", "workers", "method"):
        val = getattr(args, key, None)
        if val is not None:
            d[key] = val
    if args.start is not None:
        d["ladder_start"] = args.start
    if args.stop is not None:
        d["ladder_stop"] = args.stop
    if args.step is not None:
        d["ladder_step"] = args.step
    model = dict(d["model"])
    if model["type"] == "algebraic" and args.alpha is not None:
        model["alpha"] = args.alpha
    if model["type"] == "exponential":
        if args.theta is not None:
            model["theta"] = args.theta[0] if len(args.theta) == 1 else args.theta
        if args.h is not None:
            model["h"] = args.h
    d["model"] = model
    return ExperimentConfig(**d)


EXAMPLE1 = {"model": {"type": "algebraic", "alpha": 2.0, "scale": 1.0}, "cutoff": 2048,
            "orders": [2, 3], "ladder_start": 8, "ladder_stop": 512}
EXAMPLE2 = {"model": {"type": "exponential", "theta": 0.5, "h": [1.0]}, "cutoff": 512,
            "orders": [2, 3], "ladder_start": 16, "ladder_stop": 256}
MCVALIDATE = {"model": {"type": "exponential", "theta": 0.5, "h": [1.0]}, "cutoff": 64,
              "orders": [2], "ladder_start": 8, "ladder_stop": 64, "reps": 20000}


def cmd_experiment(args):
    defaults = {"example1": EXAMPLE1, "example2": EXAMPLE2, "mc-validate": MCVALIDATE}[args.command]
    if args.command == "mc-validate" and args.model:
        defaults = dict(defaults, model={"algebraic": {"type": "algebraic", "alpha": 2.0, "scale": 1.0},
                                         "exponential": MCVALIDATE["model"]}[args.model])
    config = _experiment_config(args, defaults)
    runner = {"example1": run_example1, "example2": run_example2,
              "mc-validate": run_mc_validation}[args.command]
    log.info("running %s with %s", args.command, asdict(config))
    write_outputs(runner(config), config, args.command, args.out, args.manifest)
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hfclt", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="build, validate and save a spectrum")
    _add_spectrum_args(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("convolve", help="dump the order-m convolution power")
    _add_spectrum_args(sp)
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--method", choices=["auto", "direct", "fft"], default="auto")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_convolve)

    sp = sub.add_parser("clt-check", help="contraction sums and concentration ratios")
    _add_spectrum_args(sp)
    sp.add_argument("--order", type=int, default=2)
    sp.add_argument("--freqs", required=True)
    sp.add_argument("--transform", help="report for a general transform instead of H_m")
    sp.add_argument("--max-order", type=int, default=12)
    sp.add_argument("--split", type=int)
    sp.add_argument("--method", choices=["auto", "direct", "fft"], default="auto")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_clt_check)

    sp = sub.add_parser("expand", help="Hermite coefficients of a transform")
    sp.add_argument("--transform", required=True)
    sp.add_argument("--max-order", type=int, default=12)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("simulate", help="Monte Carlo moments of subordinated coefficients")
    _add_spectrum_args(sp)
    sp.add_argument("--freqs", required=True)
    sp.add_argument("--orders", default="1,2,3")
    sp.add_argument("--transform")
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--grid", type=int)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("kernel-verify", help="random sweep of the complex-contraction inequality")
    sp.add_argument("--atoms", type=int, default=4)
    sp.add_argument("--order", type=int, default=3)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_kernel_verify)

    for name, help_ in (("example1", "algebraic decay: ratios stay bounded away from 0"),
                        ("example2", "exponential decay: ratios vanish"),
                        ("mc-validate", "ratios side by side with Monte Carlo fourth moments")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON config or a previous run manifest")
        sp.add_argument("--cutoff", type=int)
        sp.add_argument("--orders")
        sp.add_argument("--freqs", help="explicit ladder, overrides --start/--stop")
        sp.add_argument("--ladder", choices=["geometric", "linear"])
        sp.add_argument("--start", type=int)
        sp.add_argument("--stop", type=int)
        sp.add_argument("--step", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--theta", type=_floats)
        sp.add_argument("--h", type=_floats)
        sp.add_argument("--method", choices=["auto", "direct", "fft"])
        sp.add_argument("--out")
        sp.add_argument("--manifest")
        if name == "mc-validate":
            sp.add_argument("--model", choices=["algebraic", "exponential"])
            sp.add_argument("--reps", type=int)
            sp.add_argument("--seed", type=int, required=True)
            sp.add_argument("--grid", type=int)
            sp.add_argument("--workers", type=int)
        sp.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (BudgetError, MemoryError) as exc:
        log.error("budget exceeded: %s", exc)
        return EXIT_BUDGET
    except (SpectralUnderflow, UnachievableFrequency, FloatingPointError) as exc:
        log.error("numerical error: %s", exc)
        return EXIT_NUMERICAL
    except (SpectrumError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
