"""Concentration ratios for an exponentially decaying spectrum (CLT regime).

    python3 scripts/run_example2.py --theta 0.5 --cutoff 512 --out results/example2.csv

Prints the ratio(2k)/ratio(k) column as well; it should hover near 1/2 for h = 1.
"""
import argparse
import csv
import io
import logging
from collections import defaultdict

from hfclt.experiments import ExperimentConfig, run_example2, write_outputs

log = logging.getLogger("example2")


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--h", type=float, nargs="+", default=[1.0])
    p.add_argument("--cutoff", type=int, default=512)
    p.add_argument("--orders", type=int, nargs="+", default=[2, 3])
    p.add_argument("--start", type=int, default=16)
    p.add_argument("--stop", type=int, default=256)
    p.add_argument("--out")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    cfg = ExperimentConfig(model={"type": "exponential", "theta": args.theta, "h": args.h},
                           cutoff=args.cutoff, orders=args.orders,
                           ladder_start=args.start, ladder_stop=args.stop)
    text = run_example2(cfg)
    write_outputs(text, cfg, "example2", args.out)
    series = defaultdict(list)
    for row in csv.DictReader(io.StringIO(text)):
        series[(row["m"], row["q"])].append(float(row["cond3_ratio"]))
    for (m, q), r in series.items():
        steps = " ".join(f"{b / a:.3f}" if a > 0 else "nan" for a, b in zip(r, r[1:]))
        log.info("m=%s q=%s  ratio(2k)/ratio(k): %s", m, q, steps)


if __name__ == "__main__":
    main()
