"""Concentration ratios for an algebraically decaying spectrum (CLT failure regime).

    python3 scripts/run_example1.py --alpha 2 --cutoff 2048 --out results/example1.csv
"""
import argparse
import logging

from hfclt.experiments import ExperimentConfig, run_example1, write_outputs

log = logging.getLogger("example1")


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--cutoff", type=int, default=2048)
    p.add_argument("--orders", type=int, nargs="+", default=[2, 3])
    p.add_argument("--start", type=int, default=8)
    p.add_argument("--stop", type=int, default=512)
    p.add_argument("--out")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    cfg = ExperimentConfig(model={"type": "algebraic", "alpha": args.alpha, "scale": 1.0},
                           cutoff=args.cutoff, orders=args.orders,
                           ladder_start=args.start, ladder_stop=args.stop)
    log.info("algebraic alpha=%g, K=%d, ladder %s", args.alpha, args.cutoff, cfg.frequencies())
    write_outputs(run_example1(cfg), cfg, "example1", args.out)


if __name__ == "__main__":
    main()
