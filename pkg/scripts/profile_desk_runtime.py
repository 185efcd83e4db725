#!/usr/bin/env python3
"""Measure per-update wall time of the shipped desk-scale specs and project
the full-run duration. Documents the desk-scale runtime envelope on the
current machine."""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from marl_lab.cli import resolve_spec
from marl_lab.training import Trainer, TrainerConfig

SPECS_DIR = os.path.join(os.path.dirname(__file__), "..", "specs")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--updates", type=int, default=3,
                    help="updates to time per spec")
    ap.add_argument("--specs", nargs="+",
                    default=["mini_cleanup_baseline.spec", "mini_cleanup_emurel.spec",
                             "mini_harvest_a2c_baseline.spec"])
    args = ap.parse_args()

    for name in args.specs:
        spec = resolve_spec(os.path.join(SPECS_DIR, name))
        spec.env.seed = 1
        cfg = TrainerConfig(**{f: getattr(spec.trainer, f)
                               for f in TrainerConfig.__dataclass_fields__
                               if f != "seed"}, seed=1)
        trainer = Trainer(spec.env, spec.method, cfg, sizes=spec.net)
        t0 = time.time()
        trainer.run(updates=args.updates)
        per = (time.time() - t0) / args.updates
        total = per * spec.trainer.updates / 60
        print(f"{name:35s} {per:6.2f} s/update -> "
              f"{spec.trainer.updates} updates ~ {total:5.1f} min")


if __name__ == "__main__":
    main()
