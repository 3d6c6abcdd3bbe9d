"""Classify a (gamma, chi) grid and print the resulting stability map.

A thin wrapper around the ``sweep`` command for a denser grid than the
corner config; useful to see where the numerical verdict changes.
"""
import argparse
from pathlib import Path

from stabilyze import cli

TEMPLATE = """\
[sweep]
gamma_range = {g0}, {g1}
gamma_step = {gs}
chi_values = {chis}

[spectrum]
kind = loggrid
count = {count}

[output]
dir = {out}
workers = {workers}
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/stability_map")
    ap.add_argument("--gamma", nargs=3, type=float, default=(0.0, 1.5, 0.25), metavar=("START", "STOP", "STEP"))
    ap.add_argument("--chi", default="0, 0.5")
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = out / "map.ini"
    g0, g1, gs = args.gamma
    cfg.write_text(TEMPLATE.format(g0=g0, g1=g1, gs=gs, chis=args.chi, count=args.count,
                                   out=out, workers=args.workers))
    raise SystemExit(cli.main(["sweep", "--config", str(cfg), "--resume"]))


if __name__ == "__main__":
    main()
