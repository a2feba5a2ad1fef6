#!/usr/bin/env python3
"""Survey the structure classification of critical arms for several n.

For each requested edge count, runs the multistart search on a few length
vectors and tabulates the classified critical sets: label, split index,
value, circle radius, and the closing/diameter verdicts.
"""

import argparse

import numpy as np

from armvol import Label, SearchOptions, search_critical_points


def survey(lengths, restarts, seed):
    result = search_critical_points(lengths,
                                    SearchOptions(restarts=restarts, seed=seed))
    print(f"\nlengths {np.round(lengths, 4).tolist()}: "
          f"{len(result.records)} records, {result.failed} failed attempts")
    seen = set()
    for rec in result.records:
        cls = rec.classification
        key = (round(rec.value, 7), cls.label, cls.split)
        if key in seen:
            continue
        seen.add(key)
        parts = [f"  V = {rec.value:+.7f}", f"{cls.label.value:<13}"]
        if cls.label is Label.MIXED:
            parts.append(f"split {cls.split}")
        if cls.circle is not None:
            parts.append(f"R = {cls.circle.radius:.4f}")
        for name, verdict in (("closing", cls.closing),
                              ("diameter", cls.diameter),
                              ("zigzag", cls.zigzag)):
            if verdict is not None:
                parts.append(f"{name} {'ok' if verdict.ok else 'VIOLATED'}")
        print("  ".join(parts))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 5, 6])
    ap.add_argument("--restarts", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for n in args.sizes:
        for lengths in ([1.0] * n,
                        [1.0, 2.2] + [1.0] * (n - 2),
                        np.random.default_rng(100 + n).uniform(0.5, 1.5, n)):
            survey(np.asarray(lengths, dtype=float), args.restarts, args.seed)


if __name__ == "__main__":
    main()
