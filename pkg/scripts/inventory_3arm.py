#!/usr/bin/env python3
"""Reproduce the unit 3-arm critical inventory on both parameter spaces.

Runs the multistart search on the full sphere-times-sphere space and on the
circle-times-sphere space (second direction confined to the xy-plane),
prints the found critical sets with their Morse data, assembles the
critical inventory of each space, and verifies the Bott-Morse divisibility
identity against the known manifold Poincare polynomials.
"""

import argparse
from collections import defaultdict

import numpy as np

from armvol import (IntPolynomial, Mode, SearchOptions, bott_morse_check,
                    datum_from_spectrum, search_critical_points)


def run(lengths, mode, restarts, seed):
    opts = SearchOptions(restarts=restarts, seed=seed, mode=mode)
    result = search_critical_points(lengths, opts)
    print(f"\n== mode {mode.value}: {len(result.records)} records "
          f"({result.converged}/{result.attempts} attempts converged)")
    groups = defaultdict(list)
    for rec in result.records:
        key = (round(rec.value, 9), rec.morse.morse_index, rec.morse.nullity)
        groups[key].append(rec)
    for (value, index, nullity), members in sorted(groups.items(),
                                                   reverse=True):
        label = members[0].classification.label.value \
            if members[0].classification else "-"
        print(f"  V = {value:+.9f}  index {index}  nullity {nullity}  "
              f"records {len(members):3d}  label {label}")
    return result, groups


def sphere_sphere_inventory(groups):
    """One datum per critical set: circles collapse to canonical records."""
    data = []
    for (_, index, nullity), members in groups.items():
        for _ in members:
            data.append(datum_from_spectrum(index, nullity))
    return data


def circle_sphere_inventory(groups):
    """The nullity-1 records sample two circles (split by the sign of the
    second direction along the first edge); isolated points stand alone."""
    data = []
    for (_, index, nullity), members in groups.items():
        if nullity == 0:
            data += [datum_from_spectrum(index, 0)] * len(members)
        else:
            signs = {np.sign(rec.configuration.directions[1] @ [1, 0, 0])
                     for rec in members}
            data += [datum_from_spectrum(index, 1)] * len(signs)
    return data


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--restarts", type=int, default=120)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    _, full_groups = run([1, 1, 1], Mode.FULL, args.restarts, args.seed)
    inventory = sphere_sphere_inventory(full_groups)
    check = bott_morse_check(inventory, IntPolynomial((1, 0, 2, 0, 1)))
    print(f"  Bott-Morse check vs (1+t^2)^2: R(t) = {check.quotient}  "
          f"{'OK' if check.ok else 'FAIL'}")

    _, plane_groups = run([1, 1, 1], Mode.PLANE_B, args.restarts, args.seed)
    inventory = circle_sphere_inventory(plane_groups)
    check = bott_morse_check(inventory, IntPolynomial((1, 1, 1, 1)))
    print(f"  Bott-Morse check vs (1+t)(1+t^2): R(t) = {check.quotient}  "
          f"{'OK' if check.ok else 'FAIL'}")


if __name__ == "__main__":
    main()
