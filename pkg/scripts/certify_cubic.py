#!/usr/bin/env python3
"""Certify the two-chart cubic-transition atlas at orders 1..3.

Runs the full pipeline (validation, lift, projector identities, holonomy,
vertical exactness, admissibility, diagonal hamiltonian) for the
pushforward-consistent metric `g`, then shows the mismatched metric
`g_bad` failing its holonomy check.
"""

import pathlib
import sys

from folijet.cli import main

ATLAS = str(pathlib.Path(__file__).resolve().parent.parent
            / "atlases" / "cubic.json")


def run():
    codes = []
    for order in (1, 2, 3):
        print(f"== metric g, order {order} ==")
        codes.append(main(["certify", ATLAS, "--metric", "g",
                           "--order", str(order), "--samples", "10"]))
    print("== negative control: metric g_bad, order 2 ==")
    bad = main(["certify", ATLAS, "--metric", "g_bad", "--order", "2",
                "--samples", "5"])
    print(f"good runs exit codes: {codes}, negative control: {bad}")
    return 0 if all(c == 0 for c in codes) and bad == 1 else 1


if __name__ == "__main__":
    sys.exit(run())
