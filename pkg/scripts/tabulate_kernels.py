#!/usr/bin/env python3
"""Tabulate the three kernel families side by side for a given tree.

Example:
    python3 scripts/tabulate_kernels.py --q 2 --t 0.5 --radius 20
prints one row per distance k with the heat value, the stable value
(alpha = 1), and the wave-type value (nu = 0.5), plus cumulative masses.
"""

import argparse

from treeheat import KernelFamily, TreeGeometry, tabulate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=int, default=2, help="branching number (1 = integer line)")
    ap.add_argument("--t", type=float, default=0.5, help="time parameter")
    ap.add_argument("--alpha", type=float, default=1.0, help="stable exponent in (0, 2)")
    ap.add_argument("--nu", type=float, default=0.5, help="wave-type parameter > 0")
    ap.add_argument("--radius", type=int, default=20, help="largest distance tabulated")
    args = ap.parse_args()

    geom = TreeGeometry(args.q, args.radius)
    families = [
        ("heat", KernelFamily.heat()),
        (f"stable(a={args.alpha})", KernelFamily.stable(args.alpha)),
        (f"wave(nu={args.nu})", KernelFamily.wave(args.nu)),
    ]
    tables = [(name, tabulate(geom, fam, args.t)) for name, fam in families]

    header = "k  sphere" + "".join(f"  {name:>22}" for name, _ in tables)
    print(header)
    for k in range(args.radius + 1):
        sphere = geom.sphere_size(k)
        row = f"{k:<3d}{sphere:>6d}"
        for _, tab in tables:
            row += f"  {tab.values[k]:22.15e}"
        print(row)
    masses = "  ".join(f"{name}: {tab.mass():.15f}" for name, tab in tables)
    print(f"\ntotal mass within radius {args.radius}:  {masses}")


if __name__ == "__main__":
    main()
