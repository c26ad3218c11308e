#!/usr/bin/env python3
"""Run the numerical verification suite and print a summary table.

Example:
    python3 scripts/run_verification.py                 # all checks
    python3 scripts/run_verification.py semigroup-law flow-conjugation
    python3 scripts/run_verification.py --json out.json # also write JSON

Exit status is 0 when every selected check passes, 3 otherwise.
"""

import argparse
import sys

from treeheat.cli import atomic_write
from treeheat.verify import ALL_CHECKS, reports_to_json, run_suite


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("checks", nargs="*", help="check ids (default: all)")
    ap.add_argument("--json", metavar="PATH", help="write the JSON report here")
    args = ap.parse_args()

    ids = args.checks or list(ALL_CHECKS)
    unknown = [c for c in ids if c not in ALL_CHECKS]
    if unknown:
        ap.error(f"unknown checks: {', '.join(unknown)}; "
                 f"available: {', '.join(ALL_CHECKS)}")

    reports = run_suite(ids)
    width = max(len(c) for c in ids)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        detail = r.error or ", ".join(
            f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}"
            for k, v in sorted(r.measured.items())
        )
        print(f"{r.check_id:<{width}}  {status}  [{r.runtime_ms:6.0f} ms]  {detail}")

    if args.json:
        atomic_write(args.json, reports_to_json(reports))
        print(f"\nreport written to {args.json}")

    return 0 if all(r.passed for r in reports) else 3


if __name__ == "__main__":
    sys.exit(main())
