"""The Liouville-consistency sweep, driven through the command line layer.

Run with ``python3 demos/liouville_sweep.py [OUTDIR]``.  Every cell relaxes
a scalar start on flat or hyperbolic space and asks whether the result
could contradict the Liouville statement.  The solver only ever finds
constants here, so every verdict is CONSISTENT; a single INCONSISTENT
would point at a defect in the code, not in the theorem.
"""

import sys
import time
from pathlib import Path

from pgl_lab.cli import run
from pgl_lab.io import read_csv


def main(out):
    t0 = time.perf_counter()
    code, status, reason = run("sweep", "bundled:liouville_sweep", out=str(out))
    print(f"sweep finished in {time.perf_counter() - t0:.1f} s: exit={code} status={status} ({reason})")
    idx = read_csv(Path(out) / "index.csv", numeric=False)
    print(f"{'p':>4}{'m':>3} {'kind':<10}{'start':>6}  {'energy':>12}  liouville")
    for i in range(len(idx["cell"])):
        print(f"{idx['functional.p'][i]:>4}{idx['geometry.m'][i]:>3} {idx['geometry.kind'][i]:<10}"
              f"{idx['field.value'][i]:>6}  {float(idx['energy'][i]):12.4e}  "
              f"{idx['liouville'][i]} ({idx['liouville_reason'][i]})")
    run("report", "bundled:liouville_sweep", out=str(out))


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/liouville_sweep"))
