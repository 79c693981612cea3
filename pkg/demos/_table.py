"""Shared pretty-printer for the demo scripts."""


def show(title, rows, cols=("h", "cells", "l1", "l1_rate", "bv", "bv_rate")):
    print(f"\n{title}")
    print("  ".join(f"{c:>9}" for c in cols))
    for r in rows:
        vals = []
        for c in cols:
            v = getattr(r, c)
            vals.append(f"{'-':>9}" if v is None else f"{v:>9d}" if isinstance(v, int)
                        else f"{v:>9.3g}")
        print("  ".join(vals))
