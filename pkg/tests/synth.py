"""Deterministic synthetic monthly dataset used by the pipeline tests.

Eight positive variables with a shared stochastic trend, a cointegrated
pair, mixed integration orders, and enough columns for six principal
components.  Run as a script to regenerate tests/data/synthetic.csv.
"""

from __future__ import annotations

import numpy as np

from housecast.data import Dataset


def make_synthetic(n: int = 220, seed: int = 11) -> Dataset:
    rng = np.random.default_rng(seed)
    trend = np.cumsum(0.5 + rng.normal(size=n))

    ar = np.empty(n)
    ar[0] = 0.0
    for t in range(1, n):
        ar[t] = 0.6 * ar[t - 1] + rng.normal()

    target = 800.0 + 2.0 * trend + 12.0 * ar
    completions = 30.0 + 1.9 * trend + 10.0 * rng.normal(size=n)
    rate = 9.0 - 0.02 * trend + 0.4 * np.cumsum(rng.normal(size=n) * 0.2)
    supply_ar = np.empty(n)
    supply_ar[0] = 0.0
    for t in range(1, n):
        supply_ar[t] = 0.7 * supply_ar[t - 1] + rng.normal()
    supply = 6.0 + 0.8 * supply_ar + 0.005 * trend
    income = 500.0 + np.cumsum(np.cumsum(rng.normal(size=n) * 0.05)) + 0.5 * trend
    loans = 400.0 + 1.2 * trend + np.cumsum(rng.normal(size=n) * 0.8)
    cpi = 100.0 + np.cumsum(np.cumsum(rng.normal(size=n) * 0.02) + 0.2)
    spread_ar = np.empty(n)
    spread_ar[0] = 0.0
    for t in range(1, n):
        spread_ar[t] = 0.8 * spread_ar[t - 1] + rng.normal() * 0.3
    spread = 2.0 + spread_ar

    table = np.column_stack(
        [target, completions, rate, supply, income, loans, cpi, spread]
    )
    names = (
        "starts",
        "completions",
        "rate",
        "supply",
        "income",
        "loans",
        "cpi",
        "spread",
    )
    return Dataset(names=names, start=(2000, 1), table=table, sources=())


if __name__ == "__main__":
    import os

    from housecast.data import save_dataset_csv

    ds = make_synthetic()
    here = os.path.dirname(__file__)
    out = os.path.join(here, "data", "synthetic.csv")
    save_dataset_csv(ds, out)
    print(f"wrote {out} ({len(ds)} rows)")
