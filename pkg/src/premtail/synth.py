"""Synthetic monthly premium data for ten fictitious insurers.

Each insurer's series is drawn from a GEV distribution conditioned on being
positive, with shapes between 0 and 0.71 and scales from about 30 to 150.
The bundled ``data/premiums_synthetic.csv`` is
``write_synthetic_csv(path, seed=20031)``.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from .distributions import GevParams
from .numerics import SeededRng

__all__ = ["GENERATORS", "DEFAULT_SEED", "month_range", "synthetic_series", "write_synthetic_csv",
           "bundled_fixture"]

DEFAULT_SEED = 20031
START, END = "2003-04", "2017-12"

# (shape, location, scale)
GENERATORS: Dict[str, Tuple[float, float, float]] = {
    "Insurer A": (0.368, 53.335, 30.848),
    "Insurer B": (0.625, 57.601, 36.772),
    "Insurer C": (0.008, 117.728, 66.970),
    "Insurer D": (0.378, 84.508, 57.462),
    "Insurer E": (0.264, 190.516, 153.200),
    "Insurer F": (0.285, 139.234, 98.745),
    "Insurer G": (0.706, 84.998, 82.215),
    "Insurer H": (0.685, 49.846, 33.423),
    "Insurer I": (0.198, 160.477, 131.428),
    "Insurer J": (0.053, 138.016, 130.343),
}


def month_range(start: str = START, end: str = END) -> List[str]:
    y, m = map(int, start.split("-"))
    y_end, m_end = map(int, end.split("-"))
    out = []
    while (y, m) <= (y_end, m_end):
        out.append(f"{y:04d}-{m:02d}")
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


def synthetic_series(model: GevParams, n: int, rng: SeededRng) -> np.ndarray:
    """``n`` GEV draws conditioned on ``x > 0``, rounded to three decimals."""
    floor = float(model.cdf(0.0))
    u = floor + (1.0 - floor) * rng.uniform(n)
    x = np.round(model.quantile(u), 3)
    return np.maximum(x, 0.001)


def write_synthetic_csv(path: Union[str, Path], seed: int = DEFAULT_SEED) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    months = month_range()
    root = SeededRng(seed)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["company", "period", "premium"])
        for i, (company, params) in enumerate(GENERATORS.items()):
            values = synthetic_series(GevParams(*params), len(months), root.spawn(i))
            for period, value in zip(months, values):
                writer.writerow([company, period, f"{value:.3f}"])
    return path


def bundled_fixture() -> Path:
    return Path(__file__).parent / "data" / "premiums_synthetic.csv"
