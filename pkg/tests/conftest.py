import numpy as np


def random_ecp_list(rng: np.random.Generator, span: float = 3.0, max_size: int = 9) -> list[float]:
    """Sorted anchor list with the spacing floor respected, 0 excluded.

    Points closer than 2e-6 to a kept point or to the auto-inserted 0 are
    dropped, so any draw builds cleanly.
    """
    size = int(rng.integers(1, max_size + 1))
    pts = np.sort(rng.uniform(-span, span, size))
    keep: list[float] = []
    for p in pts:
        if (not keep or p - keep[-1] >= 2e-6) and abs(p) >= 2e-6:
            keep.append(float(p))
    return keep or [1.0]
