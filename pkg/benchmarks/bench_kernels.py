"""Compare the compiled kernels with the numpy fallback on random inputs.

    python3 benchmarks/bench_kernels.py --boxes 2000 --assign 60 --repeat 5
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from pidgraph import _kernels_py as py

try:
    from pidgraph import _ckernels as cy
except ImportError:  # extension not built
    cy = None


def random_boxes(rng: np.random.Generator, n: int, extent: float = 4500.0) -> np.ndarray:
    xy = rng.uniform(0, extent, size=(n, 2))
    wh = rng.uniform(16, 160, size=(n, 2))
    return np.hstack([xy, xy + wh])


def _time(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def _check(name: str, a, b) -> None:
    if isinstance(a, tuple):
        for x, y in zip(a, b):
            _check(name, x, y)
        return
    if not np.allclose(a, b, rtol=0, atol=1e-12):
        raise AssertionError(f"{name}: backends disagree")


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--boxes", type=int, default=1500, help="boxes per side for the pairwise kernels")
    p.add_argument("--assign", type=int, default=60, help="side of the square assignment problem")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    a = random_boxes(rng, args.boxes)
    b = random_boxes(rng, args.boxes)
    cost = rng.random((args.assign, args.assign))
    cases = {
        "pairwise_iou": (a, b),
        "pairwise_giou": (a, b),
        "overlap_pairs": (a,),
        "linear_sum_assignment": (cost,),
    }

    print(f"{'kernel':<24}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, inputs in cases.items():
        f_py = getattr(py, name)
        t_py = _time(lambda: f_py(*inputs), args.repeat) * 1e3
        if cy is None:
            print(f"{name:<24}{t_py:>12.2f}{'n/a':>12}{'':>10}")
            continue
        f_cy = getattr(cy, name)
        _check(name, f_py(*inputs), f_cy(*inputs))
        t_cy = _time(lambda: f_cy(*inputs), args.repeat) * 1e3
        print(f"{name:<24}{t_py:>12.2f}{t_cy:>12.2f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
