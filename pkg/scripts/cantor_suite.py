"""Dimension, measure and tower checks on middle-thirds Cantor covers."""
import argparse
import math

import numpy as np

from spectra.fractal import cantor_cover, fit_box_dimension, hausdorff_dimension, scaling_series
from spectra.intervals import component_count, measure
from spectra.metrics import decide_measure_zero


def main(depth: int, n2: int, n1: int, trials: int):
    c = cantor_cover(depth)
    s = scaling_series(lambda d: c, 3.0 ** -np.arange(1, depth + 1), trials=trials)
    fit = fit_box_dimension(s, (0, depth - 1))
    est = hausdorff_dimension(lambda k: cantor_cover(math.ceil(k * math.log(2) / math.log(3))), n2, n1).estimate
    print(f"box slope {fit.slope:.5f}  Hausdorff {est:.4f}  (log2/log3 = {math.log(2) / math.log(3):.5f})")
    print(f"measure {measure(c):.6g}  components {component_count(c)}  measure-zero tower {decide_measure_zero(cantor_cover, 10, depth)}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=10)
    ap.add_argument("--n2", type=int, default=6)
    ap.add_argument("--n1", type=int, default=14)
    ap.add_argument("--trials", type=int, default=100)
    a = ap.parse_args()
    main(a.depth, a.n2, a.n1, a.trials)
