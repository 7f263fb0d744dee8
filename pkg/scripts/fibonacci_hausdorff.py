"""Hausdorff dimension estimates for the Fibonacci Hamiltonian from Suto covers."""
import argparse
import math
from dataclasses import dataclass

from spectra.fractal import hausdorff_dimension
from spectra.periodic import suto_cover


@dataclass
class HausdorffConfig:
    lam: float = 15.0
    n2: int = 6
    n1: int = 24
    pad: float = 0.5


def bounds(lam: float) -> tuple:
    """Known lower/upper dimension bounds, valid for lam >= 8."""
    num = math.log(1 + math.sqrt(2))
    return num / math.log(2 * lam + 22), num / math.log(0.5 * (lam - 4 + math.sqrt((lam - 4) ** 2 - 12)))


def run(cfg: HausdorffConfig):
    probe = suto_cover(cfg.lam, 3)
    window = (probe.bounds[0, 0] - cfg.pad, probe.bounds[-1, 1] + cfg.pad)
    scale = window[1] - window[0]

    def provider(k):
        level = 2
        while suto_cover(cfg.lam, level).error > scale * 2.0**-k:
            level += 1
        return suto_cover(cfg.lam, level)

    r = hausdorff_dimension(provider, cfg.n2, cfg.n1, window)
    lo, hi = bounds(cfg.lam)
    print(f"lambda={cfg.lam} n2={cfg.n2} n1={cfg.n1}: estimate {r.estimate:.4f}, bounds [{lo:.4f}, {hi:.4f}]")
    return r


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=15.0)
    ap.add_argument("--n2", type=int, default=6)
    ap.add_argument("--n1", type=int, default=24)
    a = ap.parse_args()
    for n1 in range(max(8, a.n1 - 8), a.n1 + 1, 4):
        run(HausdorffConfig(a.lam, a.n2, n1))
