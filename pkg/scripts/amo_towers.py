"""Measure and capacity of almost Mathieu covers along golden-ratio convergents."""
import argparse
import csv
from dataclasses import dataclass, field
from pathlib import Path

from spectra.intervals import component_count, measure
from spectra.metrics import capacity_details
from spectra.periodic import amo_union_spectrum, golden_convergents


@dataclass
class TowerConfig:
    couplings: list = field(default_factory=lambda: [0.25, 0.5, 0.75])
    q_max: int = 610
    out: Path = Path("out/amo_towers.csv")


def run(cfg: TowerConfig):
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    with cfg.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "p", "q", "measure", "components", "capacity", "capacity_error"])
        for lam in cfg.couplings:
            for p, q in golden_convergents(cfg.q_max):
                c = amo_union_spectrum(lam, p, q)
                cap = capacity_details(c)
                w.writerow([lam, p, q, measure(c), component_count(c), cap.value, cap.error_estimate])
            print(f"lambda={lam}: measure {measure(c):.6f} (limit {4 * abs(1 - lam):.2f}), capacity {cap.value:.6f}")
    return cfg.out


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--couplings", default="0.25,0.5,0.75")
    ap.add_argument("--q-max", type=int, default=610)
    ap.add_argument("--out", type=Path, default=Path("out/amo_towers.csv"))
    a = ap.parse_args()
    run(TowerConfig([float(x) for x in a.couplings.split(",")], a.q_max, a.out))
