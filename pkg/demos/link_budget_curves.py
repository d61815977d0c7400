"""Downlink transmission vs. elevation and the drift limit on train length.

First half: channel efficiency for a 10 cm transmit / 1 m receive
telescope pair at 1550 nm, swept over elevation for a few orbit
altitudes.  Slant range comes from spherical geometry, the atmospheric
term from the plane-parallel airmass.  Second half: how many photons of
a 1 MHz train still land inside a 1.5 ns coincidence window as radial
velocity grows.

Usage: python demos/link_budget_curves.py [--out DIR] [--plot]
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from satqlink import (
    GroundStation,
    LinkParams,
    OpticalParams,
    PassSample,
    SatelliteConfig,
    link_budget,
    max_train_length,
)
from satqlink.constants import EARTH_RADIUS

ALTITUDES_M = (400e3, 500e3, 800e3)
ELEVATIONS_DEG = np.arange(20.0, 90.1, 2.5)


def slant_range_m(altitude_m: float, elevation_deg: float) -> float:
    # law of cosines on the Earth-center / station / satellite triangle
    r = EARTH_RADIUS
    el = math.radians(elevation_deg)
    return math.sqrt((r + altitude_m) ** 2 - (r * math.cos(el)) ** 2) - r * math.sin(el)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("demos/out"))
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    station = GroundStation("demo", 0.0, 0.0)
    optics = OpticalParams(wavelength_m=1550e-9, zenith_atmospheric_transmission=0.85)

    table: dict[float, np.ndarray] = {}
    for altitude in ALTITUDES_M:
        sat = SatelliteConfig(orbit_altitude_m=altitude)
        etas = []
        for el in ELEVATIONS_DEG:
            dist = slant_range_m(altitude, float(el))
            sample = PassSample(t_s=0.0, distance_m=dist, elevation_deg=float(el),
                                radial_velocity_mps=0.0, eta=0.0, visible=True)
            etas.append(link_budget(sample, sat, station, optics))
        table[altitude] = np.array(etas)

    csv_path = args.out / "link_budget.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("elevation_deg," + ",".join(f"eta_{int(a / 1e3)}km" for a in ALTITUDES_M) + "\n")
        for i, el in enumerate(ELEVATIONS_DEG):
            fh.write(f"{el:g}," + ",".join(f"{table[a][i]:.6g}" for a in ALTITUDES_M) + "\n")
    print(csv_path)

    print("elevation   " + "  ".join(f"{int(a / 1e3)} km" for a in ALTITUDES_M))
    for el in (20.0, 45.0, 90.0):
        i = int(np.argmin(np.abs(ELEVATIONS_DEG - el)))
        cells = "  ".join(f"{table[a][i]:.2e}" for a in ALTITUDES_M)
        print(f"{el:7.0f}  {cells}")

    link = LinkParams(m_sat=100)
    speeds = np.linspace(500.0, 8000.0, 16)
    print("\n|v_r| [m/s]  max train length (cap 100 slots)")
    for v in speeds[::3]:
        bound = max_train_length(float(v), link)
        usable = min(100, int(bound) + 1)
        print(f"{v:10.0f}  {bound:7.0f}  -> {usable} photons usable")

    if args.plot:
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            print("matplotlib not installed, skipping the figure")
            return
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
        for altitude, etas in table.items():
            ax1.semilogy(ELEVATIONS_DEG, etas, label=f"{int(altitude / 1e3)} km")
        ax1.set_xlabel("elevation [deg]")
        ax1.set_ylabel("channel efficiency")
        ax1.legend()
        bounds = [min(100, int(max_train_length(float(v), link)) + 1) for v in speeds]
        ax2.step(speeds, bounds, where="post")
        ax2.set_xlabel("|radial velocity| [m/s]")
        ax2.set_ylabel("usable photons of a 100-slot train")
        fig.tight_layout()
        fig.savefig(args.out / "link_budget_curves.png", dpi=150)
        print(args.out / "link_budget_curves.png")


if __name__ == "__main__":
    main()
