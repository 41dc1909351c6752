"""Regenerate the shipped example data under src/dmsuc/data.

Writes the RTS-style 24-bus system, the 2-bus toy system, synthetic
cyclostationary load histories with realized continuations, a reserve
pricing file and an example run config. Tree libraries are built from
these files with ``dmsuc build-library`` (see README).

    python scripts/generate_data.py [--out src/dmsuc/data] [--seed 2016]
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
import yaml

from dmsuc.io import save_system, save_timeseries, system_from_dict

# IEEE RTS-24 topology: (from, to, reactance p.u., continuous rating MW)
RTS_LINES = [
    (1, 2, 0.0139, 175), (1, 3, 0.2112, 175), (1, 5, 0.0845, 175), (2, 4, 0.1267, 175),
    (2, 6, 0.1920, 175), (3, 9, 0.1190, 175), (3, 24, 0.0839, 400), (4, 9, 0.1037, 175),
    (5, 10, 0.0883, 175), (6, 10, 0.0605, 175), (7, 8, 0.0614, 175), (8, 9, 0.1651, 175),
    (8, 10, 0.1651, 175), (9, 11, 0.0839, 400), (9, 12, 0.0839, 400), (10, 11, 0.0839, 400),
    (10, 12, 0.0839, 400), (11, 13, 0.0476, 500), (11, 14, 0.0418, 500), (12, 13, 0.0476, 500),
    (12, 23, 0.0966, 500), (13, 23, 0.0865, 500), (14, 16, 0.0389, 500), (15, 16, 0.0173, 500),
    (15, 21, 0.0490, 500), (15, 21, 0.0490, 500), (15, 24, 0.0519, 500), (16, 17, 0.0259, 500),
    (16, 19, 0.0231, 500), (17, 18, 0.0144, 500), (17, 22, 0.1053, 500), (18, 21, 0.0259, 500),
    (18, 21, 0.0259, 500), (19, 20, 0.0396, 500), (19, 20, 0.0396, 500), (20, 23, 0.0216, 500),
    (20, 23, 0.0216, 500), (21, 22, 0.0678, 500),
]

# peak bus loads, MW (used as fixed load shares)
RTS_BUS_LOAD = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175, 10: 195,
                13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128}

# unit types: p_min, p_max, ramp (MW/h), c1 $/MWh, c0 $/h, startup $, shutdown $, min_up, min_down
RTS_TYPES = {
    "U12": (2.4, 12, 60, 56.6, 86.4, 68.0, 0.0, 2, 2),
    "U20": (16, 20, 180, 130.0, 400.7, 5.0, 0.0, 1, 1),
    "U50": (10, 50, 300, 0.0, 0.0, 0.0, 0.0, 1, 1),
    "U76": (15.2, 76, 120, 16.1, 212.3, 1000.0, 0.0, 8, 4),
    "U100": (25, 100, 420, 43.7, 781.5, 1400.0, 0.0, 8, 8),
    "U155": (54.3, 155, 180, 12.4, 382.2, 1600.0, 0.0, 8, 8),
    "U197": (69, 197, 180, 48.6, 832.8, 2300.0, 0.0, 12, 10),
    "U350": (140, 350, 240, 11.9, 665.1, 3000.0, 0.0, 24, 48),
    "U400": (100, 400, 1200, 4.4, 395.4, 5500.0, 0.0, 1, 1),
    "SYNC": (0, 0, 0, 0.0, 0.0, 0.0, 0.0, 1, 1),
}

# (bus, type, count); the bus-14 synchronous condenser makes 33 units
RTS_UNITS = [(1, "U20", 2), (1, "U76", 2), (2, "U20", 2), (2, "U76", 2), (7, "U100", 3),
             (13, "U197", 3), (14, "SYNC", 1), (15, "U12", 5), (15, "U155", 1), (16, "U155", 1),
             (18, "U400", 1), (21, "U400", 1), (22, "U50", 6), (23, "U155", 2), (23, "U350", 1)]


def rts_system() -> dict:
    total = sum(RTS_BUS_LOAD.values())
    shares = {b: RTS_BUS_LOAD.get(b, 0) / total for b in range(1, 25)}
    # fix round-off so the shares sum to one exactly
    shares[18] += 1.0 - sum(shares.values())
    gens = []
    for bus, kind, count in RTS_UNITS:
        pmin, pmax, ramp, c1, c0, su, sd, up, down = RTS_TYPES[kind]
        for k in range(count):
            gens.append({"id": f"{bus}_{kind}_{k + 1}", "bus": bus, "p_min": pmin, "p_max": pmax,
                         "ramp_up": ramp, "ramp_down": ramp, "c1": c1, "c0": c0,
                         "startup_cost": su, "shutdown_cost": sd, "min_up": up,
                         "min_down": down})
    lines = [{"id": f"L{i + 1:02d}", "from": a, "to": b, "limit": float(lim), "reactance": x}
             for i, (a, b, x, lim) in enumerate(RTS_LINES)]
    return {"name": "RTS-24 style", "slack_bus": 13,
            "buses": [{"id": b, "load_share": shares[b]} for b in range(1, 25)],
            "lines": lines, "generators": gens}


def toy_system() -> dict:
    return {
        "name": "toy 2-bus",
        "slack_bus": 1,
        "buses": [{"id": 1, "load_share": 0.3}, {"id": 2, "load_share": 0.7}],
        "lines": [{"id": "L1", "from": 1, "to": 2, "limit": 100.0, "reactance": 0.1}],
        "generators": [
            {"id": "base", "bus": 1, "p_min": 40.0, "p_max": 120.0, "ramp_up": 80.0,
             "ramp_down": 80.0, "c1": 10.0, "c0": 100.0, "startup_cost": 500.0,
             "shutdown_cost": 100.0, "min_up": 3, "min_down": 2},
            {"id": "mid", "bus": 2, "p_min": 20.0, "p_max": 80.0, "ramp_up": 60.0,
             "ramp_down": 60.0, "c1": 25.0, "c0": 50.0, "startup_cost": 150.0,
             "shutdown_cost": 30.0, "min_up": 2, "min_down": 2},
            {"id": "peak", "bus": 2, "p_min": 0.0, "p_max": 60.0, "ramp_up": 60.0,
             "ramp_down": 60.0, "c1": 60.0, "c0": 10.0, "startup_cost": 20.0,
             "shutdown_cost": 0.0, "min_up": 1, "min_down": 1},
        ],
    }


def daily_load(days: int, low: float, high: float, rng: np.random.Generator,
               noise: float = 0.04, rho: float = 0.8) -> np.ndarray:
    """Hourly load with a two-peak daily profile, day-to-day level shifts and AR(1) noise."""
    h = np.arange(24)
    shape = (0.55 + 0.30 * np.exp(-0.5 * ((h - 11) / 3.0) ** 2)
             + 0.40 * np.exp(-0.5 * ((h - 19) / 2.5) ** 2))
    shape = (shape - shape.min()) / (shape.max() - shape.min())
    level = 1.0 + 0.05 * rng.standard_normal(days)
    eps = np.zeros(days * 24)
    for t in range(1, eps.size):
        eps[t] = rho * eps[t - 1] + noise * np.sqrt(1 - rho ** 2) * rng.standard_normal()
    profile = np.tile(shape, days) * np.repeat(level, 24)
    return low + (high - low) * np.clip(profile + eps, -0.05, 1.05)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/dmsuc/data"))
    ap.add_argument("--seed", type=int, default=2016)
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    save_system(system_from_dict(rts_system()), out / "rts24.yaml")
    save_system(system_from_dict(toy_system()), out / "toy_2bus.yaml")

    toy = daily_load(62, 70.0, 200.0, rng)
    save_timeseries(out / "toy_load_history.csv", toy[:60 * 24])
    save_timeseries(out / "toy_realized.csv", toy[60 * 24:])
    rts = daily_load(62, 1500.0, 2600.0, rng)
    save_timeseries(out / "rts_load_history.csv", rts[:60 * 24])
    save_timeseries(out / "rts_realized.csv", rts[60 * 24:])

    (out / "pricing.yaml").write_text(yaml.safe_dump(
        {"shortage_price": None, "surplus_penalty": None, "surplus_ratio": 0.1}, sort_keys=False))
    (out / "toy_config.yaml").write_text(yaml.safe_dump({
        "data": "toy_load_history.csv", "system": "toy_2bus.yaml", "library": "toy_library",
        "realized": "toy_realized.csv", "pricing": "pricing.yaml", "P": 24, "T": 3, "c": 2,
        "N": 500, "seed": 7, "epochs": 4, "mip_gap": 1e-6, "backend": "internal",
    }, sort_keys=False))


if __name__ == "__main__":
    main()
