"""Regenerate the synthetic benchmark tables under data/.

Each table follows the MOOT header convention and mimics the shape of a
familiar benchmark family: five Scrum-simulator style grids (SS-A..SS-E),
a car table (auto93), a process-simulator table (pom3a), a small
high-dimensional effort table (nasa93dem), and a team-flow table (kanban).
All are deterministic: fixed seeds, fixed row order, integer-friendly
values, so the files can be rebuilt bit-for-bit with
`python scripts/make_data.py`.

The response surfaces are smooth basins plus mild ripple, which gives the
surrogates something learnable while keeping plenty of mediocre rows, and
each file's chebyshev distribution was shaped on purpose: a thin tail of
near-optimal rows (so uniform sampling rarely stumbles on them) under a
bulk of ordinary ones.
"""

from __future__ import annotations

import csv
import math
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data"


def write(name: str, header: list[str], rows: list[list]) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / name, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {name}: {len(rows)} rows x {len(header)} cols")


def _curve(p: float, pts: list[tuple[float, float]]) -> float:
    """Piecewise-linear quantile curve: maps a rank fraction to a loss level."""
    for (p0, t0), (p1, t1) in zip(pts, pts[1:]):
        if p <= p1:
            f = 0.0 if p1 == p0 else (p - p0) / (p1 - p0)
            return t0 + f * (t1 - t0)
    return pts[-1][1]


def gen_ss(name: str, shape: tuple[int, int, int], center, weights,
           delta: float, pts: list[tuple[float, float]], seed: int) -> None:
    """Scrum-simulator style full factorial grid with two goals.

    Quality falls off with weighted distance from a basin; ranking those
    distances and passing them through the quantile curve fixes how much
    of the file is near-optimal versus ordinary. The second goal's basin
    sits `delta` away from the first, so no row is perfect on both and
    the best compromise stays strictly above zero chebyshev.
    """
    rng = random.Random(seed)
    n1, n2, n3 = shape
    c1 = center
    c2 = (c1[0] - delta * 0.4, c1[1] + delta, c1[2] - delta)

    def dist(u, v, w, c):
        return (weights[0] * abs(u - c[0])
                + weights[1] * abs(v - c[1])
                + weights[2] * abs(w - c[2]))

    cells, d1s, d2s = [], [], []
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                a = round(i + rng.uniform(-0.3, 0.3), 2)
                b = round(j + rng.uniform(-0.3, 0.3), 2)
                c = round(k + rng.uniform(-0.3, 0.3), 2)
                u, v, w = a / (n1 - 1), b / (n2 - 1), c / (n3 - 1)
                cells.append((a, b, c))
                d1s.append(dist(u, v, w, c1))
                d2s.append(dist(u, v, w, c2))

    def rank_fractions(ds):
        order = sorted(range(len(ds)), key=lambda t: ds[t])
        p = [0.0] * len(ds)
        for pos, idx in enumerate(order):
            p[idx] = (pos + 0.5) / len(ds)
        return p

    p1, p2 = rank_fractions(d1s), rank_fractions(d2s)
    rows = []
    for idx, (i, j, k) in enumerate(cells):
        t1, t2 = _curve(p1[idx], pts), _curve(p2[idx], pts)
        vel = 96.0 - 80.0 * t1 + rng.gauss(0.0, 0.15)
        dfx = 4.0 + 46.0 * t2 + rng.gauss(0.0, 0.08)
        rows.append([i, j, k, round(vel, 2), round(max(dfx, 0.0), 2)])
    write(f"{name}.csv", ["Sprint", "Team", "Story", "Velocity+", "Defects-"],
          rows)


def gen_auto93(seed: int = 93) -> None:
    """Car records: 5 independent columns (one symbolic, some missing hp),
    three goals pulling in different directions."""
    rng = random.Random(seed)
    rows = []
    for _ in range(398):
        clndrs = rng.choice([3, 4, 4, 4, 4, 5, 6, 6, 8, 8])
        volume = int(rng.uniform(17, 57) * clndrs)
        hp = int(18 * clndrs + volume * 0.18 + rng.gauss(0, 12))
        model = rng.randint(70, 82)
        origin = rng.choice(["1", "1", "1", "2", "3"])
        lbs = int(1100 + volume * 5.2 + hp * 3.5 + rng.gauss(0, 160))
        acc = round(max(8.0, 26.0 - hp * 0.065 + (lbs - 2800) * 0.0016
                        + rng.gauss(0, 1.1)), 1)
        mpg = 52.0 - lbs * 0.0095 - hp * 0.04 + (model - 70) * 0.55 \
            + (2.0 if origin == "3" else 0.0) + rng.gauss(0, 1.6)
        mpg = max(5, int(round(mpg / 5.0)) * 5)
        hp_cell = "?" if rng.random() < 0.015 else hp
        rows.append([clndrs, volume, hp_cell, model, origin, lbs, acc, mpg])
    write("auto93.csv",
          ["Clndrs", "Volume", "Hp", "Model", "origin", "Lbs-", "Acc+", "Mpg+"],
          rows)


def gen_pom3a(seed: int = 33) -> None:
    """Process-simulator style: nine numeric knobs, three goals."""
    rng = random.Random(seed)
    rows = []
    for _ in range(500):
        culture = round(rng.uniform(0.1, 0.9), 3)
        crit = round(rng.uniform(0.82, 1.26), 3)
        critmod = rng.randint(2, 10)
        known = round(rng.uniform(0.4, 1.0), 3)
        depend = rng.randint(0, 100)
        dyna = round(rng.uniform(1.0, 50.0), 2)
        size = rng.randint(30, 300)
        plan = rng.randint(0, 5)
        team = rng.randint(1, 44)
        load = (0.55 * (1 - known) + 0.25 * (depend / 100.0)
                + 0.2 * (dyna / 50.0))
        skill = 0.6 * culture + 0.4 * (team / 44.0)
        cost = (size * crit * (0.8 + 1.6 * load) * (1.35 - 0.5 * skill)
                * (1 + 0.05 * plan) + rng.gauss(0, 14))
        score = (88.0 * skill * known * (1 - 0.35 * load)
                 - 1.1 * critmod + rng.gauss(0, 2.2))
        completion = (0.35 + 0.6 * known * (1 - 0.4 * load)
                      + 0.002 * plan + rng.gauss(0, 0.03))
        rows.append([culture, crit, critmod, known, depend, dyna, size, plan,
                     team, round(max(cost, 8.0), 1),
                     round(max(score, 0.0), 2),
                     round(min(max(completion, 0.05), 1.0), 3)])
    write("pom3a.csv",
          ["Culture", "Criticality", "CriticalityModifier", "InitialKnown",
           "InterDependency", "Dynamism", "Size", "Plan", "TeamSize",
           "Cost-", "Score+", "Completion+"],
          rows)


COCOMO_DRIVERS = ["Prec", "Flex", "Resl", "Team", "Pmat", "Rely", "Data",
                  "Cplx", "Ruse", "Time", "Stor", "Pvol", "Acap", "Pcap",
                  "Pcon", "Apex", "Plex", "Ltex", "Tool", "Sced"]


def gen_nasa93dem(seed: int = 9) -> None:
    """Effort-estimation style: 22 independent columns (two symbolic),
    93 rows, four goals. High-dimensional stratum."""
    rng = random.Random(seed)
    helps = {"Acap", "Pcap", "Apex", "Plex", "Ltex", "Tool", "Pmat",
             "Prec", "Flex", "Resl", "Team", "Pcon", "Sced"}
    rows = []
    for _ in range(93):
        drivers = {d: rng.randint(1, 6) for d in COCOMO_DRIVERS}
        center = rng.choice(["ames", "jpl", "goddard", "langley"])
        mode = rng.choice(["embedded", "organic", "semidetached"])
        kloc = round(rng.uniform(2.0, 120.0), 1)
        effort_mult = 1.0
        for d, level in drivers.items():
            tilt = -0.045 if d in helps else 0.05
            effort_mult *= 1.0 + tilt * (level - 3.5)
        base = {"embedded": 3.6, "organic": 2.4, "semidetached": 3.0}[mode]
        effort = base * (kloc ** 1.08) * effort_mult * rng.uniform(0.9, 1.1)
        months = 2.5 * (effort ** 0.35) * rng.uniform(0.95, 1.05)
        defects = effort * rng.uniform(8.0, 13.0) * (1.3 - 0.04 * drivers["Pmat"])
        risk = (drivers["Cplx"] + drivers["Time"] + drivers["Stor"]
                + (6 - drivers["Acap"]) + (6 - drivers["Pcap"])) \
            * rng.uniform(0.8, 1.2)
        rows.append([center, mode] + [drivers[d] for d in COCOMO_DRIVERS]
                    + [round(effort, 1), round(months, 1),
                       int(defects), round(risk, 1)])
    write("nasa93dem.csv",
          ["center", "mode"] + COCOMO_DRIVERS
          + ["Effort-", "Months-", "Defects-", "Risk-"],
          rows)


def gen_kanban(seed: int = 8) -> None:
    """Team-flow table: five process knobs, two flow goals.

    Mostly a flat, noisy mid-range surface. Sixteen sweet spots hide in it,
    each surrounded by a loose shell of clearly-good configurations whose
    centroid sits on the sweet spot itself, so local cues around any shell
    member point inward. Shell members are common; sweet spots are rare.
    """
    rng = random.Random(seed)
    dims, n, per, offset = 5, 1000, 16, 0.07
    centers: list[list[float]] = []
    while len(centers) < 16:
        c = [rng.uniform(0.2, 0.8) for _ in range(dims)]
        if all(max(abs(a - b) for a, b in zip(c, o)) > 0.12 for o in centers):
            centers.append(c)
    pool = []
    for c in centers:
        pool.append(([round(v, 3) for v in c], rng.uniform(0.88, 0.97)))
        for _ in range(per):
            d = [rng.gauss(0, 1) for _ in range(dims)]
            nn = math.sqrt(sum(t * t for t in d)) or 1.0
            ax = [round(v + offset * t / nn, 3) for v, t in zip(c, d)]
            pool.append((ax, rng.uniform(0.56, 0.62)))
    while len(pool) < n:
        x = [round(rng.uniform(0.13, 0.87), 3) for _ in range(dims)]
        pool.append((x, rng.uniform(0.30, 0.55)))
    rng.shuffle(pool)
    rows = [x + [round(20.0 + 75.0 * q + rng.gauss(0.0, 0.08), 2),
                 round(80.0 - 60.0 * q + rng.gauss(0.0, 0.048), 2)]
            for x, q in pool]
    write("kanban.csv",
          ["Wip", "Batch", "Swarm", "Review", "Defer", "Thruput+", "Delay-"],
          rows)


def gen_toy() -> None:
    """Twelve rows for docs and quick smoke tests."""
    rows = [
        [4, 16, "ssd", 200, 9], [2, 8, "hdd", 100, 4], [8, 32, "ssd", 400, 16],
        [1, 4, "hdd", 60, 2], [6, 16, "ssd", 300, 11], [2, 16, "hdd", 150, 6],
        [4, 8, "ssd", 180, 8], [8, 16, "hdd", 350, 14], [1, 8, "ssd", 90, 3],
        [6, 32, "ssd", 340, 13], [2, 4, "hdd", 80, 3], [4, 32, "hdd", 260, 10],
    ]
    write("toy.csv", ["Cores", "Ram", "kind", "Price-", "Speed+"], rows)


def main() -> None:
    gen_ss("SS-A", (14, 12, 9), center=(0.58, 0.45, 0.62),
           weights=(2.5, 0.5, 0.3), delta=0.10,
           pts=[(0.0, 0.02), (0.015, 0.055), (0.06, 0.10), (0.5, 0.14),
                (1.0, 1.0)],
           seed=41)
    gen_ss("SS-B", (12, 9, 9), center=(0.25, 0.65, 0.45),
           weights=(1.2, 1.8, 0.5), delta=0.15,
           pts=[(0.0, 0.06), (0.05, 0.13), (0.5, 0.26), (1.0, 1.0)],
           seed=42)
    gen_ss("SS-C", (11, 10, 7), center=(0.3, 0.7, 0.5),
           weights=(1.0, 1.3, 0.6), delta=0.12,
           pts=[(0.0, 0.05), (0.04, 0.10), (0.5, 0.22), (1.0, 1.0)],
           seed=43)
    gen_ss("SS-D", (13, 8, 8), center=(0.6, 0.2, 0.4),
           weights=(0.8, 1.5, 0.7), delta=0.13,
           pts=[(0.0, 0.04), (0.045, 0.12), (0.5, 0.20), (1.0, 1.0)],
           seed=44)
    gen_ss("SS-E", (10, 10, 10), center=(0.45, 0.55, 0.75),
           weights=(1.4, 0.6, 1.0), delta=0.11,
           pts=[(0.0, 0.045), (0.04, 0.11), (0.5, 0.24), (1.0, 1.0)],
           seed=45)
    gen_auto93()
    gen_pom3a()
    gen_nasa93dem()
    gen_kanban()
    gen_toy()


if __name__ == "__main__":
    main()
