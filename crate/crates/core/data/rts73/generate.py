"""Writes the three-area 73-bus fixture (nodes, lines, generators, profile).

Each area is a copy of the 24-bus reliability test topology; bus b of area a
gets id 100a + b. A hub bus 325 and six ties join the areas. Flow limits are
scaled by LIMIT_SCALE so that transfers congest at peak.
"""
import csv
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
LIMIT_SCALE = 0.8

BRANCHES = [
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
TIES = [(107, 203, 0.161, 175), (113, 215, 0.075, 500), (123, 217, 0.074, 500),
        (223, 318, 0.097, 500), (121, 325, 0.097, 500), (325, 323, 0.052, 500)]
LOADS = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175, 10: 195,
         13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128}
# (bus, kind, p_max, energy cost $/MWh)
UNITS = [(1, "ct", 40, 40.0), (1, "coal", 152, 16.0), (2, "ct", 40, 41.0), (2, "coal", 152, 16.5),
         (7, "oil", 300, 24.0), (13, "oil", 591, 22.0), (15, "ct", 60, 30.0), (15, "coal", 155, 14.0),
         (16, "coal", 155, 14.5), (18, "nuclear", 400, 6.0), (21, "nuclear", 400, 6.5),
         (22, "hydro", 300, 2.0), (23, "coal", 660, 13.0)]
VRE = [(103, 400.0), (116, 300.0), (213, 300.0), (309, 400.0), (320, 250.0)]


def main():
    nodes = [100 * a + b for a in (1, 2, 3) for b in range(1, 25)] + [325]
    with open(os.path.join(HERE, "nodes.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["node_id", "zone", "slack"])
        for n in nodes:
            w.writerow([n, f"area{n // 100}", int(n == 113)])
    with open(os.path.join(HERE, "lines.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["line_id", "from_node", "to_node", "reactance_pu", "flow_limit_mw"])
        for a in (1, 2, 3):
            seen = {}
            for fr, to, x, lim in BRANCHES:
                key = (fr, to)
                seen[key] = seen.get(key, 0) + 1
                suffix = "" if seen[key] == 1 else "b"
                w.writerow([f"{100*a+fr}-{100*a+to}{suffix}", 100 * a + fr, 100 * a + to, x,
                            round(lim * LIMIT_SCALE, 1)])
        for fr, to, x, lim in TIES:
            w.writerow([f"{fr}-{to}", fr, to, x, round(lim * LIMIT_SCALE, 1)])
    with open(os.path.join(HERE, "generators.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["gen_id", "node_id", "p_min_mw", "p_max_mw", "energy_cost_per_mwh",
                    "up_reserve_cost_per_mw", "down_reserve_cost_per_mw"])
        for a in (1, 2, 3):
            for bus, kind, pmax, cost in UNITS:
                c = cost + 0.25 * (a - 1)
                rc = round(2.0 + 0.2 * c, 2)
                w.writerow([f"{kind}_{100*a+bus}", 100 * a + bus, 0, pmax, c, rc, rc])
    index = {n: i for i, n in enumerate(nodes)}
    load = [0.0] * len(nodes)
    for a in (1, 2, 3):
        for b, v in LOADS.items():
            load[index[100 * a + b]] = 0.9 * v
    profile = {
        "load_mw": load,
        "vre_nodes": [index[n] for n, _ in VRE],
        "vre_capacity_mw": [c for _, c in VRE],
        "sigma_frac": 0.15,
        "correlation": 0.3,
        "train": 500,
        "test": 500,
        "seed": 2024,
    }
    with open(os.path.join(HERE, "profile.json"), "w") as f:
        json.dump(profile, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
