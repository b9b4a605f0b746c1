#!/usr/bin/env python3
"""Generate data/synthetic_lung.csv: 228 lung-cancer-shaped records with
missing covariates in 61 rows (167 complete) and about 28% censoring among
the complete rows. Values are simulated; no real patient data is used."""

import argparse
import csv
import math
import random

COLUMNS = ["time", "status", "age", "sex", "ecog", "log_phy", "log_pat", "log_cal", "loss"]


def karnofsky(rng, ecog):
    base = {0: 90, 1: 80, 2: 70, 3: 60}[ecog]
    return min(100, max(50, base + 10 * rng.choice([-1, 0, 0, 1])))


def generate(seed, n=228, n_incomplete=61, censor_upper=1100.0):
    rng = random.Random(seed)
    rows = []
    for _ in range(n):
        age = int(round(min(82, max(39, rng.gauss(62.4, 9.1)))))
        sex = 2 if rng.random() < 0.4 else 1
        ecog = rng.choices([0, 1, 2, 3], weights=[27, 50, 22, 1])[0]
        phy = karnofsky(rng, ecog)
        pat = karnofsky(rng, ecog)
        cal = max(96.0, rng.gauss(928.0, 402.0))
        loss = int(round(max(-24.0, rng.gauss(9.8, 13.1))))
        # Log-time model with a left-skewed error: negative Gumbel-type noise.
        eta = (5.9 - 0.006 * (age - 62) + 0.35 * (sex - 1) - 0.3 * ecog
               + 0.4 * math.log(phy / 80.0) + 0.3 * math.log(pat / 80.0)
               + 0.01 * math.log(cal / 900.0) - 0.002 * loss)
        u = rng.random()
        err = 0.75 * (math.log(-math.log(u)) + 0.5772) - 0.1
        t = math.exp(eta + err)
        c = rng.uniform(100.0, censor_upper)
        y = max(5.0, round(min(t, c)))
        status = 1 if t <= c else 0
        rows.append({"time": int(y), "status": status, "age": age, "sex": sex, "ecog": ecog,
                     "log_phy": round(math.log(phy), 6), "log_pat": round(math.log(pat), 6),
                     "log_cal": round(math.log(cal), 6), "loss": loss})
    # Blank out covariates in a fixed set of rows, mostly calories and weight loss.
    for i in rng.sample(range(n), n_incomplete):
        col = rng.choices(["log_cal", "loss", "log_pat", "ecog", "log_phy"],
                          weights=[70, 18, 6, 3, 3])[0]
        rows[i][col] = "NA"
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1994)
    ap.add_argument("--out", default="synthetic_lung.csv")
    args = ap.parse_args()
    rows = generate(args.seed)
    with open(args.out, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    complete = [r for r in rows if "NA" not in r.values()]
    cens = sum(1 for r in complete if r["status"] == 0) / len(complete)
    print(f"{len(rows)} rows, {len(complete)} complete, censoring {cens:.3f} among complete rows")


if __name__ == "__main__":
    main()
