"""Regenerate the synthetic vitamin D fixture bundled with the package.

Same column layout as the public cohort file (age, filaggrin, vitd, time,
death); all values are simulated. Three rows carry an NA vitd value so the
ingestion report has something to show.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "ivnnt" / "data" / "vitd_synthetic.csv"


def simulate(n=2571, seed=1997):
    rng = np.random.default_rng(seed)
    age = np.round(rng.uniform(30, 71, n), 1)
    filaggrin = (rng.random(n) < 0.08).astype(int)
    frailty = rng.normal(size=n)  # unmeasured: lowers vitamin D, raises mortality
    log_vitd = 3.93 + 0.22 * filaggrin - 0.12 * frailty + rng.normal(0, 0.33, n)
    vitd = np.round(np.exp(log_vitd), 1)
    lp = -4.4 + 0.06 * (age - 50) + 0.5 * frailty - 0.45 * (vitd >= 30)
    hazard = np.exp(lp)
    t_event = rng.exponential(1 / hazard)
    t_cens = rng.uniform(9.0, 10.5, n)
    death = (t_event <= t_cens).astype(int)
    time = np.round(np.minimum(t_event, t_cens), 2)
    return age, filaggrin, vitd, time, death


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=OUT)
    p.add_argument("--seed", type=int, default=1997)
    args = p.parse_args()
    cols = simulate(seed=args.seed)
    na_rows = {17, 905, 2230}
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["age", "filaggrin", "vitd", "time", "death"])
        for k, (age, fil, vd, t, d) in enumerate(zip(*cols)):
            w.writerow([age, fil, vd, t, d])
            if k in na_rows:
                w.writerow([age, fil, "NA", t, d])


if __name__ == "__main__":
    main()
