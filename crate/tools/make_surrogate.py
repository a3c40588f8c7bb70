"""Generate the bundled surrogate thyroid-recurrence cohort.

The original 383-patient cohort is distributed by the UCI repository as
`Thyroid_Diff.csv`. This script writes a synthetic stand-in with the same
header, the same category vocabulary, exactly the published per-class level
counts, and the published age summary (min 15, max 82, mean 40.867,
sd 15.134). Within each class, features share latent severity factors so
the clinical variables are correlated the way staging systems force them
to be. Drop the real file in its place to run on the original data.

    python3 tools/make_surrogate.py > data/thyroid_surrogate.csv
"""

import csv
import sys

import numpy as np

SEED = 20240915

HEADER = [
    "Age", "Gender", "Smoking", "Hx Smoking", "Hx Radiothreapy",
    "Thyroid Function", "Physical Examination", "Adenopathy", "Pathology",
    "Focality", "Risk", "T", "N", "M", "Stage", "Response", "Recurred",
]

# (level, recurred count, not-recurred count) in ascending severity.
COUNTS = {
    "Gender": [("F", 66, 246), ("M", 42, 29)],
    "Smoking": [("No", 75, 259), ("Yes", 33, 16)],
    "Hx Smoking": [("No", 94, 261), ("Yes", 14, 14)],
    "Hx Radiothreapy": [("No", 102, 274), ("Yes", 6, 1)],
    "Thyroid Function": [
        ("Euthyroid", 98, 234),
        ("Subclinical Hypothyroidism", 5, 9),
        ("Subclinical Hyperthyroidism", 0, 5),
        ("Clinical Hypothyroidism", 2, 10),
        ("Clinical Hyperthyroidism", 3, 17),
    ],
    "Physical Examination": [
        ("Normal", 2, 5),
        ("Diffuse goiter", 0, 7),
        ("Single nodular goiter-right", 28, 112),
        ("Single nodular goiter-left", 26, 63),
        ("Multinodular goiter", 52, 88),
    ],
    "Adenopathy": [
        ("No", 30, 247), ("Right", 30, 18), ("Left", 12, 5),
        ("Posterior", 2, 0), ("Bilateral", 27, 5), ("Extensive", 7, 0),
    ],
    "Pathology": [
        ("Micropapillary", 0, 48), ("Papillary", 90, 197),
        ("Hurthel cell", 6, 14), ("Follicular", 12, 16),
    ],
    "Focality": [("Uni-Focal", 38, 209), ("Multi-Focal", 70, 66)],
    "Risk": [("Low", 12, 237), ("Intermediate", 64, 38), ("High", 32, 0)],
    # T4a recurred is 19: the published 4.961% of 383 and the class total
    # of 108 both require it.
    "T": [
        ("T1a", 1, 48), ("T1b", 5, 38), ("T2", 20, 131), ("T3a", 41, 55),
        ("T3b", 14, 2), ("T4a", 19, 1), ("T4b", 8, 0),
    ],
    "N": [("N0", 27, 241), ("N1a", 10, 12), ("N1b", 71, 22)],
    "Stage": [("I", 65, 268), ("II", 25, 7), ("III", 4, 0), ("IVA", 3, 0), ("IVB", 11, 0)],
    "Response": [
        ("Excellent", 1, 207), ("Indeterminate", 7, 54),
        ("Biochemical Incomplete", 11, 12), ("Structural Incomplete", 89, 2),
    ],
}

# Clinical block: recurrence depends on these through a fixed logistic
# score (weight per ordinal step). Everything else depends on recurrence
# only through that score.
CLINICAL_WEIGHTS = {
    "Response": 2.2,
    "Risk": 1.6,
    "Stage": 0.9,
    "N": 0.7,
    "T": 0.35,
    "Adenopathy": 0.3,
}
AGE_WEIGHT = 0.03
SWEEPS = 400
# Multiplier on the swap log-likelihood. Positive values spread atypical
# clinical findings evenly, leaving every patient easy to classify; the
# negative value packs them into a few hard cases per class instead.
COHERENCE = -1.0

DEMOGRAPHIC = [
    "Gender", "Smoking", "Hx Smoking", "Hx Radiothreapy", "Thyroid Function",
    "Physical Examination", "Pathology", "Focality",
]


def exact_levels(rng, counts, n):
    out = np.concatenate([np.full(c, k) for k, c in enumerate(counts)])
    assert len(out) == n
    return rng.permutation(out)


def score(codes, ages, intercept):
    eta = intercept + AGE_WEIGHT * (ages - 41.0)
    for name, w in CLINICAL_WEIGHTS.items():
        eta = eta + w * codes[name]
    return eta


def log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def age_ok(stage_code, age):
    # stage III and beyond only occur at 55+
    return stage_code < 2 or age >= 55


def draw_clinical(rng, y):
    n = len(y)
    codes = {}
    for name in CLINICAL_WEIGHTS:
        col = np.empty(n, dtype=int)
        for cls, k in ((1, 1), (0, 2)):
            idx = np.flatnonzero(y == cls)
            col[idx] = exact_levels(rng, [lv[k] for lv in COUNTS[name]], len(idx))
        codes[name] = col
    ages = 15 + rng.gamma(4.0, 5.5, n)
    ages = np.clip(np.round(ages), 16, 81)
    for i in range(n):
        if not age_ok(codes["Stage"][i], ages[i]):
            ages[i] = rng.integers(55, 81)
    sign = np.where(y == 1, 1.0, -1.0)
    intercept = 0.0
    for _ in range(50):
        # base rate match keeps the logistic score calibrated
        eta = score(codes, ages, intercept)
        p = 1.0 / (1.0 + np.exp(-eta))
        intercept -= (p.sum() - y.sum()) / max((p * (1 - p)).sum(), 1e-9)
    names = list(CLINICAL_WEIGHTS) + ["Age"]
    for _ in range(SWEEPS * n):
        name = names[rng.integers(len(names))]
        cls = rng.integers(2)
        idx = np.flatnonzero(y == cls)
        i, j = rng.choice(idx, 2, replace=False)
        col = ages if name == "Age" else codes[name]
        if col[i] == col[j]:
            continue
        before = log_sigmoid(sign[i] * score_one(codes, ages, intercept, i)) + \
            log_sigmoid(sign[j] * score_one(codes, ages, intercept, j))
        col[i], col[j] = col[j], col[i]
        ok = age_ok(codes["Stage"][i], ages[i]) and age_ok(codes["Stage"][j], ages[j])
        after = log_sigmoid(sign[i] * score_one(codes, ages, intercept, i)) + \
            log_sigmoid(sign[j] * score_one(codes, ages, intercept, j))
        if not ok or np.log(rng.random()) >= COHERENCE * (after - before):
            col[i], col[j] = col[j], col[i]
    return codes, ages, score(codes, ages, intercept)


def score_one(codes, ages, intercept, i):
    eta = intercept + AGE_WEIGHT * (ages[i] - 41.0)
    for name, w in CLINICAL_WEIGHTS.items():
        eta += w * codes[name][i]
    return eta


def shared_curve(eta, y, want_rec, want_not):
    """Solve sum sigmoid(a + b*eta) = target counts in each class."""
    a, b = 0.0, 0.0
    rec, notrec = eta[y == 1], eta[y == 0]
    for _ in range(200):
        pr = 1 / (1 + np.exp(-np.clip(a + b * rec, -50, 50)))
        pn = 1 / (1 + np.exp(-np.clip(a + b * notrec, -50, 50)))
        f = np.array([pr.sum() - want_rec, pn.sum() - want_not])
        wr, wn = pr * (1 - pr), pn * (1 - pn)
        jac = np.array([[wr.sum(), (wr * rec).sum()], [wn.sum(), (wn * notrec).sum()]])
        step = np.linalg.lstsq(jac, f, rcond=None)[0]
        a, b = a - step[0], np.clip(b - step[1], -4, 4)
        if np.abs(f).max() < 1e-6:
            break
    return a, b


def conditional_pick(rng, logit, count):
    """Exactly `count` picks, inclusion odds proportional to exp(logit)."""
    if count == 0:
        return np.array([], dtype=int)
    keys = np.log(rng.random(len(logit))) / np.exp(np.clip(logit, -30, 30))
    return np.argsort(-keys)[:count]


def draw_demographic(rng, name, eta, y):
    n = len(y)
    levels = COUNTS[name]
    out = np.full(n, -1)
    remaining = np.ones(n, dtype=bool)
    # continuation ratio: peel one level at a time off the remaining rows
    for k, (_, want_rec, want_not) in enumerate(levels[:-1]):
        live = np.flatnonzero(remaining)
        a, b = shared_curve(eta[live], y[live], want_rec, want_not)
        for cls, want in ((1, want_rec), (0, want_not)):
            pool = live[y[live] == cls]
            chosen = pool[conditional_pick(rng, a + b * eta[pool], want)]
            out[chosen] = k
            remaining[chosen] = False
    out[remaining] = len(levels) - 1
    return out


def fit_summary(ages, old_mask, rng):
    """Nudge integer ages until mean and sd hit the published values."""
    n = len(ages)
    target_sum = 15652
    lo_i, hi_i = int(np.argmin(ages)), int(np.argmax(ages))
    ages[lo_i], ages[hi_i] = 15, 82
    free = [i for i in range(n) if i not in (lo_i, hi_i)]
    for _ in range(500000):
        total = ages.sum()
        cur_sd = ages.std(ddof=1)
        if total == target_sum and round(cur_sd, 3) == 15.134:
            return ages
        i, j = free[rng.integers(len(free))], free[rng.integers(len(free))]
        if total != target_sum:
            v = ages[i] + (1 if total < target_sum else -1)
            if (55 if old_mask[i] else 16) <= v <= 81:
                ages[i] = v
            continue
        # mean fixed: move a pair apart or together to adjust the spread
        hi, lo = (i, j) if ages[i] >= ages[j] else (j, i)
        if cur_sd < 15.134:
            nh, nl = ages[hi] + 1, ages[lo] - 1
        elif ages[hi] - ages[lo] >= 2:
            nh, nl = ages[hi] - 1, ages[lo] + 1
        else:
            continue
        if nh <= 81 and nl >= (55 if old_mask[lo] else 16) and nh >= (55 if old_mask[hi] else 16):
            ages[hi], ages[lo] = nh, nl
    raise RuntimeError("age summary did not converge")


def main():
    rng = np.random.default_rng(SEED)
    y = rng.permutation(np.concatenate([np.ones(108, int), np.zeros(275, int)]))
    codes, ages, eta = draw_clinical(rng, y)
    for name in DEMOGRAPHIC:
        codes[name] = draw_demographic(rng, name, eta, y)
    # distant metastasis: every IVB case plus the youngest recurred stage II
    m = np.zeros(len(y), dtype=int)
    m[codes["Stage"] == 4] = 1
    young_ii = np.flatnonzero((codes["Stage"] == 1) & (y == 1))
    young_ii = young_ii[np.argsort(ages[young_ii], kind="stable")][:7]
    m[young_ii] = 1
    old = np.array([codes["Stage"][i] >= 2 for i in range(len(y))])
    ages = fit_summary(ages, old, rng)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(HEADER)
    for i in range(len(y)):
        row = []
        for h in HEADER:
            if h == "Age":
                row.append(int(ages[i]))
            elif h == "M":
                row.append("M1" if m[i] else "M0")
            elif h == "Recurred":
                row.append("Yes" if y[i] else "No")
            else:
                row.append(COUNTS[h][codes[h][i]][0])
        w.writerow(row)


if __name__ == "__main__":
    main()
