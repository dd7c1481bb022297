"""Brute-force Monte-Carlo fixtures for the signs of the finite-n bias terms.

Deliberately independent of the package estimators: every kernel sum is an
explicit pairwise comparison matrix over the sample, vectorised across
replications. Writes ``src/drwave/data/sign_fixtures.json``.

Usage: python scripts/make_sign_fixtures.py [--replications 1000000]
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

P0, B0, RHO, IDIO, N = 0.5, 0.5, 0.05, 0.1, 16
CASES = [
    # kind, scheme, k1, k2
    ("IF", "single", 4, 4),
    ("INT", "single", 4, 4),
    ("MC", "single", 4, 4),
    ("INT", "none", 4, 4),
    ("NR", "none", 4, 4),
    ("IF", "none", 4, 4),
    ("IF", "none", 2, 8),
    ("MC", "none", 2, 8),
]
FOLDS = {("IF", "single"): 2, ("INT", "single"): 2, ("MC", "single"): 3}


def draw(rng: np.random.Generator, reps: int, rows: int) -> tuple[np.ndarray, ...]:
    x = rng.random((reps, rows))
    w = rng.choice([-1.0, 1.0], size=(reps, rows))
    s = math.sqrt(RHO)
    a = P0 + s * w + IDIO * rng.uniform(-1, 1, (reps, rows))
    y = B0 + s * w + IDIO * rng.uniform(-1, 1, (reps, rows))
    return x, a, y


def kern(k: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """K_k(u_i, v_j) for every pair: shape (reps, len(u), len(v))."""
    cu = np.floor(u * k)[:, :, None]
    cv = np.floor(v * k)[:, None, :]
    return k * (cu == cv)


def fit_at(resp: np.ndarray, xfit: np.ndarray, xeval: np.ndarray, k: int) -> np.ndarray:
    n = xfit.shape[1]
    return np.einsum("rj,rji->ri", resp, kern(k, xfit, xeval)) / n


def estimates(kind: str, scheme: str, k1: int, k2: int, x, a, y) -> np.ndarray:
    n = N
    if scheme == "none":
        f = slice(0, n)
        xf, af, yf = x[:, f], a[:, f], y[:, f]
        if kind == "NR":
            return np.mean(af * (yf - fit_at(yf, xf, xf, k2)), axis=1)
        ph, bh = fit_at(af, xf, xf, k1), fit_at(yf, xf, xf, k2)
        if kind == "IF":
            return np.mean((af - ph) * (yf - bh), axis=1)
        if kind == "MC":
            return np.mean(af * yf, axis=1) - np.mean(ph * bh, axis=1)
        km = min(k1, k2)
        integral = np.einsum("rj,rjl,rl->r", af, kern(km, xf, xf), yf) / n**2
        return np.mean(af * yf, axis=1) - integral
    fit, other = slice(0, n), slice(n, 2 * n)
    xf, af, yf = x[:, fit], a[:, fit], y[:, fit]
    xo, ao, yo = x[:, other], a[:, other], y[:, other]
    if kind == "IF":
        return np.mean((ao - fit_at(af, xf, xo, k1)) * (yo - fit_at(yf, xf, xo, k2)), axis=1)
    ay = np.mean(ao * yo, axis=1)
    if kind == "INT":
        km = min(k1, k2)
        return ay - np.einsum("rj,rjl,rl->r", af, kern(km, xf, xf), yf) / n**2
    ev = slice(2 * n, 3 * n)
    xe = x[:, ev]
    return ay - np.mean(fit_at(af, xf, xe, k1) * fit_at(yf, xf, xe, k2), axis=1)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replications", type=int, default=1_000_000)
    ap.add_argument("--batch", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--out", type=Path,
                    default=Path(__file__).resolve().parents[1] / "src/drwave/data/sign_fixtures.json")
    args = ap.parse_args()
    records = []
    for case_no, (kind, scheme, k1, k2) in enumerate(CASES):
        rng = np.random.default_rng([args.seed, case_no])
        total, total_sq, done = 0.0, 0.0, 0
        m = FOLDS.get((kind, scheme), 1)
        while done < args.replications:
            r = min(args.batch, args.replications - done)
            est = estimates(kind, scheme, k1, k2, *draw(rng, r, m * N)) - RHO
            total += est.sum()
            total_sq += np.dot(est, est)
            done += r
        mean = total / done
        var = (total_sq - done * mean**2) / (done - 1)
        records.append({
            "kind": kind, "scheme": scheme, "k1": k1, "k2": k2, "n": N,
            "mean_bias": mean, "stderr": math.sqrt(var / done),
            "sign": int(np.sign(mean)),
        })
        print(f"{kind:>3} {scheme:<6} k=({k1},{k2}) bias {mean:+.6f} se {math.sqrt(var / done):.1e}")
    payload = {
        "provenance": {
            "script": "scripts/make_sign_fixtures.py",
            "replications": args.replications,
            "seed": args.seed,
            "parameters": {"p0": P0, "b0": B0, "rho": RHO, "idio": IDIO, "n": N,
                           "noise": "shared Rademacher sqrt(rho) plus Uniform[-idio, idio]"},
        },
        "cases": records,
    }
    args.out.write_text(json.dumps(payload, indent=2) + "\n")


if __name__ == "__main__":
    main()
