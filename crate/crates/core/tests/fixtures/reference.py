"""Reference values for the fixture tests.

Regenerate with `python3 reference.py` from this directory. Uses numpy only.
"""

import numpy as np

SIGMA = 0.3
S0 = 100.0
STRIKE = 100.0
POOL = 1000
INNER = 20
REBALANCES = 8


def write(name, header, rows):
    with open(name, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for r in rows:
            f.write(",".join("%.17g" % x if isinstance(x, float) else str(x) for x in r) + "\n")


def path(rng, n):
    t = np.linspace(0.0, 1.0, n + 1)
    w = np.concatenate([[0.0], np.cumsum(rng.standard_normal(n) * np.sqrt(1.0 / n))])
    s = S0 * np.exp(SIGMA * w - 0.5 * SIGMA**2 * t)
    # left rule: xi_j = h * sum_{k<j} S_k
    xi = np.concatenate([[0.0], np.cumsum(s[:-1]) / n])
    return t, w, s, xi


def main():
    rng = np.random.default_rng(20240611)

    t, w, s, xi = path(rng, 64)
    write("payoff_path.csv", ["t", "W"], zip(t.tolist(), w.tolist()))
    write(
        "payoff_reference.csv",
        ["sigma", "s0", "strike", "xi", "payoff"],
        [(SIGMA, S0, k, float(xi[-1]), float(max(xi[-1] - k, 0.0))) for k in (50.0, 70.0, 100.0)],
    )

    t, w, s, xi = path(rng, REBALANCES)
    eta_rows, gamma_rows = [], []
    for j in range(REBALANCES):
        v = 1.0 - t[j]
        inc = rng.standard_normal((POOL, INNER)) * np.sqrt(1.0 / INNER)
        wk = np.concatenate([np.zeros((POOL, 1)), np.cumsum(inc, axis=1)[:, :-1]], axis=1)
        k = np.arange(INNER)
        eta = v / INNER * np.exp(SIGMA * np.sqrt(v) * wk - SIGMA**2 * v * k / (2 * INNER)).sum(axis=1)
        x, y = float(xi[j]), float(s[j])
        d = max(1e-4, 1e-4 * y)
        up = np.maximum(x + (y + d) * eta - STRIKE, 0.0)
        base = np.maximum(x + y * eta - STRIKE, 0.0)
        q = (up - base) / d
        gamma_rows.append((j, float(t[j]), float(w[j]), x, y, float(q.mean()), float(q.std(ddof=1) / np.sqrt(POOL))))
        eta_rows.extend((j, float(e)) for e in eta)
    write("gamma_eta.csv", ["j", "eta"], eta_rows)
    write("gamma_reference.csv", ["j", "t", "W", "x", "y", "gamma", "se"], gamma_rows)


if __name__ == "__main__":
    main()
