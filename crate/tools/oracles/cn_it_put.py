"""Dense CN-IT American put, independent of the Rust code.

Prints the solution at maturity on a few nodes for freezing into tests.
"""
import json
import sys

import numpy as np

K, R, SIGMA, T = 100.0, 0.02, 0.4, 0.5
NU, N = 73, 99


def mesh(nu):
    d, sl, sr, smax = K / 3, 0.8 * K, 1.2 * K, 5 * K
    xmin = np.arcsinh(-sl / d)
    xint = (sr - sl) / d
    xmax = xint + np.arcsinh((smax - sr) / d)
    dx = (xint - 2 * xmin) / nu
    m = int(np.ceil((xmax - xmin) / dx - 1e-12))
    xi = xmin + dx * np.arange(m + 1)
    s = np.where(xi <= 0, sl + d * np.sinh(xi),
                 np.where(xi <= xint, sl + d * xi, sr + d * np.sinh(xi - xint)))
    s[0] = 0.0
    return s


def operator(s):
    n = len(s)
    a = np.zeros((n, n))
    for i in range(1, n):
        h0 = s[i] - s[i - 1]
        h1 = h0 if i == n - 1 else s[i + 1] - s[i]
        dd = np.array([2 / (h0 * (h0 + h1)), -2 / (h0 * h1), 2 / (h1 * (h0 + h1))])
        diff = 0.5 * SIGMA**2 * s[i] ** 2
        if i == n - 1:
            a[i, i - 1] += diff * (dd[0] - dd[2])
            a[i, i] += diff * (dd[1] + 2 * dd[2])
        else:
            a[i, i - 1:i + 2] += diff * dd
            bm = -h1 / (h0 * (h0 + h1))
            if R * s[i] * bm + diff * dd[0] >= 0:
                a[i, i - 1:i + 2] += R * s[i] * np.array([bm, (h1 - h0) / (h0 * h1), h0 / (h1 * (h0 + h1))])
            else:
                a[i, i:i + 2] += R * s[i] * np.array([-1 / h1, 1 / h1])
    a -= R * np.eye(n)
    return a


def it_step(a, u, lam, g, dt, theta):
    eye = np.eye(len(u))
    ubar = np.linalg.solve(eye - theta * dt * a, (eye + (1 - theta) * dt * a) @ u + dt * lam)
    y = ubar - dt * lam
    ex = y <= g
    u_new = np.where(ex, g, y)
    lam_new = np.where(ex, np.maximum(0, lam + (g - ubar) / dt), 0.0)
    return u_new, lam_new


def main():
    s = mesh(NU)
    a = operator(s)
    g = np.maximum(K - s, 0)
    u, lam = g.copy(), np.zeros_like(g)
    dt = T / N
    for n in range(N):
        if n < 2:
            for _ in range(2):
                u, lam = it_step(a, u, lam, g, dt / 2, 1.0)
        else:
            u, lam = it_step(a, u, lam, g, dt, 0.5)
    mid = (NU - 1) // 2
    idx = [mid - 10, mid - 1, mid, mid + 1, mid + 2, mid + 10, mid + 30]
    json.dump({"m": len(s) - 1, "nodes": {str(i): float(u[i]) for i in idx},
               "lambda_max": float(lam.max())}, sys.stdout, indent=1)
    print()


if __name__ == "__main__":
    main()
