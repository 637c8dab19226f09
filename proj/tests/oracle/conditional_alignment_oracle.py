"""E[theta(x_{t+1}) | x_t] for the two-mode fixture at eta = 0.1 by
Gauss-Hermite quadrature over (zeta_1, zeta_2), checked at two resolutions.

Run: python3 tests/oracle/conditional_alignment_oracle.py
"""
import numpy as np

lam = np.array([2.0, 1.0])
c = np.array([1.0, 1.0])
eta = 0.1


def expectation(nodes):
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    z1, z2 = np.meshgrid(x, x, indexing="ij")
    c1 = (1 - eta * lam[0]) * c[0] - eta * z1
    c2 = (1 - eta * lam[1]) * c[1] - eta * z2
    d = lam[0] ** 2 * c1 ** 2
    b = lam[1] ** 2 * c2 ** 2
    return float(np.sum(np.outer(w, w) * d / (d + b)))


for n in (100, 150, 200):
    print(n, repr(expectation(n)))
