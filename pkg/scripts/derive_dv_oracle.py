"""Independent scipy.quad oracle for the dv_nq / thermo_nq ratios.

Writes the values frozen into tests/test_acceptance.py (criterion 9).
Formulas are re-typed here with scalar math so the package quadrature
and vectorized code are not involved.

    python scripts/derive_dv_oracle.py
"""

import math

from scipy.integrate import quad

R = 2.5
E2 = 1.0
KAPPA = (3.0 / (4.0 * math.pi)) ** (1.0 / 3.0)
OFFSETS = (0.5, 1.0, -1.0)


def lindhard(mu):
    return 1.0 - mu * math.atan(1.0 / mu) if mu > 0 else 1.0


def vhat(r, kF):
    hbar = 1.0 / kF
    return 8.0 * KAPPA * E2 * hbar * kF**2 / (3.0 * math.pi * r * r)


def semi_inf(f, *brk):
    """quad on [0, inf) split at the given scales."""
    edges = [0.0, *sorted(b for b in brk if b > 0), math.inf]
    return sum(
        quad(f, lo, hi, epsabs=1e-16, epsrel=1e-12, limit=400)[0] for lo, hi in zip(edges, edges[1:])
    )


def thermo(qn, kF):
    hbar = 1.0 / kF
    Rq = abs(qn - kF)
    pref = 3.0 / (4.0 * math.pi * hbar * kF**3 * KAPPA)

    def outer(r):
        lmin = Rq / r
        c0 = 3.0 * vhat(r, kF) / (2.0 * KAPPA * hbar * kF)
        inner = semi_inf(lambda m: (1 / (1 + m * m) - lmin / (lmin * lmin + m * m)) / (1 + c0 * lindhard(m)), lmin)
        return r * pref * vhat(r, kF) * inner

    return quad(outer, Rq, R, epsabs=1e-15, epsrel=1e-10, limit=200)[0]


def dvQ(mu, k, kF):
    den = (kF - k / 2) ** 2 + kF**2 * mu * mu
    num = (kF + k / 2) ** 2 + kF**2 * mu * mu
    coef = (kF**2 * (1 + mu * mu) - k * k / 4) / (2 * k * kF)
    a = 1 + k / (2 * kF)
    b = 1 - k / (2 * kF)
    return 2 * math.pi * (1 + coef * math.log(num / den) - mu * math.atan2(a, mu) - mu * math.atan2(b, mu))


def dv(qn, kF):
    al = E2 / (math.pi**2 * kF)
    kF2 = kF * kF
    if qn > kF:
        lo, hi = qn - kF, min(qn + kF, R)
        a_of = lambda k: qn - k / 2
        c_of = lambda k: (qn * qn - kF2) / (2 * k)
    else:
        lo, hi = kF - qn, min(kF + qn, R)
        a_of = lambda k: qn + k / 2
        c_of = lambda k: (kF2 - qn * qn) / (2 * k)

    def outer(k):
        a, c = a_of(k), c_of(k)

        def f(m):
            return (a / (a * a + kF2 * m * m) - c / (c * c + kF2 * m * m)) / (k * k / kF2 + al * dvQ(m, k, kF))

        return k * semi_inf(f, abs(a) / kF, abs(c) / kF, 10 * abs(a) / kF, 10 * abs(c) / kF)

    return al / qn * quad(outer, lo, hi, epsabs=1e-15, epsrel=1e-10, limit=200)[0]


if __name__ == "__main__":
    for kF in (50.0, 100.0):
        ratios = [dv(kF + d, kF) / thermo(kF + d, kF) for d in OFFSETS]
        print(f"    {kF}: (" + ", ".join(f"{x:.14f}" for x in ratios) + "),")
