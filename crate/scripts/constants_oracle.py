#!/usr/bin/env python3
"""Standalone recomputation of the worked observability-constant instance.

Uses only the closed-form expressions, evaluated with mpmath at 50 digits,
so the frozen values in the Rust acceptance suite do not depend on the
library code path they check.
"""
from mpmath import mp, mpf, exp, findroot, diff

mp.dps = 50

d0, d1, g1, g2, g3, g4 = mpf(1), mpf(1), mpf(1), mpf(2), mpf(1), mpf(0)
d2, d3, M, omega, delta1, c_sup = mpf(1), mpf(2), mpf(1), mpf(0), mpf(1), mpf(1)
T = ell1 = mpf(1)

kappa = g1 * g3 / (g2 - g1)
q = (mpf(3) / 4) ** ((g2 - g1) / (g1 * g3))
c1 = max(d0, (d0 * c_sup + 1) * d2)
c2 = d1 * (1 - g1 / g2) * (2 * d1 * g1 / (d3 * g2)) ** (g1 / (g2 - g1)) + g4 * (g2 - g1) / (g1 * g3)
c3 = M * c1 * exp(max(omega, 0) * delta1)
c4 = c2 * mpf(6) ** kappa
cobs = 6 * c3**2 / q / delta1 * exp(3 * c4 / delta1**kappa) * M * exp(omega * (T - ell1))

print("q     =", mp.nstr(q, 20))
print("c1    =", mp.nstr(c1, 20))
print("c2    =", mp.nstr(c2, 20))
print("c3    =", mp.nstr(c3, 20))
print("c4    =", mp.nstr(c4, 20))
print("C_obs =", mp.nstr(cobs, 20), " (32 e^4.5 =", mp.nstr(32 * exp(mpf(4.5)), 20), ")")

# maximiser of f(lambda) = d1 lambda^g1 - d3/2 lambda^g2 dt^g3, second instance
dd1, dd3, a1, a2, a3, dt = mpf(2), mpf(1), mpf(1), mpf(3), mpf(1), mpf(1)
f = lambda lam: dd1 * lam**a1 - dd3 / 2 * lam**a2 * dt**a3
lam = findroot(lambda x: diff(f, x), mpf(1))
print("lambda* (2,1,(1,3,1),1) =", mp.nstr(lam, 20), " f_max =", mp.nstr(f(lam), 20))
