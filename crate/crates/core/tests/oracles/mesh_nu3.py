# High-precision evaluation of the sinh-stretched mesh for K=100, nu=3.
from mpmath import mp, asinh, sinh, ceil, mpf

mp.dps = 40
K = mpf(100)
d, sl, sr, smax = K / 3, mpf("0.8") * K, mpf("1.2") * K, 5 * K
nu = 3

xmin = asinh(-sl / d)
xint = (sr - sl) / d
xmax = xint + asinh((smax - sr) / d)
dxi = (xint - 2 * xmin) / nu
m = int(ceil((xmax - xmin) / dxi))


def phi(x):
    if x <= 0:
        return sl + d * sinh(x)
    if x <= xint:
        return sl + d * x
    return sr + d * sinh(x - xint)


print("xi_min", mp.nstr(xmin, 20))
print("xi_int", mp.nstr(xint, 20))
print("xi_max", mp.nstr(xmax, 20))
print("dxi", mp.nstr(dxi, 20))
print("m", m)
for l in range(m + 1):
    print(l, mp.nstr(phi(xmin + l * dxi), 20))
