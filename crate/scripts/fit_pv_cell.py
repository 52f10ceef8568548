"""Fits the default single-diode cell constants used by the energy module.

Targets: about 5 V and 108 mW at the maximum power point under 600 W/m², and
Vmpp/Voc close to 0.8 at 300, 600 and 1000 W/m². Shunt resistance is held at
10 kΩ and the cell string has 8 cells in series.

Requires numpy and scipy.
"""

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

VT = 0.025693
CELLS_SERIES = 8
RSH = 1e4


def current(p, v, g):
    ipv, i0, rs, rsh, a = p
    ipv = ipv * g / 1000.0

    def f(i):
        vd = v + i * rs
        return ipv - i0 * (np.exp(vd / (a * CELLS_SERIES * VT)) - 1.0) - vd / rsh - i

    return brentq(f, -100.0, ipv + 1e-3, xtol=1e-15)


def voc(p, g):
    return brentq(lambda v: current(p, v, g), 0.0, 12.0)


def mpp(p, g):
    vo = voc(p, g)
    r = minimize_scalar(
        lambda v: -v * current(p, v, g),
        bounds=(0.0, vo),
        method="bounded",
        options={"xatol": 1e-6},
    )
    return r.x, -r.fun, vo


def unpack(x):
    ipv, log_i0, rs, a = x
    return [ipv, 10.0**log_i0, rs, RSH, a]


def loss(x):
    p = unpack(x)
    try:
        vm, pm, _ = mpp(p, 600.0)
        total = ((vm - 5.0) / 5.0) ** 2 * 100 + ((pm - 0.108) / 0.1) ** 2 * 100
        for g in (300.0, 600.0, 1000.0):
            vm, _, vo = mpp(p, g)
            total += (vm / vo - 0.8) ** 2 * 100
        return total
    except (ValueError, RuntimeError, OverflowError):
        return 1e6


def report(p):
    for g in (300.0, 600.0, 1000.0):
        vm, pm, vo = mpp(p, g)
        p08 = 0.8 * vo * current(p, 0.8 * vo, g)
        print(
            f"G={g:6.0f}  Vmpp={vm:.3f}  Pmax={pm:.4f}  Voc={vo:.3f}  "
            f"Vmpp/Voc={vm / vo:.3f}  P(0.8Voc)/Pmax={p08 / pm:.4f}"
        )


def main():
    r = minimize(
        loss,
        [0.04, -7.0, 3.5, 2.3],
        method="Nelder-Mead",
        options={"maxiter": 4000, "xatol": 1e-9, "fatol": 1e-14},
    )
    ipv, i0, rs, _, a = unpack(r.x)
    rounded = [round(float(ipv), 5), float(f"{i0:.2e}"), round(float(rs), 2), RSH, round(float(a), 3)]
    print("ipv_ref, i0, rs, rsh, ideality =", rounded)
    report(rounded)


if __name__ == "__main__":
    main()
