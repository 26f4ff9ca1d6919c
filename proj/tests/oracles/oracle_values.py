"""Independent reference values frozen into the C++ tests.

Run with: python3 tests/oracles/oracle_values.py
Uses mpmath (indices, group indices by numerical differentiation), numpy and
scipy (quadrature, grids). Shares no code with the C++ library.
"""
import math

import mpmath as mp
import numpy as np
from scipy import integrate

mp.mp.dps = 30
C = 299792458.0

KTP = {
    "y": ([3.45018, 0.04341, 0.04597, 16.98825, 39.43799], [0.5425e-5, 0.5154e-5, -0.4063e-5, 0.1997e-5]),
    "z": ([4.59423, 0.06206, 0.04763, 110.80672, 86.12171], [-0.1897e-5, 3.6677e-5, -2.9220e-5, 0.9221e-5]),
}


def n(axis, lam, t):
    (a, b, c, d, e), dt = KTP[axis]
    lam = mp.mpf(lam)
    n0 = mp.sqrt(a + b / (lam**2 - c) + d / (lam**2 - e))
    return n0 + sum(k / lam**i for i, k in enumerate(dt)) * (t - 20)


def ng(axis, lam, t):
    return n(axis, lam, t) - lam * mp.diff(lambda x: n(axis, x, t), lam)


def dk(ls, li, t, lp=0.47098, period=33.25, offset=0.0):
    k = lambda ax, l: 2 * mp.pi * n(ax, l, t) / l
    return k("y", lp) - k("y", ls) - k("z", li) - 2 * mp.pi / period - offset


def conj(l, lp=0.47098):
    return 1 / (1 / mp.mpf(lp) - 1 / mp.mpf(l))


def main():
    print("n_y(0.94185,27) =", mp.nstr(n("y", 0.94185, 27), 17))
    print("n_z(0.94185,27) =", mp.nstr(n("z", 0.94185, 27), 17))
    print("ng_y(0.94185,27) =", mp.nstr(ng("y", 0.94185, 27), 17))
    print("ng_z(0.94185,27) =", mp.nstr(ng("z", 0.94185, 27), 17))
    ld = 2 * 0.47098
    print("bulk dk(2lp, 27C) =", mp.nstr(dk(ld, ld, 27), 15))
    offset = dk(ld, ld, 27)
    print("phase offset for 27C =", mp.nstr(offset, 15))
    t_raw = mp.findroot(lambda t: dk(ld, ld, t), 20)
    print("raw degeneracy T =", mp.nstr(t_raw, 10))
    dng = ng("y", ld, 27) - ng("z", ld, 27)
    fwhm = 2 * 2 * 1.39 * C / (2 * math.pi * 5e-3 * abs(float(dng))) * 1e-9
    print("dng(2lp) =", mp.nstr(dng, 15), " fwhm closed form GHz =", fwhm)

    # Degeneracy band: FWHM in T of max over wavelength of S_signal * S_idler.
    off = float(offset)
    lam = np.arange(938.0, 946.0 + 1e-9, 0.01)

    def branches(t):
        s, i = [], []
        for l in lam:
            lc = float(conj(l * 1e-3))
            s.append(float(dk(l * 1e-3, lc, t, offset=off)))
            i.append(float(dk(lc, l * 1e-3, t, offset=off)))
        half = 2500.0
        return np.sinc(np.array(s) * half / np.pi) ** 2, np.sinc(np.array(i) * half / np.pi) ** 2

    mp.mp.dps = 20
    temps = np.arange(17.0, 37.0 + 1e-9, 0.25)
    joint = []
    for t in temps:
        s, i = branches(t)
        joint.append(np.max(s * i))
    joint = np.array(joint) / max(joint)
    above = np.where(joint > 0.5)[0]
    lo, hi = above[0], above[-1]
    xl = np.interp(0.5, [joint[lo - 1], joint[lo]], [temps[lo - 1], temps[lo]])
    xr = np.interp(0.5, [joint[hi + 1], joint[hi]], [temps[hi + 1], temps[hi]])
    print("degeneracy band (0.25 C grid) =", xr - xl)
    mp.mp.dps = 30

    # Cavity.
    gap = 4.32463258759
    lo_s = gap + 5 * float(ng("y", ld, 27)) + 2 * float(ng("z", ld, 27))
    lo_i = gap + 5 * float(ng("z", ld, 27)) + 2 * float(ng("y", ld, 27))
    fsr_s = C / (2 * lo_s * 1e-3) * 1e-9
    fsr_i = C / (2 * lo_i * 1e-3) * 1e-9
    r = math.sqrt(0.998 * 0.9)
    fin = math.pi * math.sqrt(r) / (1 - r)
    print("finesse =", fin, " fsr_s =", fsr_s, " fsr_i =", fsr_i, " mismatch =", fsr_s - fsr_i)
    print("1/fsr ps =", 1e3 / fsr_s, " lifetime ps =", fin / (2 * math.pi * fsr_s) * 1e3)
    print("linewidth GHz =", fsr_s / fin, " coherence time ps =", 1e3 / (math.pi * fsr_s / fin))

    # Temporal overlap by quadrature.
    def overlap_quad(ta, tb):
        ga, gb = 1 / ta, 1 / tb
        amp = integrate.quad(lambda t: math.sqrt(ga * gb) * math.exp(-(ga + gb) * t / 2), 0, math.inf,
                             epsabs=1e-14, epsrel=1e-14)[0]
        return amp**2

    print("overlap(751,932) quad =", overlap_quad(751, 932))
    print("overlap(100,200) quad =", overlap_quad(100, 200), " 8/9 =", 8 / 9)

    # Spectral overlap of two equal Lorentzians (FWHM 1) offset by one FWHM, on +-200.
    x = np.arange(-200, 200 + 1e-9, 0.01)
    la = 0.25 / (x**2 + 0.25)
    lb = 0.25 / ((x - 1) ** 2 + 0.25)
    print("lorentzian overlap =", integrate.trapezoid(la * lb, x) / math.sqrt(integrate.trapezoid(la * la, x) * integrate.trapezoid(lb * lb, x)))

    # Heralded g3 for ideal detectors, Poissonian pairs: 1 - exp(-mu).
    print("g3 ideal mu=0.05 =", 1 - math.exp(-0.05))

    # Natural linewidths.
    for tau in (751, 932):
        print("linewidth MHz tau=%d =" % tau, 1e6 / (2 * math.pi * tau))


if __name__ == "__main__":
    main()
