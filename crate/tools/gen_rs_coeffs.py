"""Generate Taylor coefficients (in x = p - 1/2) of the Riemann-Siegel
correction functions C0..C4 used by the Hardy Z evaluator.

    python3 tools/gen_rs_coeffs.py > crates/core/src/zeta/rs_coeffs.rs
"""
import mpmath as mp

mp.mp.dps = 60
DEG = 48


def psi_series(deg):
    x = mp.mpf(0)
    # Psi(p) = cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p), p = 1/2 + x
    f = lambda x: mp.cos(2 * mp.pi * (x * x - mp.mpf(5) / 16)) / (-mp.cos(2 * mp.pi * x))
    return mp.taylor(f, x, deg)


def deriv(c, m):
    # coefficients of the m-th derivative
    out = []
    for n in range(m, len(c)):
        out.append(c[n] * mp.factorial(n) / mp.factorial(n - m))
    return out + [mp.mpf(0)] * m


def lin(*terms):
    n = len(terms[0][1])
    out = [mp.mpf(0)] * n
    for w, c in terms:
        for i in range(n):
            out[i] += w * c[i]
    return out


def main():
    c = psi_series(DEG + 12)
    d = {m: deriv(c, m) for m in range(13)}
    pi = mp.pi
    C = [
        d[0],
        lin((-1 / (96 * pi**2), d[3])),
        lin((1 / (64 * pi**2), d[2]), (1 / (18432 * pi**4), d[6])),
        lin((-1 / (64 * pi**2), d[1]), (-1 / (3840 * pi**4), d[5]), (-1 / (5308416 * pi**6), d[9])),
        lin((1 / (128 * pi**2), d[0]), (19 / (24576 * pi**4), d[4]),
            (11 / (5898240 * pi**6), d[8]), (1 / (2038431744 * pi**8), d[12])),
    ]
    print("// Generated by tools/gen_rs_coeffs.py; do not edit by hand.")
    print("//")
    print("// Taylor coefficients of the Riemann-Siegel corrections C0..C4 in")
    print("// powers of x = p - 1/2, where p is the fractional part of sqrt(t / 2 pi).")
    print()
    print(f"pub(crate) const RS_DEGREE: usize = {DEG};")
    print()
    print("#[rustfmt::skip]")
    print(f"pub(crate) const RS_COEFFS: [[f64; {DEG + 1}]; 5] = [")
    for j, cj in enumerate(C):
        print("    [")
        for i in range(DEG + 1):
            v = cj[i] if abs(cj[i]) > mp.mpf(10) ** -40 else mp.mpf(0)
            print(f"        {mp.nstr(v, 20, min_fixed=0, max_fixed=0)},")
        print("    ],")
    print("];")
    # report decay for sanity
    import sys
    for j, cj in enumerate(C):
        tail = max(abs(cj[i]) * mp.mpf(0.5) ** i for i in range(DEG - 5, DEG + 1))
        sys.stderr.write(f"C{j}: tail magnitude at |x|=1/2: {mp.nstr(tail, 5)}\n")


main()
