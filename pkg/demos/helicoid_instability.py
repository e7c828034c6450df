"""Helicoid: straight characteristics, q along a ruling, and the k-sweep of the index form.

Run:  python3 demos/helicoid_instability.py
"""
import numpy as np

from heisenberg_surfaces import characteristic as ch
from heisenberg_surfaces import codazzi as cz
from heisenberg_surfaces import surface as sf
from heisenberg_surfaces import variation as vr


def main():
    h = sf.helicoid()

    curve = ch.trace_characteristic(h, (0.5, 0.0), arc=(-2.0, 2.0), step=1e-2)
    print(f"characteristic through (0.5, 0): {len(curve)} samples, "
          f"straightness {ch.straightness_residual(curve):.2e}")

    s = np.linspace(-3, 3, 601)
    prof = cz.ruling_profile(h, 0.5, s)
    fit = cz.fit_codazzi_coeffs(prof)
    print(f"u along the ruling: a={fit.a:.3e} b={fit.b:.9f}  a^2+b={fit.invariant:.6f}")
    for si in (0.0, 1.0, 2.0):
        print(f"  q(0.5, {si}) = {float(vr.q_function(h, np.array([0.5, si]))):.9f}   "
              f"closed form {float(cz.q_along_line(fit, si)):.9f}")

    poly = ch.vertical_component_poly(h, 0.5).oriented()
    print(f"<V_eps, T> = {poly.a:+.6f} {poly.b:+.6f} s {poly.c:+.6f} s^2, discriminant {poly.discriminant:.6f}")

    res = vr.instability_search(h, k_max=8)
    print("k   gradient     q-term       Q")
    for r in res.reports:
        print(f"{r.k:<3d} {r.gradient_term:11.6f} {r.q_term:11.6f} {r.Q_value:11.6f}")
    print(f"first negative k = {res.first_negative_k}; gradient ratios {res.gradient_ratios}")


if __name__ == "__main__":
    main()
