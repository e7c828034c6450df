"""The area factor D along characteristics of t = xy, and Killing fluxes on a patch.

Run:  python3 demos/paraboloid_d_equation.py
"""
from heisenberg_surfaces import codazzi as cz
from heisenberg_surfaces import surface as sf
from heisenberg_surfaces import variation as vr


def main():
    p = sf.paraboloid()
    scan = sf.singular_scan(p, (21, 21))
    print(f"singular grid points: {len(scan)} (all with x = {set(scan.points[:, 0].tolist())})")
    for start in ((0.5, 0.0), (0.8, -0.4)):
        r = cz.d_equation_residual(p, start, arc=(-0.25, 0.25))
        print(f"start {start}: D from {r.d_profile.values.min():.4f} to {r.d_profile.values.max():.4f}, "
              f"residual {r.residual:.2e}")
    region = ((0.3, 0.9), (-0.5, 0.7))
    for name, U in vr.KILLING_GENERATORS.items():
        f = vr.flux(p, vr.rectangle(region), U)
        print(f"flux of {name:6s}: {f['value']:+.2e} over perimeter {f['perimeter']:.4f}")


if __name__ == "__main__":
    main()
