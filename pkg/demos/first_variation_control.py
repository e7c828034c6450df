"""Four evaluations of the first variation on u(x,t) = t, which is not area-stationary.

Run:  python3 demos/first_variation_control.py
"""
from heisenberg_surfaces import characteristic as ch
from heisenberg_surfaces import surface as sf
from heisenberg_surfaces import variation as vr


def main():
    chart = sf.chart_from_spec({"kind": "intrinsic_graph", "formula": "t", "domain": [[0, 1], [0, 1]]})
    grid = vr.SurfaceGrid(chart, grid=(201, 201))
    phi = vr.bump((0.5, 0.5), (0.3, 0.3), power=8)
    U = vr.GraphBumpField(phi)

    print("graph formula   ", vr.first_variation_graph(chart, phi, grid=grid))
    print("general formula ", vr.first_variation_general(chart, U, grid=grid))
    print("mean curvature  ", vr.first_variation_H(chart, U, grid=grid))
    print("flow difference ", vr.first_variation_flow(chart, U, grid=grid))

    c = ch.trace_characteristic(chart, (0.0, 0.2))
    print("straightness of a characteristic:", ch.straightness_residual(c))

    plane = sf.vertical_plane(1.0, domain=((0, 1), (0, 1)))
    print("same bump on u = x (stationary):", vr.first_variation_graph(plane, phi))


if __name__ == "__main__":
    main()
