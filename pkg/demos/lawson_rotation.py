"""Rotate the spinor of an H = sqrt(2) surface in R^{1,2} to an H = 1 surface in anti-de Sitter space."""

import numpy as np

from spinsurf.chart import build_chart, core, extract_geometry
from spinsurf.correspondence import CmcPair, lawson_angle, lawson_rotate
from spinsurf.spinor import KillingEquation, restricted_spinor, solve_killing

H1 = np.sqrt(2.0)
for branch in (1, -1):
    theta, h2 = lawson_angle(H1, branch)
    print(f"branch {branch:+d}: theta = {theta:.6f}, H2 = {h2:+.6f}")

for n in (33, 65, 129):
    chart, imm = build_chart("pseudosphere_r12", {"radius": 1 / H1}, n)
    data = extract_geometry(imm, chart)
    psi0 = restricted_spinor(chart, data).values[0, 0]
    field = solve_killing(KillingEquation.from_geometry(data, None, chart), chart, psi0).field
    pair = CmcPair(field, H1, "r12")
    rot, _ = lawson_rotate(pair)
    r_in, r_out = core(pair.residual()).max(), core(rot.residual()).max()
    ind = np.abs(rot.indicator() - pair.indicator()).max()
    print(f"n={n:4d}  input residual {r_in:.3e}  output residual {r_out:.3e}  indicator change {ind:.1e}")
