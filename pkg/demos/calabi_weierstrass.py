"""Enneper's minimal surface and its maximal partner through the Weierstrass transform."""

import numpy as np

from spinsurf.correspondence import WeierstrassData, enneper_data, weierstrass_surface, weierstrass_transform

u = np.linspace(-0.4, 0.4, 65)
minimal = WeierstrassData.sample(enneper_data, u, u, "euclidean_minimal")
maximal = weierstrass_transform(minimal)
back = weierstrass_transform(maximal)

print("null defect (minimal, maximal):", minimal.conformality().max(), maximal.conformality().max())
print("twice transformed equals reflection:", np.abs(back.phi - [-1, -1, 1] * minimal.phi).max())
surf = weierstrass_surface(maximal, anchor=(32, 32))
print("maximal surface in", surf.immersion.space.name, "path defect", f"{surf.path_defect:.2e}")
print("corner positions:", surf.positions[0, 0], surf.positions[-1, -1])
