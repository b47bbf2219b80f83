"""Periodic unit cells, rotated tensors and the diameter/angle lookup table.

    python demos/homogenization.py                  # a few minutes
"""

import os

from _run import OUT, cli, config, show
from vrepfcm.homogenize import laminate_normal_modulus
from vrepfcm.material import IsotropicMaterial, isotropic_to_voigt

# a solid cell returns the isotropic tensor; the Hill-Mandel gaps sit at roundoff
cli("homogenize", "--config", config("rve_solid.json"), out="rve_solid")
show("rve_solid/tensor.txt")
show("rve_solid/hill_mandel.csv")

# 10:1 layered cell against the harmonic-mean laminate modulus
r = cli("homogenize", "--config", config("rve_laminate.json"), out="rve_laminate")
c33 = [isotropic_to_voigt(IsotropicMaterial(e, 0.3))[2, 2] for e in (21000.0, 2100.0)]
exact = laminate_normal_modulus(c33[0], c33[1], 0.5)
print(f"  C33 = {r['results']['C'][2][2]:.4f}, laminate formula {exact:.4f} kN/cm^2")

# rod tile with a thicker x rod: tetragonal about x, C11 > C22 = C33
r = cli("homogenize", "--config", config("rve_tile.json"), out="rve_tile")
print("  symmetry:", r["results"]["symmetry"])
show("rve_tile/tensor.txt")

# rotating a published tensor about z swaps the in-plane axes at 90 degrees
cli("rotate-tensor", "--config", config("rotate_t2.json"), out="rotate_t2")
show("rotate_t2/rotated.txt")
show("rotate_t2/rotation_sweep.csv", 4)

# table of published tensors over diameter and angle, queried between nodes
cli("table", "build", "--config", config("table_paper.json"), out="table")
cli("table", "query", "--table", os.path.join(OUT, "table", "table.json"), "--diameter", "0.35 mm", "--angle", "30 deg",
    out="table_query")
