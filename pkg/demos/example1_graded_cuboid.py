"""Graded cuboid: material fit, p-convergence, and the numerical-parameter sweeps.

A 1 x 1 x 3 cm cuboid carries E(z) = 1e5 + 5e4 sin(pi z) kN/cm^2, is embedded
with a 0.1 cm margin in 6 x 6 x 16 finite cells, rests on symmetry supports
and is loaded by -1000 kN/cm^2 on top.

    python demos/example1_graded_cuboid.py          # about 5 minutes
"""

from _run import cli, config, show

# 1. least-squares fit of the E channel (clamped at the end control points)
r = cli("fit-material", "--config", config("example1_fit.json"), out="example1_fit")
print("  fitted mu along z:", r["results"]["mu_w"])

# 2. strain energy against a conforming overkill reference (p = 1, 2 here;
#    the acceptance suite runs p = 1..4 against a p = 6 reference)
cli("convergence", "--config", config("example1_convergence.json"), out="example1_convergence")
show("example1_convergence/convergence.csv")

# 3. alpha = 10^-q: the energy barely moves over the practical q range
r = cli("sweep", "--config", config("example1_convergence.json"), out="example1_q_sweep")
print(f"  max drift over q: {r['results']['max_drift']:.2e}")

# 4. penalty factor: flat plateau, then conditioning takes over at 1e8
cli("sweep", "--config", config("example1_beta_sweep.json"), out="example1_beta_sweep")
show("example1_beta_sweep/sweep.csv")
