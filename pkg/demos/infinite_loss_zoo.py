"""Three ways to lose an infinite amount of information.

* a quantizer outputs only atoms (the whole line collapses to points);
* a limiter mixes a clean linear stretch with two rails, so the output
  has both a continuous part and two atoms;
* reporting only the radius of a planar input collapses circles to
  points: no atoms, but the output lives on a lower-dimensional set.

In each case some positive-mass set of outputs has an uncountable
preimage, and no finite loss number exists.  The library refuses to
produce one and says why.

Run:  python demos/infinite_loss_zoo.py
"""

from infoloss import (
    InfiniteLossError,
    atom_scan,
    classify,
    load_config_file,
    loss_eq5_mc,
    preset_path,
)

N = 100_000
SEED = 1

for name in ("quantizer_uniform", "limiter_gaussian", "ex5_radius_only"):
    setup = load_config_file(preset_path(name))
    m, d = setup.pmap, setup.density
    c = classify(m, d, N, SEED)
    print(f"{name}: {c.verdict} ({c.reason})")
    for e in c.evidence:
        print(f"    {e['part']:10s} kind={e['kind']:15s} "
              f"mass={e['mass']:.4f} ± {e['stderr']:.4f}")
    atoms = atom_scan(m, d, N, SEED)
    for y, mass in atoms:
        print(f"    atom at y={y}: mass {mass:.4f}")
    try:
        loss_eq5_mc(m, d, 1_000, SEED)
    except InfiniteLossError as err:
        print(f"    estimator refused: {err}")
    print()

print("for contrast, the polar-coordinate map also collapses the unit")
print("circle to a point, but the circle carries zero probability:")
setup = load_config_file(preset_path("ex4_polar_unitdisc"))
c = classify(setup.pmap, setup.density, N, SEED)
rep = loss_eq5_mc(setup.pmap, setup.density, N, SEED, classification=c)
print(f"ex4_polar_unitdisc: {c.verdict}; loss = {rep.loss_bits:.2e} bits")
