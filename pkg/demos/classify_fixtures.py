"""Classify every shipped fixture and print the verdict table.

Each metric is run through the rigidity criteria at reduced sample
counts: Berwald detection (third v-derivative of the spray), flag-
curvature nonpositivity, and sampled Busemann midpoint convexity.  The
final column records whether the sampled verdicts satisfy the expected
equivalence (Berwald and nonpositive flag curvature if and only if no
convexity violation is found).

Run from the repository root:

    python3 demos/classify_fixtures.py
"""

from finslerlab import ClassifyConfig, classify_report, load_spec

FIXTURES = [
    "euclidean",
    "poincare",
    "sphere_chart",
    "minkowski_quartic",
    "randers_const",
    "randers_sine",
    "berwald_product",
]

config = ClassifyConfig(
    seed=0,
    berwald_samples=60,
    norm_geodesics=10,
    curvature_samples=80,
    busemann_pairs=100,
    holonomy_loops=4,
    kappa_samples=4,
)

print(f"{'fixture':<18} {'berwald':<8} {'flag<=0':<8} {'busemann':<9} consistent")
for name in FIXTURES:
    rep = classify_report(load_spec(f"fixtures/{name}.json"), config)
    v = rep.verdicts
    print(
        f"{name:<18} {str(v['berwald']):<8} {str(v['flag_nonpositive']):<8} "
        f"{v['busemann_sampled']:<9} {rep.consistent}"
    )
    for key, wit in rep.witnesses.items():
        short = {k: wit[k] for k in list(wit)[:2]}
        print(f"    witness [{key}]: {short}")
