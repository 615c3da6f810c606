"""Decision-path tracing and operator-driven simulation.

decision_path explains one lookup (which predicates fired, which branch
was taken); a Simulation strings lookups together, with successors coming
from an optional transitions file or from the operator.
"""

from pathlib import Path

from ctrltree import (
    BuildConfig,
    Simulation,
    build_tree,
    decision_path,
    parse_controller_csv,
    parse_metadata,
    parse_transitions,
)

here = Path(__file__).parent
meta = parse_metadata((here / "data/cruise_metadata.json").read_bytes())
controller = parse_controller_csv((here / "data/cruise.csv").read_bytes(), meta)
tree = build_tree(controller, BuildConfig())

for state in [(4, 4, 10), (0, 0, 5)]:
    path = decision_path(tree, state)
    print(f"state {state}:")
    for _, display, branch in path.steps:
        print(f"  {display} -> {'true' if branch else 'false'}")
    print(f"  allowed: {sorted(path.actions)}")

transitions = parse_transitions(
    (here / "data/cruise_transitions.json").read_bytes(), tree)
sim = Simulation(tree, (2, 6, 10), transitions)
print("\nsimulated run from (2, 6, 10):")
sim.step("acc")                      # unique successor on file, auto-advance
print(f"  after acc: state {sim.state}, allowed {sorted(sim.allowed())}")
sim.step("dec")
print(f"  after dec: state {sim.state}, allowed {sorted(sim.allowed())}")
sim.step("neu", next_state=(2, 6, 10))   # two successors on file: pick one
print(f"  after neu: state {sim.state}")
print(f"trace length: {len(sim.trace)}")
