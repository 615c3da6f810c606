"""Build an exact decision tree for a small permissive controller.

The input is a 4-state excerpt of a cruise-control lookup table: each row
maps (own velocity, front velocity, distance) to the set of allowed
accelerations.  The tree represents the table exactly: evaluating it on
any stored state returns exactly the stored action set.
"""

from pathlib import Path

from ctrltree import (
    BuildConfig,
    build_tree,
    evaluate_tree,
    export_dot,
    parse_controller_csv,
    parse_metadata,
    tree_stats,
)

here = Path(__file__).parent

meta = parse_metadata((here / "data/cruise_metadata.json").read_bytes())
controller = parse_controller_csv((here / "data/cruise.csv").read_bytes(), meta)
print(f"controller: {len(controller)} states, "
      f"actions {', '.join(controller.label_table)}")

tree = build_tree(controller, BuildConfig())
stats = tree_stats(tree)
print(f"tree: {stats.total_nodes} nodes "
      f"({stats.inner_nodes} inner, {stats.leaves} leaves), depth {stats.depth}")

print("\nlookup table vs tree:")
for state, actions in sorted(controller.rows.items()):
    result = evaluate_tree(tree, state)
    marker = "ok" if result == actions else "MISMATCH"
    print(f"  {state} -> {sorted(result)}  [{marker}]")

print("\nDOT output:\n")
print(export_dot(tree))
