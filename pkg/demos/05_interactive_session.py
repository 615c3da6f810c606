"""Human-steered construction, scripted.

A build session exposes what the interactive UI shows: per-variable
ranges, histograms, ranked candidates, and live impurity evaluation of
hand-typed predicates.  Here we steer the first two splits by hand and
let the autocompleter finish whatever is left.
"""

from pathlib import Path

from ctrltree import BuildConfig, parse_controller_csv, parse_metadata, tree_stats
from ctrltree.builder import BuildSession
from ctrltree.model import AxisAligned

here = Path(__file__).parent
meta = parse_metadata((here / "data/cruise_metadata.json").read_bytes())
controller = parse_controller_csv((here / "data/cruise.csv").read_bytes(), meta)

session = BuildSession(controller, BuildConfig())
report = session.node_stats()
print(f"open node {report.node_id}: {report.size} states")
for var in report.numeric:
    print(f"  {var.name}: min {var.minimum}, max {var.maximum}, step {var.step}")
print("top automatic candidates:")
for cand in report.candidates[:5]:
    print(f"  {cand.display:24} impurity {cand.impurity:.4f}  [{cand.domain}]")

for text in ("v_o <= 0", "v_o <= -100", "d + (v_f - v_o)*1.0 > 5"):
    ev = session.evaluate_text(text)
    print(f"try {text!r}: impurity {ev.impurity:.4f}, branches {ev.branch_sizes}, "
          f"common per branch {ev.branch_common}")

print("\napplying v_o <= 0, then v_f <= 4, then autocompleting...")
session.apply_predicate(AxisAligned(0, 0.0))
session.apply_predicate(AxisAligned(1, 4.0))
session.autocomplete()
tree = session.tree()
print(f"done: {tree_stats(tree).total_nodes} nodes, exact = {tree.is_exact}")
