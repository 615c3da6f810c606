"""Domain-knowledge predicate templates.

A template is `term CMP term; def; def...` where coefficients c_k either
range over a finite set (tried exhaustively) or are fully free (fitted:
a threshold scan when the template rearranges to `g(s) CMP c`, otherwise
derivative-free simplex search on the split impurity).
"""

from pathlib import Path

from ctrltree import (
    BuildConfig,
    ImpurityMeasure,
    NodeView,
    build_tree,
    instantiate_templates,
    parse_controller_csv,
    parse_domain_knowledge,
    parse_metadata,
    split_impurity,
    tree_stats,
)

here = Path(__file__).parent
meta = parse_metadata((here / "data/cruise_metadata.json").read_bytes())
controller = parse_controller_csv((here / "data/cruise.csv").read_bytes(), meta)
templates = parse_domain_knowledge((here / "data/cruise_dk.txt").read_bytes())
view = NodeView.full(controller)

print("instantiated candidates (entropy on the root node):")
for template in templates:
    preds = instantiate_templates([template], view, ImpurityMeasure.ENTROPY)
    print(f"  template: {template.source}")
    for pred in preds:
        imp = split_impurity(pred, view, ImpurityMeasure.ENTROPY)
        print(f"    {pred.provenance:36} impurity {imp:.4f}")

# templates strictly preferred: automatic domains only as fallback
config = BuildConfig(templates=tuple(templates),
                     priorities={"axis": 0.0, "linear": 0.0, "categorical": 0.0})
tree = build_tree(controller, config)
print(f"\ntemplate-first tree: {tree_stats(tree).total_nodes} nodes")
for nid, node in sorted(tree.nodes.items()):
    if hasattr(node, "predicate"):
        print(f"  inner {nid}: {node.predicate.provenance}")
