"""Categorical splits with attribute-value grouping.

Enumeration-type variables (protocol phases, colours, ...) get dedicated
multiway splits instead of fake numeric encodings.  Values that behave
alike are merged greedily; the tolerance parameter biases the merge
toward larger groups, and an infinite tolerance always produces a binary
split.
"""

import math
from pathlib import Path

from ctrltree import (
    BuildConfig,
    ImpurityMeasure,
    NodeView,
    build_tree,
    categorical_grouping,
    export_dot,
    parse_controller_csv,
    parse_metadata,
)

here = Path(__file__).parent
meta = parse_metadata((here / "data/protocol_metadata.json").read_bytes())
controller = parse_controller_csv((here / "data/protocol.csv").read_bytes(), meta)
view = NodeView.full(controller)

print("value histogram of 'phase':",
      {tok: view.tokens(0).count(tok) for tok in controller.variables[0].dictionary})

for tolerance in (0.0, math.inf):
    pred = categorical_grouping(view, 0, ImpurityMeasure.ENTROPY, tolerance)
    label = "inf" if math.isinf(tolerance) else tolerance
    print(f"tolerance {label}: groups {[list(g) for g in pred.groups]}")

print("\nfull tree on the protocol controller:\n")
print(export_dot(build_tree(controller, BuildConfig())))
