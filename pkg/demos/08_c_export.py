"""Export a tree as C99 source for embedded targets.

classify() takes the state vector (categorical variables as integer
codes per the emitted comment block) and fills an array with the allowed
action ids.  The body is nothing but nested if-else.
"""

import shutil
import subprocess
import tempfile
from pathlib import Path

from ctrltree import (
    BuildConfig,
    build_tree,
    export_c,
    parse_controller_csv,
    parse_metadata,
)

here = Path(__file__).parent
meta = parse_metadata((here / "data/cruise_metadata.json").read_bytes())
controller = parse_controller_csv((here / "data/cruise.csv").read_bytes(), meta)
tree = build_tree(controller, BuildConfig())

source = export_c(tree)
print(source)

if shutil.which("cc"):
    with tempfile.TemporaryDirectory() as tmp:
        src = Path(tmp) / "controller.c"
        src.write_text(source + "\nint main(void) { return 0; }\n")
        subprocess.run(["cc", "-std=c99", "-c", "-o", str(Path(tmp) / "x.o"),
                        str(src), "-lm"], check=True)
    print("// compiles cleanly under cc -std=c99")
else:
    print("// no C compiler found; skipping the compile check")
