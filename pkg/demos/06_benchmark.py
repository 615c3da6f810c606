"""Batched hyper-parameter comparison.

run_experiments builds one tree per configuration (optionally repeated
for timing stability) and format_results renders the node counts as CSV
or a markdown table with the per-case minimum bolded.
"""

from pathlib import Path

from ctrltree import (
    BuildConfig,
    Determinizer,
    DetMode,
    ImpurityMeasure,
    format_results,
    parse_controller_csv,
    parse_metadata,
    run_experiments,
)

here = Path(__file__).parent
meta = parse_metadata((here / "data/cruise_metadata.json").read_bytes())
controller = parse_controller_csv((here / "data/cruise.csv").read_bytes(), meta)

configs = [
    BuildConfig(),
    BuildConfig(measure=ImpurityMeasure.GINI),
    BuildConfig(determinizer=Determinizer(DetMode.SAFE_EARLY_STOP)),
    BuildConfig(measure=ImpurityMeasure.MULTI_LABEL_ENTROPY,
                determinizer=Determinizer(DetMode.SAFE_EARLY_STOP)),
    BuildConfig(determinizer=Determinizer(DetMode.PRE_MAXFREQ)),
]

results = run_experiments(controller, configs, repeats=3, case="cruise")
print(format_results(results, "markdown"))
print(format_results(results, "csv"))
