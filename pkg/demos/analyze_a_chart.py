"""Walk through one chart: draw it, read it back, describe it, redraw it.

Run from the repository root:  python3 demos/analyze_a_chart.py [out_dir]
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

from curvespn.config import Config
from curvespn.dataset import SyntheticSpec, generate_chart, write_chart
from curvespn.pipeline import analyze, run_bundle

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="curvespn_demo_"))

# Two curves of different shape, colour and width on an 800x600 canvas.
spec = SyntheticSpec(["quadratic", "sinusoidal"], colors=[(214, 39, 40), (31, 119, 180)],
                     widths=[3, 2], dashes=["solid", "solid"], seed=7)
paths = write_chart(generate_chart(spec), out, "chart")
print(f"chart written to {paths['image']}")

desc = analyze(paths["image"], paths["axis"], Config(seed=0))

print(f"\nplot region {desc.region_bounds}, {len(desc.curves)} curves")
for c in desc.curves:
    print(f"  curve {c.curve_id}: colour {c.color}, width {c.width_px}px, "
          f"{c.pixel_count} px, k={c.k} key points, {c.bridged_gaps} gaps bridged")

# The two merge stages side by side: rule3 can only drop breakpoints.
for name, st in desc.stages.items():
    n = sum(len(s) for s in st.segments.values())
    kinds = [r.kind for r in st.relations]
    print(f"\n[{name}] {n} segments, "
          f"{kinds.count('intersection')} intersections, {kinds.count('parallelism')} parallel pairs, "
          f"SSIM {desc.stage_ssim(name):.4f}")

st = desc.stage
print("\nformal description:")
print(" ", st.kyrtos[:300] + (" ..." if len(st.kyrtos) > 300 else ""))
print("\nfirst sentences:")
for s in st.sentences[:4]:
    print(" ", s.to_line())
print(f"\nnet: {len(st.spn.places)} places, {len(st.spn.transitions)} transitions")

bundle = run_bundle(desc, out / "bundle")
print("\nbundle:", ", ".join(sorted(bundle)))
