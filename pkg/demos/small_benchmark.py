"""A miniature SSIM benchmark: a few charts per class, both merge stages.

The acceptance suite runs the same loop with ten charts per class.
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

from curvespn.dataset import MULTI_CLASSES, SINGLE_CLASSES, generate_dataset
from curvespn.evaluation import evaluate_corpus

per_class = int(sys.argv[1]) if len(sys.argv) > 1 else 3
root = Path(tempfile.mkdtemp(prefix="curvespn_bench_"))
generate_dataset(root, {c: per_class for c in (*SINGLE_CLASSES, *MULTI_CLASSES)}, seed=0)

report = evaluate_corpus(root)
print(f"{'class':12} {'mode':6} {'n':>3} {'mean':>7} {'std':>7} fail")
for s in report.stats():
    print(f"{s.cls:12} {s.mode:6} {s.n:3d} {s.mean_ssim:7.4f} {s.std:7.4f} {s.failures:4d}")
print("\ncsv:", report.write_csv(root / "ssim.csv"))
