"""
Running the pipeline and scoring it
===================================

Run every stage on the bundled sample through the same entry point the
command line uses, then read back the metrics file.
"""
import json
import tempfile
from importlib import resources
from pathlib import Path

from sciextract.cli import main

sample = Path(str(resources.files("sciextract").joinpath("data/sample")))

with tempfile.TemporaryDirectory() as out:
    code = main(["pipeline", "--config", str(sample / "pipeline.toml"), "--out-dir", out])
    print("exit code", code)
    print(sorted(p.name for p in Path(out).iterdir()))
    metrics = json.loads((Path(out) / "metrics.json").read_text(encoding="utf-8"))

terms = metrics["terms"]
print(f"terms      exact F1 {terms['exact_f1']:.3f}  partial F1 {terms['partial_f1']:.3f}")
rel = metrics["relations"]
print(f"relations  P {rel['precision']:.3f}  R {rel['recall']:.3f}  F1 {rel['f1']:.3f}")
links = metrics["links"]
print(f"links      accuracy {links['accuracy']:.3f}  top-k {links['top_k_accuracy']:.3f}")
