"""
Command-line walkthrough
========================

The same pipeline through the ``glcc`` command. ``main`` takes the argument
list, so this script calls it in-process.
"""

# %%

import json
import tempfile
from pathlib import Path

from glcc.cli import main

root = Path(tempfile.mkdtemp())
spec = root / "spec.yaml"
spec.write_text("preset: three_family\ncount: 20\nseed: 0\n")
cfg = root / "train.yaml"
cfg.write_text("epochs: 3\nwarmup_epochs: 1\n")

# %%
# ``generate`` writes a snapshot plus a manifest.

assert main(["generate", "--config", str(spec), "--out", str(root)]) == 0
data = next(root.glob("generate-*/dataset.npz"))

# %%
# ``train`` writes checkpoint, loss CSV, assignments, metrics and manifest.

assert main(["train", "--config", str(cfg), "--data", str(data), "--out", str(root), "--variant", "M5"]) == 0
run = next(root.glob("train-*"))
print(sorted(p.name for p in run.iterdir()))
manifest = json.loads((run / "manifest.json").read_text())
print(manifest["run_id"], manifest["dataset_fingerprint"][:12])

# %%
# ``eval`` rescores the checkpoint; bad inputs exit with code 2.

assert main(["eval", "--checkpoint", str(run / "checkpoint.pt"), "--data", str(data)]) == 0
print("missing data exit code:", main(["train", "--data", str(root / "missing")]))

# %%
# ``ablate`` writes a variant x metric table.

assert main(["ablate", "--config", str(cfg), "--data", str(data), "--out", str(root), "--only", "M3", "--only", "M5"]) == 0
