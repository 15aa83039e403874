"""Train the full pipeline on the synthetic set and overfit it on CPU.

Six videos (four leaks, two clean), 48 frames at 64x64, 200 Adam steps on
the boundary-weighted BCE+IoU loss of the center-frame prediction. The
run is seeded and reproducible; expect roughly half a minute.
"""

import time

from leakseg import aggregate
from leakseg.inference import evaluate_model

from demo_utils import OUTPUT, trained_model

started = time.monotonic()
model, cfg, dataset, split = trained_model()
print(f"model ready in {time.monotonic() - started:.0f}s "
      f"({sum(p.data.size for p in model.params().values())} parameters)")

log = (OUTPUT / "train_run" / "training_log.txt").read_text()
lines = log.splitlines()
print(f"{len(lines)} optimization steps logged; first and last:")
print(" ", lines[0])
print(" ", lines[-1])

for postproc in (False, True):
    results = evaluate_model(model, dataset, cfg, frames=split.train, postproc=postproc)
    j, f, jf = aggregate(results, "unified").overall
    tag = "with opening" if postproc else "raw"
    print(f"training-set scores ({tag}): J={j:.1f} F={f:.1f} J&F={jf:.1f}")
