"""The three reporting protocols on one set of per-frame results.

unified              mean J and F over every test frame
per_video_confusion  J per video from accumulated TP/FP/FN counts,
                     F as the within-video frame mean, then an unweighted
                     mean over videos
fold_weighted        unified scores per fold, combined by frame-count weights
"""

import numpy as np

from leakseg import Fold, aggregate
from leakseg.metrics import evaluate_frame, report_to_text

rng = np.random.default_rng(9)


def square(h, w, y0, x0, size):
    m = np.zeros((h, w), dtype=np.uint8)
    m[y0 : y0 + size, x0 : x0 + size] = 1
    return m


results = []
# video "plume": predictions drift off the target over time
for t in range(4):
    gt = square(32, 32, 8, 8, 10)
    pred = square(32, 32, 8, 8 + t, 10)
    results.append(evaluate_frame(pred, gt, "plume", t))
# video "quiet": non-leak, correctly empty except one noisy frame
empty = np.zeros((32, 32), dtype=np.uint8)
for t in range(4):
    pred = square(32, 32, 2, 2, 3) if t == 2 else empty
    results.append(evaluate_frame(pred, empty, "quiet", t))

for r in results:
    print(f"{r.video_id}/{r.frame_index}: J={r.j:6.2f} F={r.f:6.2f} "
          f"tp={r.tp} fp={r.fp} fn={r.fn}")
print()

folds = [Fold(videos=["plume"], weight=0.5), Fold(videos=["quiet"], weight=0.5)]
for protocol in ("unified", "per_video_confusion", "fold_weighted"):
    rep = aggregate(results, protocol, folds=folds)
    print(report_to_text(rep))
