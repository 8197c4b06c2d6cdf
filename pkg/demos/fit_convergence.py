"""Fit random boxes onto random targets by descending each box loss.

This isolates the loss geometry from any network: numeric gradients, a
backtracking line search, and a budget of 500 gradient steps. The success
measure is the rotated IoU between the decoded final shape and the target.
Expect a minute or so for the default 20 runs per loss.
"""

import sys

import numpy as np

from arpbox import BoxLossKind, random_arp_box, run_fit_runs

n_runs = int(sys.argv[1]) if len(sys.argv) > 1 else 20

rng = np.random.default_rng(11)
pairs = [(random_arp_box(rng), random_arp_box(rng)) for _ in range(n_runs)]

for kind in (BoxLossKind.R_EIOU, BoxLossKind.SMOOTH_L1):
    results, traces = run_fit_runs(pairs, steps=500, lr=0.05, fd_step=1e-5,
                                   box_loss_kind=kind, seed=1234)
    hits = sum(r.final_iou >= 0.9 for r in results)
    med_steps = int(np.median([r.steps for r in results]))
    print(f"{kind.value}: {hits}/{n_runs} runs reach rotated IoU >= 0.9 "
          f"(median {med_steps} gradient steps)")
    worst = min(results, key=lambda r: r.final_iou)
    print(f"  hardest run: final IoU {worst.final_iou:.3f}, loss {worst.final_loss:.2e}")

print("\nper-run detail (rotated-efficient-IoU loss):")
results, traces = run_fit_runs(pairs[:5], steps=500, lr=0.05, fd_step=1e-5, seed=1234)
for res, trace in zip(results, traces):
    first, last = trace.losses[0], trace.final_loss
    print(f"  run {res.run}: loss {first:.3f} -> {last:.2e} in {res.steps} steps, "
          f"final IoU {res.final_iou:.4f}")
