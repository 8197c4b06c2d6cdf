"""Compare the two box losses across the five-parameter angle wrap.

A rectangle rotating continuously through an axis-aligned orientation is
smooth geometry, but its canonical five-parameter form snaps: the angle jumps
a quarter turn and the edges exchange. The smooth-L1 baseline inherits that
snap; the rotated-efficient-IoU loss, computed from the area-ratio encoding,
does not. The sweep below writes both profiles to a CSV (plot externally).
"""

import csv
import math
import sys

import numpy as np

from arpbox import (
    BoxPair,
    OrientedRect,
    box_loss_smooth,
    ciou_loss,
    encode_arp,
    five_param_smooth_l1,
    r_eiou_loss,
)

# ---------------------------------------------------------------------------
# the loss family on a simple pair
pred = OrientedRect(52.0, 48.0, 30.0, 14.0, -0.5)
target = OrientedRect(50.0, 50.0, 32.0, 12.0, -0.7)
pair = BoxPair(encode_arp(pred), encode_arp(target))

smooth = box_loss_smooth(pair)
reiou = r_eiou_loss(pair)
print("loss on a nearby pair:")
print(f"  smooth-L1 form: total {smooth.total:.4f}  terms {dict(smooth.terms)}")
print(f"  R-EIoU form:    total {reiou.total:.4f}  terms "
      f"{ {k: round(v, 4) for k, v in reiou.terms.items()} }")
print(f"  (plain CIoU between the circumscribed boxes: "
      f"{ciou_loss(pair.pred.hbox, pair.target.hbox):.4f})")

# ---------------------------------------------------------------------------
# sweep a square through the canonical boundary; its geometry changes smoothly
target = OrientedRect(300.0, 300.0, 100.0, 100.0, -math.pi / 4)
target_arp = encode_arp(target)
step = math.radians(0.1)
angles = [math.radians(-45.05) + i * step for i in range(901)]

rows = []
for theta in angles:
    pred = OrientedRect(300.0, 300.0, 100.0, 100.0, theta)
    loss = r_eiou_loss(BoxPair(encode_arp(pred), target_arp)).total
    baseline = five_param_smooth_l1(pred, target)
    rows.append((math.degrees(theta), loss, pred.theta - target.theta, baseline["dtheta"]))

losses = np.array([r[1] for r in rows])
residuals = np.array([r[2] for r in rows])
wrap = int(np.abs(np.diff(residuals)).argmax())
print("\nsweeping the square's raw angle from -45.05 to +44.95 degrees:")
print(f"  five-parameter angle residual snaps by "
      f"{abs(residuals[wrap + 1] - residuals[wrap]):.4f} rad at step {wrap}")
print(f"  R-EIoU change across that same step: "
      f"{abs(losses[wrap + 1] - losses[wrap]):.2e}")
print(f"  R-EIoU range over the whole sweep: {losses.max() - losses.min():.4f}")

out = sys.argv[1] if len(sys.argv) > 1 else "boundary_sweep.csv"
with open(out, "w", newline="", encoding="utf-8") as fh:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["angle_deg", "r_eiou", "angle_residual", "baseline_dtheta_term"])
    writer.writerows(rows)
print(f"\nwrote the sweep to {out}")
