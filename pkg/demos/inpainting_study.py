#!/usr/bin/env python3
"""Image recovery where the initialization picks the answer.

We sample p pixels of a corrupted image (the least-squares term) and m DCT
coefficients of the clean image (the affine constraint C x = d). With far
fewer than n^2 measurements the problem has a whole subspace of optimal
reconstructions; the accelerated solver converges to the one closest to
its starting image. Three different starts give three different, equally
optimal reconstructions.

Outputs land in demos/output/ as PGM images and a metrics table.
"""

import os

import numpy as np

from apgkit import make_instance, reconstruct, synthetic_image
from apgkit.io import write_pgm

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

n = 32
instance = make_instance(synthetic_image(n), corruption_fraction=0.4,
                         p=500, m=128, seed=7)
print(f"{n}x{n} image, {instance.p} known pixels + {instance.m} DCT rows "
      f"= {instance.p + instance.m} measurements for {n * n} unknowns")

write_pgm(os.path.join(OUT, "truth.pgm"), synthetic_image(n))
write_pgm(os.path.join(OUT, "corrupted.pgm"), instance.corrupted_image())

results = {}
for init in ("ones", "zeros", "random"):
    rec = reconstruct(instance, init=init, tol=1e-10)
    results[init] = rec
    write_pgm(os.path.join(OUT, f"recon_{init}.pgm"),
              rec.x_final.reshape(n, n))
    print(f"  init={init:<6} iters={rec.iters:<5} "
          f"gradmap={rec.gradmap_final:.1e} psnr={rec.psnr_vs_truth:5.1f} dB "
          f"dist to P_S x0 = {rec.dist_to_PSx0:.2e}")

print("\nevery run is optimal (objective ~ 0, constraints met),")
print("yet the reconstructions differ pairwise:")
tags = list(results)
for i in range(len(tags)):
    for j in range(i + 1, len(tags)):
        gap = np.linalg.norm(results[tags[i]].x_final
                             - results[tags[j]].x_final)
        print(f"  ||recon[{tags[i]}] - recon[{tags[j]}]|| = {gap:.2f}")
print(f"\nimages written to {OUT}")
