"""Byte accounting of the erasure-protected packet layout.

Two GOPs (one per superposed UE) are each spread over a codeword matrix with
per-layer parity, stacked column-wise into RTP payloads, and the resulting
per-layer robustness under random packet loss is checked against the
binomial-tail prediction.
"""

import math

import numpy as np

from nomavq import UxpProfile, assemble_tb, erasure_recoverability, layout_tsb

# base layer gets heavy parity, enhancement layers progressively less
profile = UxpProfile(parity_per_class=((0, 32), (1, 16), (2, 8)))

tsb_a = layout_tsb([(0, 5000), (1, 12000), (2, 20000)], profile)
tsb_b = layout_tsb([(0, 4000), (1, 9000)], profile)
for name, tsb in (("A", tsb_a), ("B", tsb_b)):
    print(f"TSB {name}: {tsb.n_rows} rows x {tsb.n_cols} cols, "
          f"{tsb.data_bytes} data + {tsb.parity_bytes} parity bytes")
    for layer, start, end, s in tsb.layer_rows:
        print(f"  layer {layer}: rows [{start}, {end}), parity {s} per row")

tb = assemble_tb(tsb_a, tsb_b)
sizes = [size for *_, size in tb.schedule]
print(f"\nTB: {tb.column_count} packets, payload {min(sizes)}-{max(sizes)} "
      f"bytes (cap {tb.rtp_payload_bytes})")

# empirical layer-loss rate vs the binomial tail P[losses > s]
p_loss = 0.05
rng = np.random.default_rng(1)
trials = 20000
fails = {layer: 0 for layer, *_ in tsb_a.layer_rows}
for _ in range(trials):
    lost = np.flatnonzero(rng.random(tb.column_count) < p_loss)
    ok = erasure_recoverability(tb, lost.tolist(), "a")
    for layer, good in ok.items():
        fails[layer] += not good

print(f"\nlayer-loss rate under {p_loss:.0%} packet loss ({trials} trials):")
for layer, start, end, s in tsb_a.layer_rows:
    tail = sum(math.comb(255, e) * p_loss**e * (1 - p_loss) ** (255 - e)
               for e in range(s + 1, 256))
    print(f"  layer {layer} (parity {s:2d}): empirical "
          f"{fails[layer] / trials:.4f}  binomial tail {tail:.4f}")
