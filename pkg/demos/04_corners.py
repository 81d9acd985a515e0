"""Corner points of the test-channel polytope and time sharing between them.

Every ordering of the encoders gives one corner: each encoder pays only for
what the decoder does not already know from earlier descriptions.
"""
import numpy as np

from mtsc.corners import convex_witness, enumerate_corners, membership, random_chain_instance

rng = np.random.default_rng(3)
inst = random_chain_instance(rng, 3, 3)
cs = enumerate_corners(inst)
print(f"{len(cs.corners)} corners, sum rate {inst.bound((0, 1, 2)):.4f} at each")
for c in cs.corners:
    order = ">".join(inst.y[i] for i in c.perm)
    print(f"  {order:<10} {np.round(c.rates, 4)}  sum {c.rates.sum():.4f}")

mid = sum(c.rates for c in cs.corners) / len(cs.corners)
print("\nAverage of all corners:", np.round(mid, 4), "->", membership(mid, inst).status)
w = convex_witness(mid, cs)
print("time-sharing weights found:", {">".join(inst.y[i] for i in k): round(v, 3) for k, v in w.weights.items() if v})
print("zero rates ->", membership(np.zeros(3), inst).status)
