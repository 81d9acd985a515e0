"""Estimating a hidden bit from two compressed observations.

X is the xor of W1 and W2. Either observation alone says nothing about X, so
both encoders must send a full bit to reach zero Hamming distortion. The same
region comes out of the lossy two-helper problem with a mute X encoder.
"""
import json
from pathlib import Path

from mtsc.region import build_region, compare_systems, estimation_as_dpc, estimation_region
from mtsc.specio import spec_from_dict

spec = spec_from_dict(json.loads((Path(__file__).parent / "data" / "est_xor.json").read_text()))
est = estimation_region(spec)
print(est.to_text())
dpc = build_region(estimation_as_dpc(spec))
print("\nas a lossy problem with a mute source encoder:")
print(dpc.to_text())
print(f"\nlargest disagreement: {compare_systems(est, dpc):.1e}")
