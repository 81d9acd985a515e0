"""A single test-channel stage, then a two-stage pipeline.

The stage picks a codeword jointly typical with the source, sends its bin, and
the decoder finds the unique typical bin member. The pipeline refuses rates
below the corner of the chosen stage order.
"""
import math

import numpy as np

from mtsc import Channel, TypicalityParams, bernoulli
from mtsc.corners import corner_point, instance_from_channels, random_chain_instance
from mtsc.probability import Alphabet
from mtsc.simulate import RateError, pipeline_simulate, wz_stage_simulate

y = Alphabet.range("Y1", 2)
stage = instance_from_channels(bernoulli(0.2, "Y1"), ["Y1"], [Channel.identity(y, "Z1")])
h = -(0.2 * math.log2(0.2) + 0.8 * math.log2(0.8))
for n in (8, 12, 16):
    r = wz_stage_simulate(stage, h + 0.2, TypicalityParams(0.5, n), 200, seed=2)
    print(f"identity stage, n={n:<3} success {r.extra['success_rate']:.3f}")

inst = random_chain_instance(np.random.default_rng(5), 2, 2)
for order in ((0, 1), (1, 0)):
    c = corner_point(inst, order)
    print(f"\norder {order}: corner {np.round(c, 4)}")
    try:
        pipeline_simulate(inst, c + 0.1, TypicalityParams(0.5, 4), 0, seed=0, order=order)
        print("  corner + 0.1 accepted")
        pipeline_simulate(inst, c, TypicalityParams(0.5, 4), 0, seed=0, order=order)
    except RateError as e:
        print(f"  corner itself rejected at stage {e.stage}: {e}")
