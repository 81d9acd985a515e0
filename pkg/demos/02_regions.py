"""Constraint systems for a few problem families.

The lossless pair gives the Slepian-Wolf staircase. Adding a helper W with a
rate-limited encoder shows the extra side-information rows. The split form of
the mixed problem lands on the same numbers.
"""
import json
from pathlib import Path

from mtsc import build_region, equivalent_form_tpc
from mtsc.specio import spec_from_dict

DATA = Path(__file__).parent / "data"


def load(name):
    return spec_from_dict(json.loads((DATA / name).read_text()))


print("Lossless pair (tag L):")
print(build_region(load("sw2.json")).to_text())

tpc = load("tpc.json")
print("\nMixed problem with helper and decoder side information (tag TPC), direct form:")
print(build_region(tpc).to_text())
print("\nSame problem, split form:")
print(equivalent_form_tpc(tpc).to_text())
