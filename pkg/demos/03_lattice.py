"""Walk the specialization lattice from the richest problem down.

Each step drops S, drops the helpers, or makes every source lossless or lossy.
At every edge the child region is compared with the parent region built on an
instance where the dropped ingredient has been made useless.
"""
import numpy as np

from mtsc.region import build_region, compare_systems, lattice_children, random_spec, specialize, trivialize

rng = np.random.default_rng(7)
root = random_spec(rng, "TPC", M=2, K=1, alphabet_cap=2, J=[0])
seen = set()
todo = [root]
while todo:
    cur = todo.pop(0)
    for direction, tag in lattice_children(cur.tag):
        child = specialize(cur, direction)
        gap = compare_systems(build_region(child), build_region(trivialize(cur, direction)))
        if (cur.tag, tag) not in seen:
            seen.add((cur.tag, tag))
            print(f"{cur.tag:>4} --{direction:<8}--> {tag:<4} max gap {gap:.1e}")
            todo.append(child)
