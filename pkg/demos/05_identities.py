"""Fuzz the chain-rule identities behind the corner construction."""
from collections import defaultdict

from mtsc.identities import INEQUALITIES, fuzz_identities

stats = defaultdict(lambda: [0, 0.0])
for r in fuzz_identities(3, 3, trials=25, seed=11):
    s = stats[r.id]
    s[0] += 1
    s[1] = max(s[1], abs(r.gap))
for k, (n, gap) in stats.items():
    kind = "slack (inequality)" if k in INEQUALITIES else "|gap|"
    print(f"{k:<16} {n:>5} checks   worst {kind} {gap:.1e}")
