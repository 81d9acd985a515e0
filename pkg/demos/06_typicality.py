"""How fast does a Bernoulli(0.3) block become typical?

Strong typicality at tolerance eps asks every letter frequency to sit within
eps/2 of its probability. Short blocks almost never manage that.
"""
from mtsc import TypicalityParams, bernoulli, typicality_probability

for n in (10, 20, 50, 100, 200, 500, 1000):
    est = typicality_probability(bernoulli(0.3), TypicalityParams(0.1, n), 5000, seed=n)
    exact = "" if est.exact is None else f"(exact {est.exact:.4f})"
    print(f"n={n:<5} P(atypical) ~ {est.monte_carlo:.4f} {exact}")
