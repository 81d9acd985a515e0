"""Entropy and mutual information on the doubly symmetric binary source.

X1 is a fair bit and X2 flips it with probability p. Everything about the pair
follows from the binary entropy h(p).
"""
import math

from mtsc import dsbs, entropy, mutual_information


def h(p):
    return 0.0 if p in (0, 1) else -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


for p in (0.0, 0.1, 0.25, 0.5):
    j = dsbs(p)
    print(f"p={p:<5} H(X1,X2)={entropy(j, ['X1', 'X2']):.4f}  1+h(p)={1 + h(p):.4f}  "
          f"I(X1;X2)={mutual_information(j, 'X1', 'X2'):.4f}  1-h(p)={1 - h(p):.4f}")

print("\nAt p=0.5 the bits are independent and share nothing; at p=0 they are copies.")
