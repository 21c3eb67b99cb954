"""
Classical linear network coding on the butterfly
================================================

The butterfly network routes two messages through a shared middle link.
With one symbol of capacity per link, plain store-and-forward cannot give
both targets what they need, but letting the inner nodes send linear
combinations can.  This script runs the two standard solutions: the
two-pair code (each target receives the other source's symbol) and the
multicast code (both targets receive both symbols).
"""

# %%
# The two-pair ("swap") solution.  Sources and the relay V2 duplicate their
# input; V1 and the targets send the negated sum of theirs.  The composite
# map works over any modulus, so we sweep a few.
import itertools

import numpy as np

from qlnc import butterfly_multicast, butterfly_swap, composite_map, run_classical

for d in (2, 3, 5):
    net = butterfly_swap(d)
    M = composite_map(net)
    print(f"d={d}: composite map {M.tolist()}")

# %%
# Executing the code symbol by symbol.  Every input pair lands swapped at
# the targets, matching t = M s.
net = butterfly_swap(2)
for s in itertools.product(range(2), repeat=2):
    t = run_classical(net, np.asarray(s))
    print(f"  input {s} -> output {tuple(int(x) for x in t)}")

# %%
# The multicast solution sends *both* symbols to *both* targets.  The target
# nodes undo the mixing introduced at the bottleneck: each receives one raw
# symbol plus the sum, and inverts that little triangular system.
net = butterfly_multicast(3)
print("multicast composite:", composite_map(net).tolist())
for s in ((1, 0), (0, 1), (1, 2), (2, 2)):
    t = run_classical(net, np.asarray(s))
    print(f"  input {s} -> output {tuple(int(x) for x in t)}")

# %%
# Takeaways: a coding network is a DAG of small linear maps, its end-to-end
# behaviour is a single matrix over Z_d, and executing the network node by
# node agrees with that matrix.  Everything else in this package builds on
# this correspondence.
