#!/usr/bin/env python3
# Verifying a small affine classifier against every 2-pixel perturbation.

import itertools

import numpy as np

from coverd.engine import RunConfig, verify_ball
from coverd.nnverify import Layer, Network, exact_affine_verify, make_neighborhood

rng = np.random.default_rng(3)
v = 49  # a 7x7 image
x = rng.random(v)
net = Network((
    Layer(rng.normal(size=(8, v)) * 0.1, rng.normal(size=8)),
    Layer(rng.normal(size=(3, 8)), np.array([9.0, 0.0, 0.0])),
))
label = int(net.classify(x))
print("label", label, "scores", np.round(net.forward(x), 3))

found = []
verdict, stats = verify_ball(net, x, RunConfig(t=2, workers=4), on_verified=lambda S, how: found.append(S))
print(verdict.status.value, "after", stats.incomplete_calls, "interval calls and", stats.complete_calls, "exact calls")
print("largest block proved at once:", max(map(len, found)))

# the same question pair by pair
bad = [S for S in itertools.combinations(range(1, v + 1), 2)
       if exact_affine_verify(net, make_neighborhood(x, S), label).witness is not None]
print("pairs with a counterexample:", len(bad), "of", v * (v - 1) // 2)

# lower the label's bias until some pair breaks it
weak = Network((net.layers[0], Layer(net.layers[1].weight, net.layers[1].bias - [6.0, 0, 0])))
verdict, _ = verify_ball(weak, x, RunConfig(t=2, workers=4))
print(verdict.status.value)
if verdict.witness is not None:
    moved = np.flatnonzero(verdict.witness != x)
    print("pixels moved:", moved + 1, "new scores", np.round(weak.forward(verdict.witness), 3))
