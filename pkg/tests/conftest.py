import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coverd.nnverify import Layer, Network  # noqa: E402


def random_affine_net(rng, v, hidden=6, classes=3):
    return Network(
        (
            Layer(rng.normal(size=(hidden, v)), rng.normal(size=hidden)),
            Layer(rng.normal(size=(classes, hidden)), rng.normal(size=classes)),
        )
    )


def calibrated_affine_net(rng, v, t, robust, gap=0.05):
    """Two-layer affine net and image whose t-pixel ball is (not) robust by construction.

    For label 0 against class j the margin is affine, ``d_j . y + c_j``.  Over
    a box freeing ``S`` its minimum is ``d_j . x + c_j + sum_{i in S} drop_i``
    with ``drop_i = min(0, d_ji) - d_ji x_i <= 0``, so the worst t-pixel box
    takes the ``t`` most negative drops.  Shifting the label's bias places that
    worst case at ``+gap`` or ``-gap``.
    """
    while True:
        x = rng.random(v)
        w1, b1 = rng.normal(size=(4, v)), rng.normal(size=4)
        w2, b2 = rng.normal(size=(3, 4)), rng.normal(size=3)
        w, b = w2 @ w1, w2 @ b1 + b2
        d = w[0] - w[1:]
        c = b[0] - b[1:]
        drops = np.minimum(0.0, d) - d * x
        worst = d @ x + c + np.sort(drops, axis=1)[:, :t].sum(axis=1)
        b2 = b2.copy()
        b2[0] += (gap if robust else -gap) - worst.min()
        net = Network((Layer(w1, b1), Layer(w2, b2)))
        if net.classify(x) == 0:
            return net, x


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
