"""Few-pixel neighborhoods and the robustness backends run on them.

A neighborhood frees the pixels in ``S`` to anywhere in ``[0, 1]`` and pins the
rest to the image.  Backends answer whether every input in it keeps the label:

* :func:`ibp_verify` propagates intervals through a fully-connected ReLU
  network.  Sound, may answer Unknown.
* :func:`exact_affine_verify` minimizes each class margin exactly over the box
  for networks without ReLUs.  Sound and complete.
* :class:`ScriptedBackend` draws verdicts from a per-size success profile and
  charges virtual time, for exercising the planner and engine.
"""

from __future__ import annotations

import csv
import enum
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "Layer",
    "Network",
    "Neighborhood",
    "Status",
    "BackendVerdict",
    "make_neighborhood",
    "interval_bounds",
    "ibp_verify",
    "exact_affine_verify",
    "IbpBackend",
    "AffineBackend",
    "ScriptedBackend",
    "load_profile",
    "load_image",
    "save_image",
]

ACTIVATIONS = ("relu", "none")


@dataclass(frozen=True, eq=False)
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "none"

    def __post_init__(self):
        w = np.array(self.weight, dtype=np.float64, ndmin=2)
        b = np.array(self.bias, dtype=np.float64).reshape(-1)
        if w.shape[0] != b.shape[0]:
            raise ValueError(f"bias length {b.shape[0]} != weight rows {w.shape[0]}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True, eq=False)
class Network:
    """A fully-connected classifier; the argmax of the last layer is the class."""

    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.weight.shape[0] != nxt.weight.shape[1]:
                raise ValueError("layer dimensions do not chain")
        if layers[-1].weight.shape[0] < 2:
            raise ValueError("last layer needs at least two classes")
        object.__setattr__(self, "layers", layers)

    @property
    def n_inputs(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def n_classes(self) -> int:
        return self.layers[-1].weight.shape[0]

    @property
    def is_affine(self) -> bool:
        return all(layer.activation == "none" for layer in self.layers)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Scores for one input ``(n,)`` or a batch ``(B, n)``."""
        h = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            h = h @ layer.weight.T + layer.bias
            if layer.activation == "relu":
                h = np.maximum(h, 0.0)
        return h

    def classify(self, x: np.ndarray) -> int | np.ndarray:
        return np.argmax(self.forward(x), axis=-1)

    def to_text(self) -> str:
        out = [f"relu-net {len(self.layers)}"]
        for layer in self.layers:
            r, c = layer.weight.shape
            out.append(f"layer {r} {c}")
            out.extend(" ".join(repr(float(x)) for x in row) for row in layer.weight)
            out.append(" ".join(repr(float(x)) for x in layer.bias))
            out.append(f"activation {layer.activation}")
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Network":
        lines = iter(ln.strip() for ln in text.splitlines() if ln.strip())
        head = next(lines).split()
        if len(head) != 2 or head[0] != "relu-net":
            raise ValueError("network file must start with 'relu-net L'")
        layers = []
        for _ in range(int(head[1])):
            tag, r, c = next(lines).split()
            if tag != "layer":
                raise ValueError(f"expected 'layer R C', got {tag!r}")
            r, c = int(r), int(c)
            w = np.array([[float(x) for x in next(lines).split()] for _ in range(r)])
            if w.shape != (r, c):
                raise ValueError(f"weight block is {w.shape}, header says {(r, c)}")
            b = np.array([float(x) for x in next(lines).split()])
            tag, act = next(lines).split()
            if tag != "activation":
                raise ValueError(f"expected 'activation', got {tag!r}")
            layers.append(Layer(w, b, act))
        return cls(tuple(layers))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "Network":
        return cls.from_text(Path(path).read_text())


def load_image(path) -> np.ndarray:
    x = np.array(Path(path).read_text().split(), dtype=np.float64)
    if x.size == 0 or x.min() < 0 or x.max() > 1:
        raise ValueError("image pixels must lie in [0, 1]")
    return x


def save_image(x: np.ndarray, path) -> None:
    Path(path).write_text(" ".join(repr(float(p)) for p in np.asarray(x).ravel()) + "\n")


@dataclass(frozen=True, eq=False)
class Neighborhood:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def free(self) -> np.ndarray:
        """1-based indices of the non-degenerate coordinates."""
        return np.nonzero(self.lo != self.hi)[0] + 1

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


def make_neighborhood(x: np.ndarray, S: Sequence[int]) -> Neighborhood:
    """Box pinning every pixel to ``x`` except those in ``S`` (1-based), freed to ``[0, 1]``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size and (x.min() < 0 or x.max() > 1):
        raise ValueError("pixel outside [0, 1]")
    idx = np.asarray(list(S), dtype=np.int64)
    if idx.size and (idx.min() < 1 or idx.max() > x.size):
        raise IndexError(f"pixel index outside [1, {x.size}]")
    lo, hi = x.copy(), x.copy()
    lo[idx - 1] = 0.0
    hi[idx - 1] = 1.0
    lo.setflags(write=False)
    hi.setflags(write=False)
    return Neighborhood(lo, hi)


class Status(enum.Enum):
    VERIFIED = "Verified"
    UNKNOWN = "Unknown"
    FALSIFIED = "Falsified"


@dataclass(frozen=True)
class BackendVerdict:
    status: Status
    witness: np.ndarray | None = None
    cost: float = 0.0  # virtual seconds charged (scripted backend)

    @property
    def verified(self) -> bool:
        return self.status is Status.VERIFIED


def _margin_rows(net: Network, label: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``e_label - e_j`` for every ``j != label``, and the matching ``j``."""
    n = net.n_classes
    others = np.array([j for j in range(n) if j != label])
    diff = -np.eye(n)[others]
    diff[:, label] += 1.0
    return diff, others


def _fold_affine(layers: Sequence[Layer]) -> tuple[np.ndarray, np.ndarray]:
    w, b = layers[0].weight, layers[0].bias
    for layer in layers[1:]:
        w, b = layer.weight @ w, layer.weight @ b + layer.bias
    return w, b


def _segments(net: Network, label: int) -> list[tuple[np.ndarray, np.ndarray, bool]]:
    """Affine maps between ReLUs, consecutive affine layers folded, margins appended.

    Folding keeps interval propagation exact across runs of affine layers, so
    on ReLU-free networks the computed margin bounds are the true box extrema.
    """
    segs, run = [], []
    for layer in net.layers:
        run.append(layer)
        if layer.activation == "relu":
            segs.append((*_fold_affine(run), True))
            run = []
    diff, _ = _margin_rows(net, label)
    if run:
        w, b = _fold_affine(run)
        segs.append((diff @ w, diff @ b, False))
    else:
        segs.append((diff, np.zeros(diff.shape[0]), False))
    return segs


def interval_bounds(net: Network, nbh: Neighborhood, label: int) -> tuple[np.ndarray, np.ndarray]:
    """Lower/upper bounds of ``score_label - score_j`` for each ``j != label``."""
    if nbh.lo.shape[0] != net.n_inputs:
        raise ValueError(f"neighborhood has {nbh.lo.shape[0]} pixels, network expects {net.n_inputs}")
    lo, hi = nbh.lo, nbh.hi
    for w, b, relu in _segments(net, label):
        center, radius = (lo + hi) / 2, (hi - lo) / 2
        c = w @ center + b
        r = np.abs(w) @ radius
        lo, hi = c - r, c + r
        if relu:
            lo, hi = np.maximum(lo, 0.0), np.maximum(hi, 0.0)
    return lo, hi


def ibp_verify(net: Network, nbh: Neighborhood, label: int) -> BackendVerdict:
    """Interval bound propagation: Verified when every margin's lower bound is positive."""
    lo, _ = interval_bounds(net, nbh, label)
    return BackendVerdict(Status.VERIFIED if (lo > 0).all() else Status.UNKNOWN)


def exact_affine_verify(net: Network, nbh: Neighborhood, label: int) -> BackendVerdict:
    """Exact margin minimization for ReLU-free networks.

    Each margin is affine, so its minimum over the box sits at the corner
    taking ``lo`` where the coefficient is positive and ``hi`` elsewhere.
    """
    if not net.is_affine:
        raise TypeError("exact_affine_verify needs a network without ReLU layers")
    if nbh.lo.shape[0] != net.n_inputs:
        raise ValueError(f"neighborhood has {nbh.lo.shape[0]} pixels, network expects {net.n_inputs}")
    w, b = _fold_affine(net.layers)
    diff, _ = _margin_rows(net, label)
    coef, const = diff @ w, diff @ b
    corners = np.where(coef > 0, nbh.lo, nbh.hi)
    minima = np.einsum("ij,ij->i", coef, corners) + const
    worst = int(np.argmin(minima))
    if minima[worst] > 0:
        return BackendVerdict(Status.VERIFIED)
    witness = corners[worst].copy()
    return BackendVerdict(Status.FALSIFIED, witness)


class IbpBackend:
    name = "ibp"
    complete = False

    def __call__(self, net, nbh, label, worker: int = 0) -> BackendVerdict:
        return ibp_verify(net, nbh, label)


class AffineBackend:
    name = "affine"
    complete = True

    def __call__(self, net, nbh, label, worker: int = 0) -> BackendVerdict:
        return exact_affine_verify(net, nbh, label)


def load_profile(path) -> dict[int, tuple[float, float]]:
    """Read a ``k<TAB>success<TAB>time`` table (header line optional)."""
    profile = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh, delimiter="\t"):
            if not row or row[0].startswith("#"):
                continue
            try:
                k, p, secs = int(row[0]), float(row[1]), float(row[2])
            except ValueError:
                continue  # header
            profile[k] = (p, secs)
    return profile


@dataclass
class ScriptedBackend:
    """Verdicts drawn from ``profile[k] = (success probability, seconds)``.

    Time is virtual: each call returns its cost instead of sleeping.  Each
    worker draws from its own generator seeded by ``(seed, worker)``.
    """

    profile: Mapping[int, tuple[float, float]]
    seed: int | None = 0
    complete: bool = False
    name: str = "scripted"
    virtual = True
    _rngs: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for k, (p, secs) in self.profile.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"success probability for k={k} outside [0, 1]")
            if secs < 0:
                raise ValueError(f"negative time for k={k}")

    def rng(self, worker: int) -> random.Random:
        if worker not in self._rngs:
            self._rngs[worker] = random.Random(f"{self.seed}/{worker}")
        return self._rngs[worker]

    def __call__(self, net, nbh: Neighborhood, label: int, worker: int = 0) -> BackendVerdict:
        k = len(nbh.free)
        if k not in self.profile:
            raise KeyError(f"scripted profile has no entry for k={k}")
        p, secs = self.profile[k]
        ok = self.rng(worker).random() < p
        return BackendVerdict(Status.VERIFIED if ok else Status.UNKNOWN, cost=secs)
