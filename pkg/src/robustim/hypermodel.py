"""Generalized linear edge-probability models over a box of hyperparameters.

A model maps a hyperparameter theta in [-B, B]^d to one probability per arc
via p_e = h(theta . x_e), where h is a 1-Lipschitz scalar link.  The module
also provides uniform cover sampling of the box and the influence-sensitivity
constant that converts value accuracy into a parameter-space radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, ndtr

from .errors import CapacityError, ParameterError, ParseError
from .graphs import Graph


def _link_linear(z: np.ndarray) -> np.ndarray:
    return np.clip(z, 0.0, 1.0)


def _link_logistic(z: np.ndarray) -> np.ndarray:
    return expit(z)


def _link_probit(z: np.ndarray) -> np.ndarray:
    return ndtr(z)


LINKS = {
    "linear": _link_linear,
    "logistic": _link_logistic,
    "probit": _link_probit,
}


@dataclass(frozen=True)
class HyperModel:
    """A named link plus the hyperparameter box [-B, B]^d.

    Construction verifies numerically, on a grid spanning the reachable
    argument range [-B*d, B*d], that the link is 1-Lipschitz and maps into
    [0, 1].
    """

    link: str = "logistic"
    B: float = 1.0
    d: int = 5

    def __post_init__(self):
        if self.link not in LINKS:
            raise ParameterError(f"unknown link {self.link!r}; choose from {sorted(LINKS)}")
        if self.B <= 0:
            raise ParameterError("B must be > 0")
        if self.d < 1:
            raise ParameterError("d must be >= 1")
        span = self.B * self.d + 1.0
        z = np.linspace(-span, span, 1025)
        h = LINKS[self.link](z)
        if np.any(h < -1e-12) or np.any(h > 1.0 + 1e-12):
            raise ParameterError(f"link {self.link!r} leaves [0, 1] on [-{span}, {span}]")
        slopes = np.abs(np.diff(h)) / np.diff(z)
        if np.any(slopes > 1.0 + 1e-9):
            raise ParameterError(f"link {self.link!r} is not 1-Lipschitz on the grid")

    def apply(self, z: np.ndarray) -> np.ndarray:
        return LINKS[self.link](np.asarray(z, dtype=np.float64))


def edge_probabilities(model: HyperModel, theta: np.ndarray, graph: Graph) -> np.ndarray:
    """Probability vector p with p_e = h(theta . x_e), in arc order."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (model.d,):
        raise ParameterError(f"theta has shape {theta.shape}, expected ({model.d},)")
    if graph.d != model.d:
        raise ParameterError(f"graph feature dim {graph.d} != model dim {model.d}")
    if np.any(np.abs(theta) > model.B + 1e-12):
        raise ParameterError(f"theta leaves the box [-{model.B}, {model.B}]^{model.d}")
    p = model.apply(graph.features @ theta)
    return np.clip(p, 0.0, 1.0)


def lipschitz_bound(graph: Graph) -> float:
    """Sensitivity constant n*m: an l1 hyperparameter change of eps moves any
    expected influence value by at most n*m*eps."""
    return float(graph.n * graph.m)


def function_cover_radius(epsilon_value: float, graph: Graph) -> float:
    """Parameter-space radius whose cover guarantees ``epsilon_value`` accuracy
    in influence value on every seed set."""
    if epsilon_value <= 0:
        raise ParameterError("epsilon_value must be > 0")
    lip = lipschitz_bound(graph)
    if lip == 0:
        raise ParameterError("graph has no arcs; influence value never varies")
    return epsilon_value / lip


@dataclass(frozen=True)
class Cover:
    """A sampled set of hyperparameters intended to cover the box."""

    thetas: np.ndarray  # (s, d)
    epsilon_theta: float
    delta: float
    B: float

    def __post_init__(self):
        self.thetas.setflags(write=False)

    @property
    def s(self) -> int:
        return self.thetas.shape[0]

    @property
    def d(self) -> int:
        return self.thetas.shape[1]


def cover_sample_count(model: HyperModel, epsilon_theta: float, delta: float) -> int:
    """Number of uniform draws, ceil(r * ln(r / delta)), where r is the number
    of l1 balls of radius epsilon_theta needed to cover the box."""
    if epsilon_theta <= 0:
        raise ParameterError("epsilon_theta must be > 0")
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1)")
    ratio = 2.0 * model.B * model.d / epsilon_theta
    if ratio <= 1.0:
        r = 1
    else:
        if model.d * math.log2(ratio) >= 63:
            raise CapacityError(
                "covering number exceeds 64-bit range; pass s_override with an "
                "explicit sample count"
            )
        r = math.ceil(ratio**model.d)
    return max(1, math.ceil(r * math.log(r / delta)))


def sample_cover(
    model: HyperModel,
    epsilon_theta: float,
    delta: float,
    rng_seed: int,
    s_override: int | None = None,
) -> Cover:
    """Draw a cover of the box by uniform i.i.d. sampling.

    The default count follows the ball-counting bound; ``s_override`` replaces
    it (the experiment presets use a fixed small cover).
    """
    if s_override is not None:
        if s_override < 1:
            raise ParameterError("s_override must be >= 1")
        s = int(s_override)
        if epsilon_theta <= 0:
            raise ParameterError("epsilon_theta must be > 0")
        if not 0.0 < delta < 1.0:
            raise ParameterError("delta must lie in (0, 1)")
    else:
        s = cover_sample_count(model, epsilon_theta, delta)
    rng = np.random.default_rng(rng_seed)
    thetas = rng.uniform(-model.B, model.B, size=(s, model.d))
    return Cover(thetas=thetas, epsilon_theta=epsilon_theta, delta=delta, B=model.B)


def save_cover(cover: Cover, path) -> None:
    """Write one theta per line: header ``# d=<d> B=<B> eps=<eps> s=<s>``."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(
            f"# d={cover.d} B={cover.B!r} eps={cover.epsilon_theta!r} s={cover.s}\n"
        )
        for row in cover.thetas:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_cover(path, delta: float = 0.5) -> Cover:
    """Parse a cover saved by :func:`save_cover`.

    The failure probability is not stored in the file; ``delta`` restores it
    for callers that care.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines or not lines[0].startswith("#"):
        raise ParseError(f"{path}: missing cover header")
    try:
        fields = dict(item.split("=", 1) for item in lines[0][1:].split())
        d = int(fields["d"])
        B = float(fields["B"])
        eps = float(fields["eps"])
        s = int(fields["s"])
    except (ValueError, KeyError) as exc:
        raise ParseError(f"{path}: malformed header {lines[0]!r}") from exc
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != d:
            raise ParseError(f"{path}:{lineno}: expected {d} values, got {len(parts)}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-numeric value") from exc
    thetas = np.array(rows, dtype=np.float64)
    if thetas.shape[0] != s:
        raise ParseError(f"{path}: header claims s={s} but found {thetas.shape[0]} rows")
    if np.any(np.abs(thetas) > B + 1e-12):
        raise ParseError(f"{path}: theta outside the [-{B}, {B}] box")
    return Cover(thetas=thetas, epsilon_theta=eps, delta=delta, B=B)
