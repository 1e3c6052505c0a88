"""Renewable-energy arrival process: sampling and scenario-tree discretization.

The harvested power of drone ``l`` during slot ``b`` is a random variable
with deterministic mean ``phi_mean_w[l, b]``.  Supported uncertainty specs:

  * ``None``                    degenerate (always the mean)
  * ``("gamma", shape, scale)`` i.i.d. Gamma draws; the mean matrix must
                                equal ``shape * scale`` everywhere
  * ``("two_point", x)``        ``(1 - x)`` or ``(1 + x)`` times the mean,
                                each with probability one half

The harvesting efficiency coefficient is applied where energy is accounted,
not here; this module deals in raw received Watts.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import TreeTooLarge, ValidationError

DEFAULT_TREE_CAP = 4096


def named_rng(seed: int, *labels) -> np.random.Generator:
    """Independent generator for a named sub-stream of the root seed."""
    words = [int(seed) & 0xFFFFFFFF]
    for label in labels:
        digest = hashlib.sha256(str(label).encode()).digest()
        words.append(int.from_bytes(digest[:4], "little"))
    return np.random.default_rng(np.random.SeedSequence(words))


@dataclass(frozen=True)
class REProcess:
    """Mean received power per (drone, slot) plus an uncertainty spec."""

    phi_mean_w: np.ndarray = field(compare=False)
    uncertainty: tuple | None = None

    def __post_init__(self):
        phi = np.asarray(self.phi_mean_w, dtype=float)
        object.__setattr__(self, "phi_mean_w", phi)
        if (phi < 0).any():
            raise ValidationError("mean received power must be nonnegative")
        if self.uncertainty is None:
            return
        kind = self.uncertainty[0]
        if kind == "gamma":
            _, shape, scale = self.uncertainty
            if shape <= 0 or scale <= 0:
                raise ValidationError("gamma shape and scale must be positive")
            if not np.allclose(phi, shape * scale, rtol=1e-9, atol=1e-12):
                raise ValidationError(
                    "gamma uncertainty requires phi_mean_w == shape * scale")
        elif kind == "two_point":
            x = self.uncertainty[1]
            if not 0 <= x <= 1:
                raise ValidationError("two_point deviation must be in [0, 1]")
        else:
            raise ValidationError(f"unknown uncertainty kind {kind!r}")

    @property
    def d_count(self) -> int:
        return self.phi_mean_w.shape[0]

    @property
    def b_count(self) -> int:
        return self.phi_mean_w.shape[1]


@dataclass(frozen=True)
class TreeScenario:
    phi_w: np.ndarray
    prob: float


def sample(process: REProcess, l: int, b: int, rng: np.random.Generator) -> float:
    """One received-power draw for drone ``l``, 1-based slot ``b``."""
    mean = process.phi_mean_w[l, b - 1]
    if process.uncertainty is None:
        return float(mean)
    kind = process.uncertainty[0]
    if kind == "gamma":
        _, shape, scale = process.uncertainty
        return float(rng.gamma(shape, scale))
    x = process.uncertainty[1]
    lo, hi = (1.0 - x) * mean, (1.0 + x) * mean
    return float(hi if rng.random() < 0.5 else lo)


def sample_matrix(process: REProcess, rng: np.random.Generator) -> np.ndarray:
    """A full (drones, slots) realization, row-major draw order."""
    out = np.empty_like(process.phi_mean_w)
    for l in range(process.d_count):
        for b in range(1, process.b_count + 1):
            out[l, b - 1] = sample(process, l, b, rng)
    return out


def discretize(process: REProcess, levels: int,
               cap: int = DEFAULT_TREE_CAP) -> list[TreeScenario]:
    """Expand the per-(drone, slot) uncertainty into a full product tree.

    ``levels == 1`` collapses to the single mean scenario.  Two-point
    uncertainty expands to ``2 ** (D * B)`` equally structured scenarios
    whose probabilities multiply across independent cells.  Raises
    TreeTooLarge when the product set exceeds ``cap``; callers should then
    fall back to :func:`sample_tree`.
    """
    if levels < 1:
        raise ValidationError("levels must be at least 1")
    if levels == 1 or process.uncertainty is None:
        return [TreeScenario(process.phi_mean_w.copy(), 1.0)]
    kind = process.uncertainty[0]
    if kind != "two_point":
        raise ValidationError(
            f"full-tree discretization supports two_point uncertainty, not {kind!r};"
            " use sample_tree for sampled subsets")
    if levels != 2:
        raise ValidationError("two_point uncertainty discretizes to exactly 2 levels")
    cells = process.d_count * process.b_count
    size = levels ** cells
    if size > cap:
        raise TreeTooLarge(
            f"{levels}**{cells} = {size} scenarios exceed the cap {cap}")
    x = process.uncertainty[1]
    prob = 0.5 ** cells
    scenarios = []
    for code in range(size):
        signs = np.empty(cells)
        for cell in range(cells):
            signs[cell] = 1.0 + x if (code >> cell) & 1 else 1.0 - x
        phi = process.phi_mean_w * signs.reshape(process.phi_mean_w.shape)
        scenarios.append(TreeScenario(phi, prob))
    return scenarios


def sample_tree(process: REProcess, n: int,
                rng: np.random.Generator) -> list[TreeScenario]:
    """Sample-average approximation: ``n`` i.i.d. realizations, weight 1/n."""
    if n < 1:
        raise ValidationError("sampled tree needs at least one scenario")
    return [TreeScenario(sample_matrix(process, rng), 1.0 / n) for _ in range(n)]


def tree_expectation(tree: list[TreeScenario]) -> np.ndarray:
    total = sum(s.prob for s in tree)
    if abs(total - 1.0) > 1e-12:
        raise ValidationError(f"tree probabilities sum to {total!r}, not 1")
    return sum(s.prob * s.phi_w for s in tree)
