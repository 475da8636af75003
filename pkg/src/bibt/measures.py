"""Posterior functionals of the decomposed match-up: global intransitivity,
local vorticity, and per-component credible summaries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex import ComplexIndex, build_complex, curl_apply
from .sampler import PosteriorDraws

DEFAULT_LEVELS = (0.025, 0.05, 0.95, 0.975)
QUANTITIES = ("global_measure", "vorticity", "matchup", "grad_flow", "curl_flow", "scores")


def global_intransitivity(m_grad, m_curl) -> np.ndarray:
    """Share of squared match-up norm carried by the curl flow.

    Accepts single flows or stacks of draws (last axis = edges). A draw with
    both components identically zero counts as transitive (0).
    """
    g = np.sum(np.square(m_grad), axis=-1)
    c = np.sum(np.square(m_curl), axis=-1)
    total = g + c
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(total > 0, c / np.where(total > 0, total, 1.0), 0.0)
    return out[()] if np.ndim(out) == 0 else out


def local_vorticity(m, idx: ComplexIndex) -> np.ndarray:
    """Cyclic sums M_ij + M_jk + M_ki on every triangle (per draw if 2-D)."""
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        return curl_apply(m, idx)
    t = idx.triangles
    n = idx.n_entities
    pos = lambda a, b: a * n - a * (a + 1) // 2 + (b - a - 1)  # noqa: E731
    return m[:, pos(t[:, 0], t[:, 1])] + m[:, pos(t[:, 1], t[:, 2])] - m[:, pos(t[:, 0], t[:, 2])]


def posterior_mean(samples, axis: int = 0) -> np.ndarray:
    """Mean over draws taken about the first draw, exact for constant chains."""
    samples = np.asarray(samples, dtype=float)
    first = np.take(samples, [0], axis=axis)
    return np.squeeze(first, axis=axis) + np.mean(samples - first, axis=axis)


def credible_interval(samples, level: float, axis: int = 0):
    """Equal-tailed interval holding ``level`` posterior mass."""
    if not 0 < level < 1:
        raise ValueError("level must lie strictly between 0 and 1")
    lo, hi = np.quantile(samples, [(1 - level) / 2, (1 + level) / 2], axis=axis)
    return lo, hi


@dataclass
class MeasureSummary:
    quantity: str
    component_labels: list[str]
    mean: np.ndarray
    sd: np.ndarray
    quantiles: dict[float, np.ndarray]
    flags: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "quantity": self.quantity,
            "component_labels": list(self.component_labels),
            "mean": self.mean.tolist(),
            "sd": self.sd.tolist(),
            "quantiles": {repr(float(k)): v.tolist() for k, v in self.quantiles.items()},
            "flags": [] if self.flags is None else [bool(f) for f in self.flags],
        }
        out.update(self.extra)
        return out

    def top(self, count: int = 10) -> list[int]:
        """Components ordered by |mean| descending, ties by position (lexicographic)."""
        order = np.lexsort((np.arange(len(self.mean)), -np.abs(self.mean)))
        return [int(i) for i in order[:count]]


def edge_labels(idx: ComplexIndex, names=None) -> list[str]:
    names = names or [str(i + 1) for i in range(idx.n_entities)]
    return [f"{names[i]}-{names[j]}" for i, j in idx.edges]


def triangle_labels(idx: ComplexIndex, names=None) -> list[str]:
    names = names or [str(i + 1) for i in range(idx.n_entities)]
    return [f"{names[i]}-{names[j]}-{names[k]}" for i, j, k in idx.triangles]


def quantity_samples(draws: PosteriorDraws, quantity: str, idx: ComplexIndex | None = None):
    """Per-draw values of a quantity as a (draws, components) array plus labels."""
    n = draws.s.shape[1]
    idx = idx or build_complex(n)
    names = draws.entity_labels or None
    if quantity == "global_measure":
        return global_intransitivity(draws.M_grad, draws.M_curl)[:, None], ["I"]
    if quantity == "vorticity":
        return local_vorticity(draws.M, idx), triangle_labels(idx, names)
    if quantity == "matchup":
        return draws.M, edge_labels(idx, names)
    if quantity == "grad_flow":
        return draws.M_grad, edge_labels(idx, names)
    if quantity == "curl_flow":
        return draws.M_curl, edge_labels(idx, names)
    if quantity == "scores":
        return draws.s, list(names or [str(i + 1) for i in range(n)])
    raise ValueError(f"unknown quantity {quantity!r}; choose from {QUANTITIES}")


def summarize(draws: PosteriorDraws, quantity: str, levels=DEFAULT_LEVELS,
              idx: ComplexIndex | None = None) -> MeasureSummary:
    if draws.n_draws < 2:
        raise ValueError("need at least two retained draws to summarise")
    samples, labels = quantity_samples(draws, quantity, idx)
    levels = sorted(float(p) for p in levels)
    q = np.quantile(samples, levels, axis=0)
    summary = MeasureSummary(
        quantity=quantity,
        component_labels=labels,
        mean=posterior_mean(samples),
        sd=(samples - samples[0]).std(axis=0, ddof=1),
        quantiles={p: q[i] for i, p in enumerate(levels)},
    )
    if quantity == "vorticity":
        lo, hi = credible_interval(samples, 0.95)
        flags = (lo > 0) | (hi < 0)
        summary.flags = flags
        summary.extra = {
            "ci_excludes_zero_count": int(flags.sum()),
            "ci_excludes_zero_fraction": float(flags.mean()),
        }
    return summary
