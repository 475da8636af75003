"""Gibbs sampler for the intransitive Bradley-Terry model.

The match-up on edge (i, j) is ``M = G s + C^T H w``: a gradient flow from
the scores plus a curl flow parameterised by K basis weights. Logistic
likelihood terms are made conditionally Gaussian with Polya-Gamma latents,
and the curl weights carry a horseshoe prior in its inverse-gamma
auxiliary form. Every conditional is conjugate.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg.lapack import dpotrf, dpotrs, dtrtrs

from .complex import OperatorSet, build_operators
from .polya_gamma import _pg_fill, pg_draw_many, pg_mean

log = logging.getLogger(__name__)

SCALE_FLOOR = 1e-12


class ChainAbort(RuntimeError):
    """Raised when the chain produces a non-finite state or a non-SPD precision."""

    def __init__(self, message: str, iteration: int | None = None):
        self.iteration = iteration
        where = "" if iteration is None else f" at iteration {iteration}"
        super().__init__(f"{message}{where}")


@dataclass
class ComparisonData:
    """Aggregated outcomes on the complete graph, edges in lexicographic order.

    ``wins[e]`` counts wins of the lower-indexed entity of edge ``e`` over
    ``trials[e]`` meetings.
    """

    n_entities: int
    wins: np.ndarray
    trials: np.ndarray
    entity_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        n_edges = self.n_entities * (self.n_entities - 1) // 2
        self.wins = np.asarray(self.wins, dtype=np.int64)
        self.trials = np.asarray(self.trials, dtype=np.int64)
        if self.wins.shape != (n_edges,) or self.trials.shape != (n_edges,):
            raise ValueError(f"wins and trials must both have length {n_edges}")
        if np.any(self.trials < 0) or np.any(self.wins < 0) or np.any(self.wins > self.trials):
            raise ValueError("need 0 <= wins <= trials on every pair")
        if not self.entity_labels:
            self.entity_labels = [str(i + 1) for i in range(self.n_entities)]
        if len(self.entity_labels) != self.n_entities:
            raise ValueError("one label per entity required")

    @property
    def kappa(self) -> np.ndarray:
        return self.wins - self.trials / 2.0


@dataclass(frozen=True)
class Hyperparams:
    a_sigma: float = 0.5
    b_sigma: float = 0.5
    n_iterations: int = 10_000
    burn_in: int = 2_000
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.a_sigma <= 0 or self.b_sigma <= 0:
            raise ValueError("a_sigma and b_sigma must be positive")
        if not 0 <= self.burn_in < self.n_iterations:
            raise ValueError("burn_in must be in [0, n_iterations)")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    @property
    def n_draws(self) -> int:
        return (self.n_iterations - self.burn_in) // self.thin


@dataclass
class SamplerState:
    s: np.ndarray
    sigma2: float
    w: np.ndarray
    lambda2: np.ndarray
    tau2: float
    nu: np.ndarray
    xi: float
    omega: np.ndarray
    kappa: np.ndarray

    def copy(self) -> "SamplerState":
        return SamplerState(
            self.s.copy(), self.sigma2, self.w.copy(), self.lambda2.copy(), self.tau2,
            self.nu.copy(), self.xi, self.omega.copy(), self.kappa.copy(),
        )


@dataclass
class PosteriorDraws:
    model: str
    s: np.ndarray  # (draws, N)
    w: np.ndarray  # (draws, K)
    sigma2: np.ndarray
    tau2: np.ndarray
    lambda2: np.ndarray  # (draws, K)
    M_grad: np.ndarray  # (draws, |E|)
    M_curl: np.ndarray
    hyperparams: Hyperparams | None = None
    entity_labels: list[str] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def M(self) -> np.ndarray:
        return self.M_grad + self.M_curl

    @property
    def n_draws(self) -> int:
        return self.s.shape[0]

    @classmethod
    def from_parameters(cls, s, w, ops: OperatorSet, model: str = "bibt", **extra):
        s = np.atleast_2d(np.asarray(s, dtype=float))
        w = np.asarray(w, dtype=float).reshape(s.shape[0], ops.K)
        n = s.shape[0]
        defaults = dict(
            sigma2=np.full(n, np.nan), tau2=np.full(n, np.nan),
            lambda2=np.full((n, ops.K), np.nan),
        )
        defaults.update(extra)
        return cls(model=model, s=s, w=w, M_grad=s @ ops.G.T, M_curl=w @ ops.curl_basis.T,
                   **defaults)


def initial_state(data: ComparisonData, ops: OperatorSet) -> SamplerState:
    K = ops.K
    return SamplerState(
        s=np.zeros(data.n_entities),
        sigma2=1.0,
        w=np.zeros(K),
        lambda2=np.ones(K),
        tau2=1.0,
        nu=np.ones(K),
        xi=1.0,
        omega=np.asarray(pg_mean(data.trials, 0.0), dtype=float),
        kappa=data.kappa.astype(float),
    )


def compute_matchup(state: SamplerState, ops: OperatorSet) -> np.ndarray:
    if state.s.shape != (ops.n_entities,) or state.w.shape != (ops.K,):
        raise ValueError("state dimensions do not match the operators")
    return ops.G @ state.s + ops.curl_basis @ state.w


def _inv_gamma(shape, scale, rng):
    return scale / rng.gamma(shape, 1.0, size=np.shape(scale))


def _gaussian_from_precision(Q, b, rng, what):
    """Draw from N(Q^{-1} b, Q^{-1}) via the Cholesky factor of Q."""
    L, info = dpotrf(Q, lower=1, clean=1, overwrite_a=1)
    if info != 0:
        raise ChainAbort(f"precision matrix for {what} is not positive definite (potrf info={info})")
    mean, _ = dpotrs(L, b, lower=1)
    noise, _ = dtrtrs(L, rng.standard_normal(len(b)), lower=1, trans=1)
    return mean + noise


def gibbs_update_omega(state, data, ops, rng, approx_large_b=False):
    M = compute_matchup(state, ops)
    observed = data.trials > 0
    omega = np.zeros_like(state.omega)
    if approx_large_b:
        if observed.any():
            omega[observed] = pg_draw_many(data.trials[observed], M[observed], rng, True)
    else:
        # trials were validated on construction; zero-trial edges come back as 0
        _pg_fill(data.trials, M, rng, omega)
    state.omega = omega
    return state


def gibbs_update_s(state, data, ops, rng):
    G, om = ops.G, state.omega
    Q = G.T @ (om[:, None] * G)
    Q.flat[:: Q.shape[0] + 1] += 1.0 / state.sigma2
    b = G.T @ (state.kappa - om * (ops.curl_basis @ state.w))
    s = _gaussian_from_precision(Q, b, rng, "scores")
    state.s = s - s.mean()
    return state


def gibbs_update_sigma2(state, rng, a_sigma=0.5, b_sigma=0.5):
    shape = a_sigma + 0.5 * len(state.s)
    scale = b_sigma + 0.5 * float(state.s @ state.s)
    state.sigma2 = max(float(_inv_gamma(shape, scale, rng)), SCALE_FLOOR)
    return state


def gibbs_update_w(state, data, ops, rng):
    B, om = ops.curl_basis, state.omega
    Q = B.T @ (om[:, None] * B)
    Q.flat[:: Q.shape[0] + 1] += 1.0 / (state.tau2 * state.lambda2)
    b = B.T @ (state.kappa - om * (ops.G @ state.s))
    state.w = _gaussian_from_precision(Q, b, rng, "curl weights")
    return state


def gibbs_update_shrinkage(state, rng):
    w2 = state.w**2
    state.lambda2 = np.maximum(_inv_gamma(1.0, 1.0 / state.nu + w2 / (2.0 * state.tau2), rng),
                               SCALE_FLOOR)
    K = len(state.w)
    tau_scale = 1.0 / state.xi + 0.5 * float(np.sum(w2 / state.lambda2))
    state.tau2 = max(float(_inv_gamma(0.5 * (K + 1), tau_scale, rng)), SCALE_FLOOR)
    state.nu = _inv_gamma(1.0, 1.0 + 1.0 / state.lambda2, rng)
    state.xi = float(_inv_gamma(1.0, 1.0 + 1.0 / state.tau2, rng))
    return state


def _check_finite(state: SamplerState, iteration: int):
    packed = np.concatenate((state.s, state.w, state.lambda2, state.nu, state.omega,
                             (state.sigma2, state.tau2, state.xi)))
    if not np.isfinite(packed).all():
        bad = [name for name in ("s", "w", "lambda2", "nu", "omega", "sigma2", "tau2", "xi")
               if not np.all(np.isfinite(getattr(state, name)))]
        raise ChainAbort(f"non-finite {', '.join(bad)}", iteration)


def _run(data, hp, ops, rng, curl, approx_large_b, state=None):
    if data.n_entities != ops.n_entities:
        raise ValueError("data and operators disagree on the number of entities")
    if rng is None:
        rng = np.random.default_rng(hp.seed)
    state = initial_state(data, ops) if state is None else state
    n_keep = hp.n_draws
    K = ops.K
    s_out = np.empty((n_keep, data.n_entities))
    w_out = np.zeros((n_keep, K))
    sigma2_out = np.empty(n_keep)
    tau2_out = np.full(n_keep, np.nan)
    lambda2_out = np.full((n_keep, K), np.nan)
    started = time.perf_counter()
    kept = 0
    for it in range(hp.n_iterations):
        try:
            gibbs_update_omega(state, data, ops, rng, approx_large_b)
            gibbs_update_s(state, data, ops, rng)
            gibbs_update_sigma2(state, rng, hp.a_sigma, hp.b_sigma)
            if curl:
                gibbs_update_w(state, data, ops, rng)
                gibbs_update_shrinkage(state, rng)
        except ChainAbort as exc:
            raise ChainAbort(str(exc), it) from exc
        _check_finite(state, it)
        if it >= hp.burn_in and (it - hp.burn_in) % hp.thin == 0 and kept < n_keep:
            s_out[kept] = state.s
            w_out[kept] = state.w
            sigma2_out[kept] = state.sigma2
            if curl:
                tau2_out[kept] = state.tau2
                lambda2_out[kept] = state.lambda2
            kept += 1
    elapsed = time.perf_counter() - started
    log.debug("%s chain: %d iterations in %.2fs", "bibt" if curl else "baseline",
              hp.n_iterations, elapsed)
    draws = PosteriorDraws.from_parameters(
        s_out, w_out, ops, model="bibt" if curl else "baseline",
        sigma2=sigma2_out, tau2=tau2_out, lambda2=lambda2_out,
        hyperparams=hp, entity_labels=list(data.entity_labels), wall_clock=elapsed,
    )
    if not curl:
        draws.M_curl = np.zeros_like(draws.M_grad)
    return draws


def run_chain(data: ComparisonData, hp: Hyperparams, ops: OperatorSet | None = None,
              rng: np.random.Generator | None = None, approx_large_b: bool = False,
              state: SamplerState | None = None) -> PosteriorDraws:
    """Run the full BIBT sweep (omega, s, sigma2, w, lambda2, tau2, nu, xi).

    ``rng`` overrides ``hp.seed`` when given. ``state`` may seed the chain
    with a custom starting point; it is updated in place.
    """
    ops = build_operators(data.n_entities) if ops is None else ops
    return _run(data, hp, ops, rng, True, approx_large_b, state)


def run_baseline_chain(data: ComparisonData, hp: Hyperparams, ops: OperatorSet | None = None,
                       rng: np.random.Generator | None = None,
                       approx_large_b: bool = False) -> PosteriorDraws:
    """Transitive Bradley-Terry fit: the same sweep with w pinned at zero."""
    ops = build_operators(data.n_entities) if ops is None else ops
    return _run(data, hp, ops, rng, False, approx_large_b)


def with_seed(hp: Hyperparams, seed: int) -> Hyperparams:
    return replace(hp, seed=seed)
