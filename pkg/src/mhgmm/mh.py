"""Metropolis-Hastings sampling of configurations from the Gibbs posterior.

The chain moves on the discrete space of configurations eta = (K, S). The
target at temperature lambda is proportional to
exp(-lambda * NLL(X1 | theta_hat(eta))) * pi(eta), where theta_hat(eta) is
the EM fit on the estimation sample X2. Proposals are clustering-aware: a
variable enters S with probability proportional to its between-variance
under the current MAP clustering, and leaves S with probability
proportional to the inverse between-variance.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError
from .gmm import Clustering, Configuration, GmmModel, Shape, fit_em, map_clustering, neg_log_likelihood
from .kmeans import kmeans
from .prior import PriorParams, log_prior

__all__ = [
    "BetweenVariance",
    "ChainState",
    "ChainRecord",
    "ChainTrajectory",
    "Proposal",
    "ChainOptions",
    "StateCache",
    "between_variance",
    "kmeans",
    "propose",
    "log_kernel_prob",
    "acceptance_log_ratio",
    "initial_support",
    "prune_step",
    "run_chain",
    "trajectory_to_csv",
]

log = logging.getLogger(__name__)

_INV_EPS = 1e-12  # regularizer for inverse between-variance weights
_NEG_INF = float("-inf")

# seed-derivation tags so every RNG stream in a run is distinct
_TAG_INIT_KMEANS = 11
_TAG_EM = 12


@dataclass(frozen=True)
class BetweenVariance:
    """Variance of cluster barycenters around the global barycenter."""

    per_variable: np.ndarray
    total: float


@dataclass(frozen=True)
class ChainState:
    """A fully evaluated configuration: fit, holdout NLL, clustering."""

    config: Configuration
    model: GmmModel
    clustering: Clustering
    nll_x1: float
    between: BetweenVariance


@dataclass(frozen=True)
class Proposal:
    config: Configuration
    kind: str  # "K" | "add" | "remove" | "prune"
    log_fwd: float | None


@dataclass(frozen=True)
class ChainRecord:
    step: int
    config: Configuration
    nll_x1: float
    accepted: bool
    kind: str


@dataclass(frozen=True)
class ChainTrajectory:
    records: list[ChainRecord]
    pruning_end: int  # first index of the exact-kernel segment
    lam: float
    split_id: int
    seed: int

    def __len__(self) -> int:
        return len(self.records)

    def configs(self, start: int = 0) -> list[Configuration]:
        return [r.config for r in self.records[start:]]

    @property
    def final_config(self) -> Configuration:
        return self.records[-1].config


@dataclass(frozen=True)
class ChainOptions:
    """Everything a chain needs besides (data, lambda, seed)."""

    k_max: int = 10
    prune: bool = True
    prune_target: int | None = None  # default ceil(d/3)
    em_seed: int = 0
    n_starts: int = 3
    tol: float = 1e-6
    max_iter: int = 200
    variance_floor: float = 1e-4
    shape: Shape = Shape.LB
    cache: "StateCache | None" = field(default=None, compare=False)


def between_variance(clustering: Clustering, values: np.ndarray) -> BetweenVariance:
    """Per-variable and total between-variance of a clustering of ``values``."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    labels = clustering.labels
    if labels.size != values.shape[0]:
        raise ValueError("clustering and data cover different numbers of observations")
    n = values.shape[0]
    k = int(labels.max())
    sizes = np.bincount(labels - 1, minlength=k).astype(float)
    sums = np.zeros((k, values.shape[1]))
    np.add.at(sums, labels - 1, values)
    centers = sums / np.maximum(sizes, 1.0)[:, None]
    overall = values.mean(axis=0)
    per_var = (sizes[:, None] * (centers - overall) ** 2).sum(axis=0) / n
    return BetweenVariance(per_variable=per_var, total=float(per_var.sum()))


def _h_probs(k: int, k_max: int) -> dict[int, float]:
    """Distribution of the proposed cluster count given the current one."""
    if k_max == 1:
        return {1: 1.0}
    if k == 1:
        return {1: 0.5, 2: 0.5}
    if k == k_max:
        return {k - 1: 0.5, k: 0.5}
    return {k - 1: 0.25, k: 0.5, k + 1: 0.25}


def _add_distribution(between: BetweenVariance, s: tuple[int, ...], d: int):
    """Candidate variables to add and their selection probabilities."""
    cand = np.setdiff1d(np.arange(1, d + 1), np.asarray(s, dtype=np.int64))
    w = between.per_variable[cand - 1]
    total = w.sum()
    if total <= 0.0:
        return cand, np.full(cand.size, 1.0 / cand.size)
    return cand, w / total


def _remove_distribution(between: BetweenVariance, s: tuple[int, ...]):
    """Variables eligible for removal and their selection probabilities."""
    arr = np.asarray(s, dtype=np.int64)
    w = 1.0 / (between.per_variable[arr - 1] + _INV_EPS)
    return arr, w / w.sum()


def propose(state: ChainState, rng: np.random.Generator, k_max: int, d: int) -> Proposal:
    """Draw a candidate configuration from the transition kernel W(eta, .).

    Returns the proposal together with ln W(eta, eta_new); the reverse
    probability needs the candidate's own clustering, so the caller
    computes it after fitting (see ``log_kernel_prob``).
    """
    k, s = state.config.K, state.config.S
    hp = _h_probs(k, k_max)
    ks = sorted(hp)
    k_new = ks[rng.choice(len(ks), p=[hp[x] for x in ks])]
    if k_new != k:
        return Proposal(Configuration(k_new, s), "K", math.log(hp[k_new]))

    log_fwd = math.log(hp[k])
    if len(s) == 0:
        add = True
    elif len(s) == d:
        add = False
    else:
        add = rng.random() < 0.5
        log_fwd += math.log(0.5)
    if add:
        cand, probs = _add_distribution(state.between, s, d)
        i = rng.choice(cand.size, p=probs)
        config = Configuration(k, s + (int(cand[i]),))
        return Proposal(config, "add", log_fwd + math.log(probs[i]))
    cand, probs = _remove_distribution(state.between, s)
    i = rng.choice(cand.size, p=probs)
    config = Configuration(k, tuple(j for j in s if j != int(cand[i])))
    return Proposal(config, "remove", log_fwd + math.log(probs[i]))


def log_kernel_prob(state_from: ChainState, config_to: Configuration, k_max: int, d: int) -> float:
    """ln W(eta_from, eta_to); -inf when the kernel cannot propose the move."""
    k1, s1 = state_from.config.K, state_from.config.S
    k2, s2 = config_to.K, config_to.S
    hp = _h_probs(k1, k_max)
    if k2 != k1:
        if s2 != s1 or k2 not in hp:
            return _NEG_INF
        return math.log(hp[k2])
    if s1 == s2 or k1 not in hp:
        return _NEG_INF

    set1, set2 = set(s1), set(s2)
    added = set2 - set1
    removed = set1 - set2
    base = math.log(hp[k1])
    if len(added) == 1 and not removed:
        if 0 < len(s1) < d:
            base += math.log(0.5)
        cand, probs = _add_distribution(state_from.between, s1, d)
        p = probs[cand == next(iter(added))]
        if p.size == 0 or p[0] <= 0.0:
            return _NEG_INF
        return base + math.log(p[0])
    if len(removed) == 1 and not added:
        if 0 < len(s1) < d:
            base += math.log(0.5)
        cand, probs = _remove_distribution(state_from.between, s1)
        p = probs[cand == next(iter(removed))]
        if p.size == 0 or p[0] <= 0.0:
            return _NEG_INF
        return base + math.log(p[0])
    return _NEG_INF


def acceptance_log_ratio(
    state_old: ChainState,
    state_new: ChainState,
    lam: float,
    log_fwd: float,
    log_bwd: float,
    prior_params: PriorParams,
) -> float:
    """ln r of the Metropolis-Hastings ratio targeting the Gibbs posterior.

    Accept when U <= min(1, r), U uniform on [0, 1].
    """
    return (
        -lam * (state_new.nll_x1 - state_old.nll_x1)
        + log_prior(state_new.config, prior_params)
        - log_prior(state_old.config, prior_params)
        + log_bwd
        - log_fwd
    )


def initial_support(values: np.ndarray, k0: int, seed, kmeans_n_init: int = 10) -> Configuration:
    """Starting configuration: all variables when n <= d, otherwise the
    top-n variables by between-variance of a k-means clustering."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n, d = values.shape
    if k0 < 1:
        raise ValueError("K0 must be >= 1")
    if n <= d:
        return Configuration(k0, tuple(range(1, d + 1)))
    clustering = kmeans(values, k0, seed, n_init=kmeans_n_init)
    bv = between_variance(clustering, values).per_variable
    keep = min(n, d)
    top = np.argsort(-bv, kind="stable")[:keep]
    return Configuration(k0, tuple(sorted(int(j) + 1 for j in top)))


def prune_step(state: ChainState, target: int, rng: np.random.Generator) -> Proposal:
    """Heuristic burn-in move removing a batch of low-between-variance
    variables: batch size uniform on {1..ceil(|S|/2)}, clamped to land at or
    above ``target``; variables drawn without replacement with probability
    proportional to inverse between-variance."""
    s = state.config.S
    if len(s) <= target:
        raise ValueError("pruning requires |S| > target")
    m = int(rng.integers(1, math.ceil(len(s) / 2) + 1))
    m = min(m, len(s) - target)
    cand, probs = _remove_distribution(state.between, s)
    drop = rng.choice(cand.size, size=m, replace=False, p=probs)
    dropped = {int(cand[i]) for i in drop}
    config = Configuration(state.config.K, tuple(j for j in s if j not in dropped))
    return Proposal(config, "prune", None)


class StateCache:
    """Fit-and-evaluate memoizer keyed by configuration.

    EM seeds derive from (em_seed, K, S) only, so a cache may be shared by
    every chain that uses the same split without changing any trajectory.
    """

    def __init__(self, x1: np.ndarray, x2: np.ndarray, full_values: np.ndarray, options: ChainOptions):
        self.x1 = np.atleast_2d(np.asarray(x1, dtype=float))
        self.x2 = np.atleast_2d(np.asarray(x2, dtype=float))
        self.full_values = np.atleast_2d(np.asarray(full_values, dtype=float))
        self.options = options
        self.em_calls = 0
        self._states: dict[Configuration, ChainState] = {}

    def state(self, config: Configuration) -> ChainState:
        cached = self._states.get(config)
        if cached is not None:
            return cached
        opts = self.options
        seed = np.random.SeedSequence((opts.em_seed, _TAG_EM, config.K, *config.S))
        model = fit_em(
            self.x2,
            config,
            opts.shape,
            seed=seed,
            n_starts=opts.n_starts,
            tol=opts.tol,
            max_iter=opts.max_iter,
            variance_floor=opts.variance_floor,
        )
        self.em_calls += 1
        nll_x1 = neg_log_likelihood(model, self.x1)
        if not np.isfinite(nll_x1):
            raise NumericalError(f"non-finite holdout likelihood for {config}")
        clustering = map_clustering(model, self.full_values)
        between = between_variance(clustering, self.full_values)
        state = ChainState(config, model, clustering, nll_x1, between)
        self._states[config] = state
        return state


def run_chain(
    x1: np.ndarray,
    x2: np.ndarray,
    full_values: np.ndarray,
    lam: float,
    k0: int,
    steps: int,
    seed,
    options: ChainOptions = ChainOptions(),
    split_id: int = 0,
) -> ChainTrajectory:
    """Run one Metropolis-Hastings chain at temperature ``lam``.

    The trajectory holds exactly ``steps`` states starting from the initial
    configuration; a pruning phase (always-accepted batch removals, treated
    as burn-in) runs first when enabled, followed by the exact kernel.
    Reproducible bit-for-bit given (data, seed, lam, options).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if lam <= 0:
        raise ValueError("temperature must be positive")
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    full_values = np.atleast_2d(np.asarray(full_values, dtype=float))
    d = full_values.shape[1]
    target = options.prune_target if options.prune_target is not None else math.ceil(d / 3)
    prior_params = PriorParams(d=d, K_max=options.k_max)
    cache = options.cache if options.cache is not None else StateCache(x1, x2, full_values, options)
    rng = np.random.default_rng(seed)

    init_seed = np.random.SeedSequence((options.em_seed, _TAG_INIT_KMEANS))
    state = cache.state(initial_support(full_values, k0, init_seed))
    records = [ChainRecord(0, state.config, state.nll_x1, True, "init")]

    u = 1
    while options.prune and len(state.config.S) > target and u < steps:
        proposal = prune_step(state, target, rng)
        try:
            state = cache.state(proposal.config)
            accepted = True
        except (ValueError, NumericalError) as exc:
            log.warning("pruning fit failed (%s); keeping current support", exc)
            accepted = False
        records.append(ChainRecord(u, state.config, state.nll_x1, accepted, "prune"))
        u += 1
    pruning_end = u

    while u < steps:
        proposal = propose(state, rng, options.k_max, d)
        accepted = False
        try:
            candidate = cache.state(proposal.config)
        except (ValueError, NumericalError) as exc:
            log.warning("rejecting %s: fit failed (%s)", proposal.config, exc)
        else:
            log_bwd = log_kernel_prob(candidate, state.config, options.k_max, d)
            log_r = acceptance_log_ratio(
                state, candidate, lam, proposal.log_fwd, log_bwd, prior_params
            )
            if math.log(max(rng.random(), 1e-300)) <= min(0.0, log_r):
                state = candidate
                accepted = True
        records.append(ChainRecord(u, state.config, state.nll_x1, accepted, proposal.kind))
        u += 1

    seed_int = int(seed) if np.isscalar(seed) else -1
    return ChainTrajectory(records, pruning_end, float(lam), split_id, seed_int)


def trajectory_to_csv(trajectory: ChainTrajectory, path) -> None:
    """One row per chain state: the data behind a trace plot."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "K", "S", "nll_X1", "accepted", "move_kind"])
        for r in trajectory.records:
            writer.writerow(
                [
                    r.step,
                    r.config.K,
                    ";".join(str(j) for j in r.config.S),
                    repr(r.nll_x1),
                    int(r.accepted),
                    r.kind,
                ]
            )
