"""Latent relevance estimation from per-slate listwise scores.

Each observation of node ``v`` in slate ``i`` is modelled as::

    s[i, v] ~= a * latent[v] + bias[i]

with one global positive scale ``a`` and a bias per slate. The fit minimises
the sum of squared residuals plus a small gauge penalty
``gauge_penalty * ((a - 1)**2 + sum(bias**2))`` that pins the otherwise free
scale/shift. Optimisation is Adam on ``(log a, latent, bias)``; a step that
raises the loss of a connected block of the slate-overlap graph is rejected
for that block and its learning rate halved, so the loss never increases.
A closing exact update sets each latent score to its least-squares value
given the fitted scale and biases.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .tree import NodeId

logger = logging.getLogger(__name__)


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class SlateRecord:
    slate_id: int
    entries: tuple[tuple[NodeId, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((n, float(s)) for n, s in self.entries))
        if not self.entries:
            raise CalibrationError(f"slate {self.slate_id}: no entries")
        nodes = [n for n, _ in self.entries]
        if len(set(nodes)) != len(nodes):
            raise CalibrationError(f"slate {self.slate_id}: duplicate node")
        for n, s in self.entries:
            if not 0.0 <= s <= 1.0 or math.isnan(s):
                raise CalibrationError(f"slate {self.slate_id}: score {s} for {n!r} outside [0, 1]")
        if len(self.entries) == 1:
            logger.debug("slate %d has a single entry; its bias is pinned to 0", self.slate_id)

    @property
    def nodes(self) -> list[NodeId]:
        return [n for n, _ in self.entries]

    @property
    def is_singleton(self) -> bool:
        return len(self.entries) == 1


@dataclass
class ScoreHistory:
    records: list[SlateRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def last_slate_id(self) -> int | None:
        return self.records[-1].slate_id if self.records else None

    def node_ids(self) -> list[NodeId]:
        return list(dict.fromkeys(n for r in self.records for n in r.nodes))


def record_slate(history: ScoreHistory, slate: SlateRecord) -> ScoreHistory:
    """Append ``slate`` in place and return the history.

    Slate ids must be strictly increasing, which also rules out duplicates.
    """
    last = history.last_slate_id
    if last is not None and slate.slate_id <= last:
        if any(r.slate_id == slate.slate_id for r in history.records):
            raise CalibrationError(f"slate id {slate.slate_id} already recorded")
        raise CalibrationError(f"slate id {slate.slate_id} not greater than last id {last}")
    history.records.append(slate)
    return history


@dataclass(frozen=True)
class SolverConfig:
    learning_rate: float = 1e-2
    steps: int = 100
    gauge_penalty: float = 1e-3
    fit_scale: bool = True
    fit_bias: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def mean_only(cls) -> "SolverConfig":
        """a fixed to 1 and all biases fixed to 0: latent score is the plain mean."""
        return cls(fit_scale=False, fit_bias=False)


@dataclass
class CalibrationModel:
    a: float
    biases: dict[int, float]
    latent: dict[NodeId, float]
    solver_config: SolverConfig
    loss_trace: list[float] = field(default_factory=list)

    def latent_score(self, v: NodeId) -> float | None:
        return self.latent.get(v)

    def fitted(self, slate_id: int, v: NodeId) -> float:
        return self.a * self.latent[v] + self.biases.get(slate_id, 0.0)

    @property
    def objective(self) -> float:
        return self.loss_trace[-1] if self.loss_trace else float("nan")


def latent_score(model: CalibrationModel, v: NodeId) -> float | None:
    """``None`` for a node that never appeared in any slate."""
    return model.latent_score(v)


class _Problem:
    """Flattened observation arrays for one history."""

    def __init__(self, history: ScoreHistory):
        # canonical order so the fit does not depend on entry order
        self.nodes = sorted(history.node_ids())
        self.node_index = {v: k for k, v in enumerate(self.nodes)}
        self.slate_ids = [r.slate_id for r in history.records]
        nidx, sidx, y = [], [], []
        for k, r in enumerate(history.records):
            for v, s in sorted(r.entries):
                nidx.append(self.node_index[v])
                sidx.append(k)
                y.append(s)
        self.nidx = np.asarray(nidx, dtype=np.intp)
        self.sidx = np.asarray(sidx, dtype=np.intp)
        self.y = np.asarray(y, dtype=float)
        self.n_nodes = len(self.nodes)
        self.n_slates = len(self.slate_ids)
        self.n_obs = len(self.y)
        sizes = np.bincount(self.sidx, minlength=self.n_slates)
        self.bias_free = sizes > 1
        self.node_counts = np.bincount(self.nidx, minlength=self.n_nodes).astype(float)
        # node k and slate j are vertices n_nodes + j of one bipartite graph
        g = coo_matrix(
            (np.ones(self.n_obs), (self.nidx, self.n_nodes + self.sidx)),
            shape=(self.n_nodes + self.n_slates,) * 2,
        )
        self.n_blocks, labels = connected_components(g, directed=False)
        self.node_block = labels[: self.n_nodes]
        self.slate_block = labels[self.n_nodes :]
        self.obs_block = self.node_block[self.nidx]

    def block_losses(self, a, s, b) -> np.ndarray:
        r = a * s[self.nidx] + b[self.sidx] - self.y
        return np.bincount(self.obs_block, weights=r * r, minlength=self.n_blocks)

    def loss(self, a, s, b, lam) -> float:
        r = a * s[self.nidx] + b[self.sidx] - self.y
        return float(r @ r + lam * ((a - 1.0) ** 2 + b @ b))

    def latent_given(self, a, b) -> np.ndarray:
        sums = np.bincount(self.nidx, weights=self.y - b[self.sidx], minlength=self.n_nodes)
        return sums / self.node_counts / a


def solve_mle(
    history: ScoreHistory,
    config: SolverConfig | None = None,
    warm_start: CalibrationModel | None = None,
) -> CalibrationModel:
    """Fit scale, per-slate biases and latent scores to every observation so far."""
    config = config or SolverConfig()
    if not history.records:
        raise CalibrationError("cannot solve an empty history")
    p = _Problem(history)
    lam = config.gauge_penalty

    a = 1.0
    b = np.zeros(p.n_slates)
    if warm_start is not None:
        if config.fit_scale:
            a = float(warm_start.a)
        if config.fit_bias:
            b = np.array([warm_start.biases.get(sid, 0.0) for sid in p.slate_ids])
            b[~p.bias_free] = 0.0
    s = p.latent_given(a, b)
    if warm_start is not None:
        for k, v in enumerate(p.nodes):
            if v in warm_start.latent:
                s[k] = warm_start.latent[v]

    theta = math.log(a)
    trace = [p.loss(a, s, b, lam)]
    if config.fit_scale or config.fit_bias:
        theta, s, b = _adam(p, config, theta, s, b, trace)
    a = math.exp(theta)

    s_exact = p.latent_given(a, b)
    new_loss = p.loss(a, s_exact, b, lam)
    if new_loss <= trace[-1]:
        s = s_exact
        trace.append(new_loss)
    else:  # pragma: no cover - exact minimiser over latent cannot be worse
        trace.append(trace[-1])

    return CalibrationModel(
        a=a,
        biases={sid: float(bi) for sid, bi in zip(p.slate_ids, b)},
        latent={v: float(sv) for v, sv in zip(p.nodes, s)},
        solver_config=config,
        loss_trace=trace,
    )


def _adam(p: _Problem, cfg: SolverConfig, theta, s, b, trace):
    lam = cfg.gauge_penalty
    m_t = v_t = 0.0
    m_s = np.zeros_like(s)
    v_s = np.zeros_like(s)
    m_b = np.zeros_like(b)
    v_b = np.zeros_like(b)
    lr_theta = cfg.learning_rate
    lr_blk = np.full(p.n_blocks, cfg.learning_rate)
    bias_mask = p.bias_free.astype(float) if cfg.fit_bias else np.zeros(p.n_slates)
    b1, b2, eps = cfg.beta1, cfg.beta2, cfg.eps

    for t in range(1, cfg.steps + 1):
        a = math.exp(theta)
        r = a * s[p.nidx] + b[p.sidx] - p.y
        g_s = 2.0 * a * np.bincount(p.nidx, weights=r, minlength=p.n_nodes)
        g_b = (2.0 * np.bincount(p.sidx, weights=r, minlength=p.n_slates) + 2 * lam * b) * bias_mask
        c1 = 1 - b1**t
        c2 = 1 - b2**t

        if cfg.fit_scale:
            g_a = 2.0 * float(r @ s[p.nidx]) + 2 * lam * (a - 1.0)
            g_t = g_a * a
            m_t = b1 * m_t + (1 - b1) * g_t
            v_t = b2 * v_t + (1 - b2) * g_t * g_t
            cand = theta - lr_theta * (m_t / c1) / (math.sqrt(v_t / c2) + eps)
            before = p.loss(a, s, b, lam)
            after = p.loss(math.exp(cand), s, b, lam)
            if after <= before:
                theta = cand
            else:
                lr_theta *= 0.5
            a = math.exp(theta)

        m_s = b1 * m_s + (1 - b1) * g_s
        v_s = b2 * v_s + (1 - b2) * g_s * g_s
        m_b = b1 * m_b + (1 - b1) * g_b
        v_b = b2 * v_b + (1 - b2) * g_b * g_b
        step_s = lr_blk[p.node_block] * (m_s / c1) / (np.sqrt(v_s / c2) + eps)
        step_b = lr_blk[p.slate_block] * (m_b / c1) / (np.sqrt(v_b / c2) + eps) * bias_mask
        s_new = s - step_s
        b_new = b - step_b

        old = p.block_losses(a, s, b) + lam * np.bincount(p.slate_block, weights=b * b, minlength=p.n_blocks)
        new = p.block_losses(a, s_new, b_new) + lam * np.bincount(
            p.slate_block, weights=b_new * b_new, minlength=p.n_blocks
        )
        ok = new <= old
        s = np.where(ok[p.node_block], s_new, s)
        b = np.where(ok[p.slate_block], b_new, b)
        lr_blk = np.where(ok, lr_blk, lr_blk * 0.5)
        trace.append(p.loss(a, s, b, lam))
    return theta, s, b


def last_score_model(history: ScoreHistory) -> CalibrationModel:
    """Uncalibrated variant: each node's latent score is its most recent raw score."""
    latest: dict[NodeId, float] = {}
    for r in history.records:
        latest.update(r.entries)
    return CalibrationModel(1.0, {r.slate_id: 0.0 for r in history.records}, latest, SolverConfig.mean_only())


def write_debug_csv(path, history: ScoreHistory, model: CalibrationModel) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["slate_id", "node", "observed", "fitted"])
        for r in history.records:
            for v, s in r.entries:
                w.writerow([r.slate_id, v, f"{s:.6f}", f"{model.fitted(r.slate_id, v):.6f}"])


def kendall_tau(x: Iterable[float], y: Iterable[float]) -> float:
    from scipy.stats import kendalltau

    return float(kendalltau(list(x), list(y)).statistic)
