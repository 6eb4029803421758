"""Maximize rate evaluators over ensembles with fixed alphabet sizes.

A raw real vector is mapped onto a valid configuration (pmfs by softmax, pure
states from complex amplitudes, mixed states and POVMs from Gram matrices,
classical channels row by row), and Nelder–Mead runs from several seeded
random starts.  The measure-forward rate constraint is handled with an exact
penalty; only feasible evaluations are eligible as the reported optimum.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from . import qlin
from .bounds import FEASIBILITY_TOL, AFConfig, Ensemble, MFConfig
from .channels import RelayChannel
from .errors import InfeasibleError, ValidationError
from .qlin import POVM

log = logging.getLogger(__name__)

BOUNDS = ("pdf", "full_df", "hadamard", "mf", "af")


@dataclass(frozen=True, eq=False)
class ParamSpace:
    """Alphabet sizes and state model for one bound on one channel.

    Cardinalities are inputs, not derived: none are known to suffice, and 2
    is only a default.
    """

    bound: str
    channel: RelayChannel
    card_U: int = 1
    card_X0: int = 2
    card_X1: int = 2
    card_X2: int = 2
    card_Y1: int = 2
    card_Z1: int = 2
    dim_G0: int = 2
    dim_G1: int = 2
    dim_G2: int = 2
    state_kind: str = "pure"
    fixed_povm: POVM | None = None

    def __post_init__(self):
        if self.bound not in BOUNDS:
            raise ValueError(f"unknown bound {self.bound!r}; expected one of {BOUNDS}")
        if self.state_kind not in ("pure", "mixed"):
            raise ValueError("state_kind must be 'pure' or 'mixed'")
        for name in ("card_U", "card_X0", "card_X1", "card_X2", "card_Y1", "card_Z1",
                     "dim_G0", "dim_G1", "dim_G2"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.fixed_povm is not None:
            object.__setattr__(self, "card_Y1", len(self.fixed_povm))
        qlin.check_dim(self.composite_dim(), "parameter space composite")

    def _labels(self, names):
        return tuple(self.channel.in_label(n) for n in names)

    @property
    def sender_labels(self) -> tuple:
        return self._labels(self.channel.sender)

    @property
    def relay_label(self) -> qlin.SubsystemLabel:
        return self.channel.in_label(self.channel.relay_in)

    @property
    def relay_out_label(self) -> qlin.SubsystemLabel:
        return self.channel.out_label(self.channel.relay_out)

    def composite_dim(self) -> int:
        ch = self.channel.channel
        if self.bound == "pdf":
            return self.card_U * self.card_X0 * self.card_X1 * ch.dout
        if self.bound in ("full_df", "hadamard"):
            return self.card_X0 * self.card_X1 * ch.dout
        if self.bound == "mf":
            de = self.channel.out_label(self.channel.relay_out).dim
            return self.card_X0 * self.card_X1 * self.card_Y1 * self.card_Z1 * ch.dout // de
        da = int(np.prod([l.dim for l in self.sender_labels]))
        return self.card_X1 * self.dim_G0 * self.dim_G1 * max(da, ch.dout)

    def layout(self) -> list:
        """``(kind, name, shape-or-dim)`` blocks in raw-vector order."""
        da = int(np.prod([l.dim for l in self.sender_labels]))
        dd = self.relay_label.dim
        st = self.state_kind
        if self.bound == "pdf":
            return [("pmf", "UX0X1", (self.card_U, self.card_X0, self.card_X1)),
                    (st, "X0", (self.card_X0, da)), (st, "X1", (self.card_X1, dd))]
        if self.bound in ("full_df", "hadamard"):
            return [("pmf", "X0X1", (self.card_X0, self.card_X1)),
                    (st, "X0", (self.card_X0, da)), (st, "X1", (self.card_X1, dd))]
        if self.bound == "mf":
            out = [("pmf", "X0", (self.card_X0,)), (st, "X0", (self.card_X0, da)),
                   ("pmf", "X1", (self.card_X1,)), (st, "X1", (self.card_X1, dd))]
            if self.fixed_povm is None:
                out.append(("povm", "Y1", (self.card_Y1, self.relay_out_label.dim)))
            out.append(("channel", "Z1", (self.card_X1, self.card_Y1, self.card_Z1)))
            return out
        g01 = self.dim_G0 * self.dim_G1 * da
        return [("pmf", "X1", (self.card_X1,)), ("pure", "X1", (self.card_X1, g01)),
                ("pmf", "X2", (self.card_X2,)), ("pure", "X2", (self.card_X2, self.dim_G2 * dd))]

    def n_params(self) -> int:
        return sum(_block_size(kind, shape) for kind, _, shape in self.layout())


def _block_size(kind: str, shape) -> int:
    if kind == "pmf":
        return int(np.prod(shape))
    if kind == "pure":
        return shape[0] * 2 * shape[1]
    if kind == "mixed":
        return shape[0] * 2 * shape[1] ** 2
    if kind == "povm":
        return shape[0] * 2 * shape[1] ** 2
    if kind == "channel":
        return int(np.prod(shape))
    raise ValueError(kind)


def softmax(raw: np.ndarray, axis: int = -1) -> np.ndarray:
    z = np.exp(raw - raw.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def raw_to_pure(raw: np.ndarray, dim: int) -> np.ndarray:
    v = raw[:dim] + 1j * raw[dim:]
    nrm = np.linalg.norm(v)
    if nrm < 1e-300:
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
        return v
    return v / nrm


def raw_to_mixed(raw: np.ndarray, dim: int) -> np.ndarray:
    a = (raw[:dim * dim] + 1j * raw[dim * dim:]).reshape(dim, dim)
    g = a @ a.conj().T
    tr = np.real(np.trace(g))
    if tr < 1e-300:
        return np.eye(dim) / dim
    return g / tr


def raw_to_povm(raw: np.ndarray, n: int, dim: int) -> np.ndarray:
    """Elements S^{-1/2} G_y S^{-1/2} with G_y = A_y A_y† and S = Σ G_y."""
    size = 2 * dim * dim
    grams = []
    for y in range(n):
        blk = raw[y * size:(y + 1) * size]
        a = (blk[:dim * dim] + 1j * blk[dim * dim:]).reshape(dim, dim)
        grams.append(a @ a.conj().T + 1e-12 * np.eye(dim))
    s = sum(grams)
    w, v = np.linalg.eigh(s)
    s_inv_half = (v / np.sqrt(w)) @ v.conj().T
    els = np.stack([s_inv_half @ g @ s_inv_half for g in grams])
    return 0.5 * (els + np.conj(np.transpose(els, (0, 2, 1))))


def _states(kind: str, raw: np.ndarray, count: int, dim: int, labels) -> tuple:
    size = _block_size(kind, (1, dim))
    out = []
    for i in range(count):
        blk = raw[i * size:(i + 1) * size]
        if kind == "pure":
            out.append(qlin.pure_state(raw_to_pure(blk, dim), labels))
        else:
            out.append(qlin.DensityOperator(qlin.as_labels(labels), raw_to_mixed(blk, dim)))
    return tuple(out)


def parameterize(space: ParamSpace, raw) -> Any:
    """Map a raw vector onto an Ensemble, MFConfig or AFConfig for ``space``."""
    raw = np.asarray(raw, dtype=float).ravel()
    if raw.size != space.n_params():
        raise ValidationError(f"raw vector has length {raw.size}, space needs "
                              f"{space.n_params()}", invariant="shape")
    blocks = {}
    pos = 0
    for kind, name, shape in space.layout():
        n = _block_size(kind, shape)
        blocks[(kind, name)] = (raw[pos:pos + n], shape)
        pos += n
    sender = space.sender_labels
    relay = (space.relay_label,)
    st = space.state_kind

    def pmf(name):
        r, shape = blocks[("pmf", name)]
        return softmax(r.reshape(-1)).reshape(shape)

    def states(kind, name, labels):
        r, (count, dim) = blocks[(kind, name)]
        return _states(kind, r, count, dim, labels)

    if space.bound == "pdf":
        return Ensemble(("U", "X0", "X1"), pmf("UX0X1"),
                        {"X0": states(st, "X0", sender), "X1": states(st, "X1", relay)})
    if space.bound in ("full_df", "hadamard"):
        return Ensemble(("X0", "X1"), pmf("X0X1"),
                        {"X0": states(st, "X0", sender), "X1": states(st, "X1", relay)})
    if space.bound == "mf":
        ens0 = Ensemble(("X0",), pmf("X0"), {"X0": states(st, "X0", sender)})
        ens1 = Ensemble(("X1",), pmf("X1"), {"X1": states(st, "X1", relay)})
        if space.fixed_povm is not None:
            povm = space.fixed_povm
        else:
            r, (n, dim) = blocks[("povm", "Y1")]
            povm = POVM((space.relay_out_label,), raw_to_povm(r, n, dim))
        r, shape = blocks[("channel", "Z1")]
        comp = softmax(r.reshape(shape), axis=-1)
        return MFConfig(ens0, ens1, povm, comp)
    g = (("G0", space.dim_G0), ("G1", space.dim_G1))
    ens1 = Ensemble(("X1",), pmf("X1"), {"X1": states("pure", "X1", g + sender)})
    ens2 = Ensemble(("X2",), pmf("X2"),
                    {"X2": states("pure", "X2", (("G2", space.dim_G2),) + relay)})
    return AFConfig(ens1, ens2)


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    max_evals: int = 4000
    seed: int = 0
    penalty_weight: float = 10.0
    tolerance: float = 1e-10
    init_scale: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class RestartResult:
    index: int
    best_rate: float
    best_raw: np.ndarray | None
    n_evals: int


@dataclass(frozen=True, eq=False)
class MaximizeResult:
    best_rate: float
    best_config: Any
    best_record: Any
    best_raw: np.ndarray
    trace: tuple = field(default_factory=tuple)

    @property
    def restart_bests(self) -> list:
        return [r.best_rate for r in self.trace]


def _is_constrained(record) -> bool:
    return hasattr(record, "lhs_constraint")


def _run_restart(evaluator: Callable, space: ParamSpace, cfg: OptimizerConfig, index: int,
                 seq: np.random.SeedSequence, start: np.ndarray | None) -> RestartResult:
    rng = np.random.default_rng(seq)
    n = space.n_params()
    x0 = start if start is not None else rng.normal(scale=cfg.init_scale, size=n)
    best = {"rate": -np.inf, "raw": None}
    evals = [0]

    def objective(x):
        evals[0] += 1
        rec = evaluator(parameterize(space, x))
        rate = float(rec.rate)
        if _is_constrained(rec):
            excess = max(0.0, rec.lhs_constraint - rec.rhs_constraint)
            if excess <= FEASIBILITY_TOL and rate > best["rate"]:
                best["rate"], best["raw"] = rate, np.array(x)
            return -(rate - cfg.penalty_weight * excess)
        if rate > best["rate"]:
            best["rate"], best["raw"] = rate, np.array(x)
        return -rate

    x = np.array(x0, dtype=float)
    fx = objective(x)
    step = 0.5
    # rebuild the simplex around the incumbent; shrink it when a pass stalls
    while evals[0] < cfg.max_evals and step > 1e-7:
        simplex = np.vstack([x, x + step * np.eye(n)])
        res = minimize(objective, x, method="Nelder-Mead",
                       options={"maxfev": min(cfg.max_evals - evals[0], 200 * n),
                                "initial_simplex": simplex, "xatol": np.inf,
                                "fatol": cfg.tolerance, "adaptive": n > 6})
        if fx - res.fun <= cfg.tolerance:
            step *= 0.1
        if res.fun < fx:
            x, fx = res.x, res.fun
    log.debug("restart %d: best %.12g after %d evaluations", index, best["rate"], evals[0])
    return RestartResult(index, best["rate"], best["raw"], evals[0])


def maximize(evaluator: Callable, space: ParamSpace, cfg: OptimizerConfig = OptimizerConfig(),
             initial: Sequence[np.ndarray] = ()) -> MaximizeResult:
    """Best rate over ``cfg.restarts`` Nelder–Mead runs.

    Restart ``i`` uses the ``i``-th child of ``SeedSequence(cfg.seed)`` (or
    ``initial[i]`` as its start when given), so results do not depend on the
    number of restarts or workers.  For constrained (measure-forward) records
    only feasible points are eligible; if none is found
    :class:`~qrelay.errors.InfeasibleError` is raised.
    """
    seqs = np.random.SeedSequence(int(cfg.seed)).spawn(cfg.restarts)
    starts = [np.asarray(initial[i], dtype=float) if i < len(initial) else None
              for i in range(cfg.restarts)]

    def job(i):
        return _run_restart(evaluator, space, cfg, i, seqs[i], starts[i])

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            trace = list(pool.map(job, range(cfg.restarts)))
    else:
        trace = [job(i) for i in range(cfg.restarts)]
    found = [r for r in trace if r.best_raw is not None]
    if not found:
        raise InfeasibleError("no feasible configuration found in any restart")
    # ties resolve to the lowest restart index
    winner = max(found, key=lambda r: (r.best_rate, -r.index))
    config = parameterize(space, winner.best_raw)
    record = evaluator(config)
    return MaximizeResult(float(record.rate), config, record, winner.best_raw, tuple(trace))
