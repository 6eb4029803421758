"""Achievable-rate functionals for quantum relay channels.

Each evaluator takes a fully specified configuration (ensemble plus any
auxiliary measurement, compressor or entangled reference states), builds the
corresponding classical-quantum state and returns every bracket term of the
rate formula alongside the minimum.  Maximization lives in
:mod:`qrelay.optimizer`.

Classical registers are named ``U``, ``X0``, ``X1``, ``X2``, ``Y1``, ``Z1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Callable, Mapping, Sequence

import numpy as np

from . import qlin
from .channels import RelayChannel, is_classical_quantum, is_hadamard, is_orc, orc_factors
from .entropy import MarginalEntropies, bconv, binary_entropy, relative_entropy
from .errors import NonProductStateError, StructureError, ValidationError
from .qlin import POVM, DensityOperator, QuantumChannel, check_dim, tensor

PMF_TOL = 1e-12
PURITY_TOL = 1e-9
FEASIBILITY_TOL = 1e-9
TIE_TOL = 1e-12


# -- configuration types -----------------------------------------------------------


def _check_pmf(p: np.ndarray, what: str) -> None:
    if np.any(p < 0):
        raise ValidationError(f"{what}: negative probability {p.min():.3e}", invariant="pmf",
                              residual=float(-p.min()))
    if abs(p.sum() - 1.0) > PMF_TOL:
        raise ValidationError(f"{what}: probabilities sum to {p.sum()!r}", invariant="pmf",
                              residual=abs(float(p.sum()) - 1.0))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Joint pmf over named classical registers with per-symbol input states.

    ``pmf`` has one axis per register in ``registers``.  ``states`` maps a
    register name to one state per symbol; registers without states (such as
    ``U``) only index the pmf.  Product structure across registers is built in.
    """

    registers: tuple
    pmf: np.ndarray
    states: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        regs = tuple(self.registers)
        pmf = np.array(self.pmf, dtype=float)
        if pmf.ndim != len(regs):
            raise ValidationError(f"pmf has {pmf.ndim} axes for registers {regs}",
                                  invariant="shape")
        _check_pmf(pmf, "ensemble")
        states = {}
        for name, sts in dict(self.states).items():
            if name not in regs:
                raise ValidationError(f"states given for unknown register {name!r}",
                                      invariant="shape")
            sts = tuple(sts)
            if len(sts) != pmf.shape[regs.index(name)]:
                raise ValidationError(
                    f"register {name!r} has {pmf.shape[regs.index(name)]} symbols but "
                    f"{len(sts)} states", invariant="shape")
            for st in sts[1:]:
                if st.labels != sts[0].labels:
                    raise ValidationError(f"states of {name!r} disagree on labels",
                                          invariant="dimension")
            states[name] = sts
        pmf.setflags(write=False)
        object.__setattr__(self, "registers", regs)
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "states", states)

    def card(self, name: str) -> int:
        return self.pmf.shape[self.registers.index(name)]

    def marginal(self, names: Sequence[str]) -> np.ndarray:
        axes = tuple(i for i, r in enumerate(self.registers) if r not in names)
        p = self.pmf.sum(axis=axes) if axes else self.pmf
        kept = [r for r in self.registers if r in names]
        return np.transpose(p, [kept.index(n) for n in names])

    def restricted(self, names: Sequence[str]) -> "Ensemble":
        """The marginal ensemble on ``names``."""
        return Ensemble(tuple(names), self.marginal(names),
                        {n: s for n, s in self.states.items() if n in names})


def product_ensemble(p: Mapping[str, Sequence[float]], states: Mapping[str, Sequence]) -> Ensemble:
    """Independent registers, e.g. ``{"X0": p0, "X1": p1}``."""
    names = tuple(p)
    pmf = np.ones(())
    for n in names:
        pmf = np.multiply.outer(pmf, np.asarray(p[n], dtype=float))
    return Ensemble(names, pmf, {n: tuple(states[n]) for n in states})


def ensemble_from_joint(registers, pmf, joint_states: Mapping[tuple, DensityOperator],
                        sender: Sequence[str], relay: Sequence[str], tol: float = 1e-9) -> Ensemble:
    """Split joint input states θ_{AD}^{(x0,x1)} into per-register factors.

    ``joint_states`` is keyed by ``(x0, x1)``.  Raises
    :class:`NonProductStateError` unless every joint state equals
    θ^{x0}_A ⊗ ζ^{x1}_D with the factors depending on their own symbol only.
    """
    registers = tuple(registers)
    pmf = np.asarray(pmf, dtype=float)
    c0 = pmf.shape[registers.index("X0")]
    c1 = pmf.shape[registers.index("X1")]
    theta, zeta = [None] * c0, [None] * c1
    worst = 0.0
    for (x0, x1), st in sorted(joint_states.items()):
        a = qlin.partial_trace(st, list(sender))
        d = qlin.partial_trace(st, list(relay))
        worst = max(worst, qlin.trace_distance(st, tensor(a, d)))
        for store, key, marg in ((theta, x0, a), (zeta, x1, d)):
            if store[key] is None:
                store[key] = marg
            else:
                worst = max(worst, qlin.trace_distance(store[key], marg))
    if worst > tol:
        raise NonProductStateError(
            f"input states are not of the form θ^x0 ⊗ ζ^x1 (deviation {worst:.3e})",
            invariant="product", residual=worst)
    if any(t is None for t in theta) or any(z is None for z in zeta):
        raise ValidationError("joint_states must cover every symbol", invariant="shape")
    return Ensemble(registers, pmf, {"X0": tuple(theta), "X1": tuple(zeta)})


@dataclass(frozen=True, eq=False)
class MFConfig:
    """Measure-forward auxiliaries: product ensembles, relay POVM on E, compressor p(z₁|x₁,y₁).

    ``compressor`` has shape ``(|X1|, |Y1|, |Z1|)``.
    """

    ens0: Ensemble
    ens1: Ensemble
    relay_povm: POVM
    compressor: np.ndarray

    def __post_init__(self):
        if self.ens0.registers != ("X0",) or self.ens1.registers != ("X1",):
            raise ValidationError("measure-forward needs separate ensembles over X0 and X1",
                                  invariant="product")
        comp = np.array(self.compressor, dtype=float)
        c1 = self.ens1.card("X1")
        if comp.ndim != 3 or comp.shape[:2] != (c1, len(self.relay_povm)):
            raise ValidationError(
                f"compressor shape {comp.shape} does not match (|X1|={c1}, "
                f"|Y1|={len(self.relay_povm)}, |Z1|)", invariant="shape")
        if np.any(comp < 0) or np.max(np.abs(comp.sum(axis=2) - 1.0)) > PMF_TOL:
            raise ValidationError("compressor rows must be probability vectors",
                                  invariant="pmf")
        comp.setflags(write=False)
        object.__setattr__(self, "compressor", comp)


def _check_pure(ens: Ensemble, name: str) -> None:
    for i, st in enumerate(ens.states.get(name, ())):
        pur = st.purity()
        if pur < 1 - PURITY_TOL:
            raise ValidationError(f"{name} state {i} is not pure (purity {pur:.12f})",
                                  invariant="pure", residual=1 - pur)


@dataclass(frozen=True, eq=False)
class AFConfig:
    """Assist-forward ensembles: θ^{x1} on (G₀, G₁, A) and ζ^{x2} on (G₂, D), all pure.

    ``floor_q`` clamps a negative Q(M, θ) at zero inside the rate-limited
    entanglement-assisted term; by default it enters raw.
    """

    ens1: Ensemble
    ens2: Ensemble
    g0: str = "G0"
    g1: str = "G1"
    g2: str = "G2"
    floor_q: bool = False

    def __post_init__(self):
        if self.ens1.registers != ("X1",) or self.ens2.registers != ("X2",):
            raise ValidationError("assist-forward needs ensembles over X1 and X2",
                                  invariant="product")
        _check_pure(self.ens1, "X1")
        _check_pure(self.ens2, "X2")


# -- records ---------------------------------------------------------------------


class _Record:
    _terms: tuple = ()

    def binding(self) -> str:
        vals = [(n, getattr(self, n)) for n in self._terms]
        lo = min(v for _, v in vals)
        return "+".join(n for n, v in vals if v - lo <= TIE_TOL)

    def as_row(self) -> dict:
        row = {f.name: getattr(self, f.name) for f in fields(self)}
        if self._terms:
            row["binding"] = self.binding()
        return row


@dataclass(frozen=True)
class PDFRecord(_Record):
    rate: float
    term_multicast: float
    term_relay_plus_direct: float
    relay_decode: float
    direct_decode: float
    _terms = ("term_multicast", "term_relay_plus_direct")


@dataclass(frozen=True)
class FullDFRecord(_Record):
    rate: float
    term_multicast: float
    term_relay: float
    _terms = ("term_multicast", "term_relay")


@dataclass(frozen=True)
class MFRecord(_Record):
    rate: float
    feasible: bool
    lhs_constraint: float
    rhs_constraint: float


@dataclass(frozen=True)
class AFRecord(_Record):
    rate: float
    t_relay_decode: float
    t_ea_full: float
    t_ea_limited: float
    q_assist: float
    q_dest: float
    q_relay: float
    _terms = ("t_relay_decode", "t_ea_full", "t_ea_limited")


# -- state construction ---------------------------------------------------------------


def cq_state(registers: Sequence[qlin.SubsystemLabel], weights: np.ndarray,
             block: Callable[[tuple], np.ndarray], quantum_labels) -> DensityOperator:
    """Σ_c w(c) |c⟩⟨c| ⊗ block(c) with ``block`` returning normalized quantum matrices."""
    quantum_labels = qlin.as_labels(quantum_labels)
    dq = int(np.prod([l.dim for l in quantum_labels], dtype=int)) if quantum_labels else 1
    dc = int(weights.size)
    check_dim(dc * dq, "classical-quantum state")
    mat = np.zeros((dc * dq, dc * dq), dtype=complex)
    flat = weights.reshape(-1)
    for c, idx in enumerate(np.ndindex(*weights.shape)):
        if flat[c] > 0:
            mat[c * dq:(c + 1) * dq, c * dq:(c + 1) * dq] = flat[c] * block(idx)
    return DensityOperator(tuple(registers) + quantum_labels, mat)


def _check_inputs(ch: RelayChannel, states: Sequence[DensityOperator], names: Sequence[str],
                  what: str) -> None:
    for st in states:
        for n in names:
            if st.label(n).dim != ch.in_label(n).dim:
                raise ValidationError(f"{what} state label {n!r} has the wrong dimension",
                                      invariant="dimension")


class _OutputCache:
    """N(θ^{x0} ⊗ ζ^{x1}) per symbol pair, reordered to ``order``."""

    def __init__(self, ch: RelayChannel, theta, zeta, order):
        self.ch, self.theta, self.zeta, self.order = ch, theta, zeta, list(order)
        self._out = {}

    def __call__(self, x0: int, x1: int) -> DensityOperator:
        key = (x0, x1)
        if key not in self._out:
            inp = tensor(self.theta[x0], self.zeta[x1])
            self._out[key] = self.ch.apply(inp).reorder(self.order)
        return self._out[key]


def _input_states(ch: RelayChannel, ens: Ensemble):
    theta = ens.states["X0"]
    zeta = ens.states["X1"] if "X1" in ens.states else (
        (qlin.basis_state(0, [ch.in_label(ch.relay_in)]),) * ens.card("X1"))
    _check_inputs(ch, theta, ch.sender, "X0")
    _check_inputs(ch, zeta, [ch.relay_in], "X1")
    if sorted(theta[0].names) != sorted(ch.sender) or list(zeta[0].names) != [ch.relay_in]:
        raise ValidationError(
            f"input states must live on sender labels {list(ch.sender)} and relay input "
            f"{ch.relay_in!r}", invariant="dimension")
    return theta, zeta


def pdf_state(ch: RelayChannel, ens: Ensemble) -> DensityOperator:
    """ω_{U X0 X1 B E} = Σ p(u,x0,x1) |u x0 x1⟩⟨u x0 x1| ⊗ N(θ^{x0} ⊗ ζ^{x1})."""
    if "U" in ens.registers:
        ens = ens.restricted(["U", "X0", "X1"])
        regs = ("U", "X0", "X1")
    else:
        ens = ens.restricted(["X0", "X1"])
        regs = ("X0", "X1")
    theta, zeta = _input_states(ch, ens)
    order = list(ch.dest) + [ch.relay_out]
    out = _OutputCache(ch, theta, zeta, order)
    labels = [qlin.classical(r, ens.card(r)) for r in regs]
    qlabels = tuple(ch.out_label(n) for n in order)
    if regs[0] == "U":
        block = lambda idx: out(idx[1], idx[2]).matrix
    else:
        block = lambda idx: out(idx[0], idx[1]).matrix
    return cq_state(labels, ens.pmf, block, qlabels)


# -- evaluators -----------------------------------------------------------------------


def eval_pdf(ch: RelayChannel, ens: Ensemble) -> PDFRecord:
    """Partial decode-forward: min{ I(X0X1;B), I(U;E|X1) + I(X0;B|X1U) }."""
    if "U" not in ens.registers:
        raise ValidationError("partial decode-forward ensemble needs a U register",
                              invariant="shape")
    omega = pdf_state(ch, ens)
    ent = MarginalEntropies(omega)
    b, e = list(ch.dest), [ch.relay_out]
    multicast = ent.mutual(["X0", "X1"], b)
    relay = ent.cond_mutual(["U"], e, ["X1"])
    direct = ent.cond_mutual(["X0"], b, ["X1", "U"])
    return PDFRecord(min(multicast, relay + direct), multicast, relay + direct, relay, direct)


def eval_full_df(ch: RelayChannel, ens: Ensemble) -> FullDFRecord:
    """Full decode-forward: min{ I(X0X1;B), I(X0;E|X1) }."""
    omega = pdf_state(ch, ens.restricted(["X0", "X1"]))
    ent = MarginalEntropies(omega)
    multicast = ent.mutual(["X0", "X1"], list(ch.dest))
    relay = ent.cond_mutual(["X0"], [ch.relay_out], ["X1"])
    return FullDFRecord(min(multicast, relay), multicast, relay)


def eval_hadamard_capacity(ch: RelayChannel, ens: Ensemble) -> FullDFRecord:
    """Hadamard relay capacity objective min{ I(X0X1;B), I(X0;Y1|X1) }; Y1 is the relay output."""
    if not is_hadamard(ch):
        raise StructureError("channel is not a Hadamard relay channel "
                             "(needs a classical relay output and degradedness)")
    return eval_full_df(ch, ens)


def holevo_information(ch: RelayChannel, ens: Ensemble) -> float:
    """I(X0;B) of the direct-transmission ensemble (relay input fixed by ``X1``'s first state)."""
    omega = pdf_state(ch, ens.restricted(["X0", "X1"]))
    return MarginalEntropies(omega).mutual(["X0"], list(ch.dest))


def _measure_blocks(sigma: DensityOperator, e_name: str, povm: POVM) -> list:
    """tr_E[(1 ⊗ Γ_y) σ] for every outcome y; σ must have E as its last factor."""
    de = sigma.dims[-1]
    db = sigma.dim // de
    m = sigma.matrix.reshape(db, de, db, de)
    return [np.einsum("aibj,ji->ab", m, g) for g in povm.elements]


def mf_state(ch: RelayChannel, cfg: MFConfig) -> DensityOperator:
    """ω_{X0 X1 Y1 Z1 B}: channel output, relay measurement on E, compression to Z1."""
    e = ch.relay_out
    if list(cfg.relay_povm.names) != [e] or cfg.relay_povm.labels[0].dim != ch.out_label(e).dim:
        raise ValidationError(f"relay POVM must act on {e!r} with dimension "
                              f"{ch.out_label(e).dim}", invariant="dimension")
    theta = cfg.ens0.states["X0"]
    zeta = cfg.ens1.states["X1"]
    _check_inputs(ch, theta, ch.sender, "X0")
    _check_inputs(ch, zeta, [ch.relay_in], "X1")
    order = list(ch.dest) + [e]
    out = _OutputCache(ch, theta, zeta, order)
    c0, c1 = cfg.ens0.card("X0"), cfg.ens1.card("X1")
    ny, nz = cfg.compressor.shape[1:]
    blocks = {}

    def block(idx):
        x0, x1, y, _ = idx
        if (x0, x1) not in blocks:
            raw = _measure_blocks(out(x0, x1), e, cfg.relay_povm)
            blocks[(x0, x1)] = [(b, float(np.real(np.trace(b)))) for b in raw]
        b, w = blocks[(x0, x1)][y]
        return b / w if w > 0 else b

    # weight p(x0)p(x1) tr(Γ_y σ) p(z|x1,y); blocks are normalized per outcome
    weights = np.zeros((c0, c1, ny, nz))
    p0, p1 = cfg.ens0.pmf, cfg.ens1.pmf
    for x0 in range(c0):
        for x1 in range(c1):
            if p0[x0] * p1[x1] == 0:
                continue
            block((x0, x1, 0, 0))
            py = np.array([w for _, w in blocks[(x0, x1)]])
            weights[x0, x1] = p0[x0] * p1[x1] * py[:, None] * cfg.compressor[x1]
    weights = np.clip(weights, 0.0, None)
    weights /= weights.sum()
    regs = [qlin.classical("X0", c0), qlin.classical("X1", c1), qlin.classical("Y1", ny),
            qlin.classical("Z1", nz)]
    qlabels = tuple(ch.out_label(n) for n in ch.dest)
    return cq_state(regs, weights, block, qlabels)


def eval_mf(ch: RelayChannel, cfg: MFConfig) -> MFRecord:
    """Measure-forward objective I(X0;Z1B|X1) with constraint I(Z1;Y1|X1B) ≤ I(X1;B).

    Infeasible configurations are reported with ``feasible=False``.
    """
    omega = mf_state(ch, cfg)
    ent = MarginalEntropies(omega)
    b = list(ch.dest)
    rate = ent.cond_mutual(["X0"], ["Z1"] + b, ["X1"])
    lhs = ent.cond_mutual(["Z1"], ["Y1"], ["X1"] + b)
    rhs = ent.mutual(["X1"], b)
    return MFRecord(rate, bool(lhs <= rhs + FEASIBILITY_TOL), lhs, rhs)


def _q_terms(m: QuantumChannel, ens1: Ensemble, b1: Sequence[str], e: Sequence[str],
             g0: str, g1: str) -> tuple:
    sts = ens1.states["X1"]
    outs = [qlin.apply_channel(m, st) for st in sts]
    order = [g0, g1] + list(b1) + list(e)
    outs = [o.reorder(order) for o in outs]
    omega = cq_state([qlin.classical("X1", len(sts))], ens1.pmf,
                     lambda idx: outs[idx[0]].matrix, outs[0].labels)
    ent = MarginalEntropies(omega)
    q_dest = ent.coherent([g0], list(b1) + ["X1"])
    q_relay = ent.coherent([g1], list(e) + ["X1"])
    return q_dest, q_relay, ent.mutual(["X1"], list(e))


def eval_q_assist(m: QuantumChannel, ens1: Ensemble, b1: Sequence[str] = ("B1",),
                  e: Sequence[str] = ("E",), g0: str = "G0", g1: str = "G1") -> float:
    """Q(M,θ) = min{ I(G0⟩B1X1), I(G1⟩EX1) } for the broadcast channel M_{A→B1E}.

    May be negative.
    """
    q_dest, q_relay, _ = _q_terms(m, ens1, b1, e, g0, g1)
    return min(q_dest, q_relay)


def eval_af(ch: RelayChannel, cfg: AFConfig) -> AFRecord:
    """Assist-forward: min{ I(X1;E), I(X2G2;B2), I(X2;B2) + I(G2⟩B2X2) + Q(M,θ) }, clamped at 0."""
    if not ch.has_split or not is_orc(ch):
        raise StructureError("assist-forward needs a relay channel with orthogonal "
                             "receiver components")
    m, p = orc_factors(ch)
    b1 = ch.roles["dest_out_1"]
    b2 = list(ch.roles["dest_out_2"])
    q_dest, q_relay, relay_decode = _q_terms(m, cfg.ens1, b1, [ch.relay_out], cfg.g0, cfg.g1)
    q = min(q_dest, q_relay)

    sts = cfg.ens2.states["X2"]
    outs = [qlin.apply_channel(p, st).reorder([cfg.g2] + b2) for st in sts]
    zeta = cq_state([qlin.classical("X2", len(sts))], cfg.ens2.pmf,
                    lambda idx: outs[idx[0]].matrix, outs[0].labels)
    ent = MarginalEntropies(zeta)
    ea_full = ent.mutual(["X2", cfg.g2], b2)
    q_used = max(q, 0.0) if cfg.floor_q else q
    ea_limited = ent.mutual(["X2"], b2) + ent.coherent([cfg.g2], b2 + ["X2"]) + q_used
    rate = max(0.0, min(relay_decode, ea_full, ea_limited))
    return AFRecord(rate, relay_decode, ea_full, ea_limited, q, q_dest, q_relay)


def eval_depolarizing_closed_form(p: float, q: float) -> float:
    """1 − h(p ∗ q/2) for the depolarizing relay family."""
    for name, v in (("p", p), ("q", q)):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"{name}={v} outside [0, 1]", invariant="range")
    return 1.0 - binary_entropy(bconv(p, q / 2.0))


def cq_holevo_capacity(states: Sequence[np.ndarray], tol: float = 1e-12,
                       max_iter: int = 10000) -> tuple:
    """max_p I(X;B) for a classical-quantum channel x ↦ ρ_x by Blahut–Arimoto iteration.

    Returns ``(capacity, pmf)``.  The capacity is bracketed between the
    current mutual information and max_x D(ρ_x‖ρ_p); iteration stops once the
    gap is below ``tol``.
    """
    mats = [s.matrix if isinstance(s, DensityOperator) else np.asarray(s) for s in states]
    p = np.full(len(mats), 1.0 / len(mats))
    lower = 0.0
    for _ in range(max_iter):
        avg = sum(pi * m for pi, m in zip(p, mats))
        d = np.array([relative_entropy(m, avg) for m in mats])
        lower = float(np.dot(p, d))
        upper = float(d.max())
        if upper - lower < tol:
            break
        p = p * np.exp2(d)
        p /= p.sum()
    return lower, p


def eval_anti_degraded_capacity(ch: RelayChannel, tol: float = 1e-12) -> tuple:
    """max_{x1} max_{p_X} I(X;B|X1=x1) for an anti-degraded classical-quantum relay channel.

    Anti-degradedness (E obtainable from B) is the caller's premise; this
    routine only checks that the channel is classical-quantum.  Returns
    ``(capacity, best_x1, pmf)``.
    """
    if not is_classical_quantum(ch):
        raise StructureError("channel is not classical-quantum")
    nx = ch.in_label(ch.sender[0]).dim
    nx1 = ch.in_label(ch.relay_in).dim
    if len(ch.sender) != 1:
        raise StructureError("expected a single classical sender input")
    best = (-1.0, None, None)
    for x1 in range(nx1):
        states = []
        for x in range(nx):
            inp = tensor(qlin.basis_state(x, [ch.in_label(ch.sender[0])]),
                         qlin.basis_state(x1, [ch.in_label(ch.relay_in)]))
            states.append(qlin.partial_trace(ch.apply(inp), list(ch.dest)).matrix)
        cap, pmf = cq_holevo_capacity(states, tol=tol)
        if cap > best[0]:
            best = (cap, x1, pmf)
    return best


# -- reference configurations --------------------------------------------------------


def depolarizing_mf_config(q: float, alpha: float | None = None) -> MFConfig:
    """Uniform computational-basis inputs, computational relay measurement, Z1 = Y1 ⊕ Bern(α).

    α defaults to q/2, where the rate constraint holds with equality.
    """
    alpha = q / 2.0 if alpha is None else alpha
    a = [qlin.basis_state(i, [("A", 2)]) for i in range(2)]
    d = [qlin.basis_state(i, [("D", 2)]) for i in range(2)]
    comp = np.array([[[1 - alpha, alpha], [alpha, 1 - alpha]]] * 2)
    return MFConfig(Ensemble(("X0",), [0.5, 0.5], {"X0": a}),
                    Ensemble(("X1",), [0.5, 0.5], {"X1": d}),
                    qlin.computational_povm([("E", 2)]), comp)


def wired_pdf_ensemble() -> Ensemble:
    """Wired relay: X0 = (relay bit r, direct bit d), U = r, X1 an independent uniform bit.

    θ^{x0} puts d on A1 and r on the first qubit of A0; ζ^{x1} = |x1⟩ on D.
    """
    pmf = np.zeros((2, 4, 2))
    theta = []
    for x0 in range(4):
        r, d = divmod(x0, 2)
        pmf[r, x0, :] = 1.0 / 8
        theta.append(tensor(qlin.basis_state(d, [("A1", 2)]),
                            qlin.basis_state(4 * r, [("A0", 8)])))
    zeta = [qlin.basis_state(x1, [("D", 2)]) for x1 in range(2)]
    return Ensemble(("U", "X0", "X1"), pmf, {"X0": theta, "X1": zeta})


def wired_af_config() -> AFConfig:
    """Two message bits into A0, EPR halves G0–A1 and G1–(third qubit of A0), superdense coding on D."""
    theta = []
    for x1 in range(4):
        psi = np.zeros((2, 2, 2, 8))
        for g0 in range(2):
            for c in range(2):
                psi[g0, c, g0, 2 * x1 + c] = 0.5
        theta.append(qlin.pure_state(psi.reshape(-1),
                                     [("G0", 2), ("G1", 2), ("A1", 2), ("A0", 8)]))
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.diag([1, -1]),
              np.array([[0, 1], [-1, 0]])]
    zeta = [qlin.pure_state(np.kron(np.eye(2), u) @ bell, [("G2", 2), ("D", 2)]) for u in paulis]
    return AFConfig(Ensemble(("X1",), np.full(4, 0.25), {"X1": theta}),
                    Ensemble(("X2",), np.full(4, 0.25), {"X2": zeta}))


# -- configuration documents -----------------------------------------------------

BOUND_KINDS = ("pdf", "full_df", "hadamard", "holevo", "mf", "af")


def ensemble_from_json(doc: Mapping) -> Ensemble:
    """``{"registers": [...], "pmf": nested list, "states": {register: [state, ...]}}``."""
    states = {name: tuple(qlin.state_from_json(s) for s in sts)
              for name, sts in doc.get("states", {}).items()}
    return Ensemble(tuple(doc["registers"]), np.asarray(doc["pmf"], dtype=float), states)


def ensemble_to_json(ens: Ensemble) -> dict:
    return {"registers": list(ens.registers), "pmf": ens.pmf.tolist(),
            "states": {n: [qlin.state_to_json(s) for s in sts] for n, sts in ens.states.items()}}


def config_from_json(doc: Mapping, overrides: Mapping | None = None) -> tuple:
    """Parse a bound configuration into ``(bound_kind, config)``.

    Templates: ``depolarizing_mf`` (needs ``q``, optional ``alpha``), ``wired_pdf``
    and ``wired_af``.  Otherwise the document lists the auxiliaries
    explicitly: ``ensemble`` for the decode-forward family, ``ens0``/``ens1``/
    ``relay_povm``/``compressor`` for measure-forward, ``ens1``/``ens2`` for
    assist-forward.
    """
    doc = dict(doc)
    doc.update(overrides or {})
    kind = doc.get("bound")
    template = doc.get("template")
    if template == "depolarizing_mf":
        if doc.get("q") is None:
            raise ValidationError("depolarizing_mf config needs q", invariant="format")
        alpha = doc.get("alpha")
        return "mf", depolarizing_mf_config(float(doc["q"]), None if alpha is None else float(alpha))
    if template == "wired_pdf":
        return "pdf", wired_pdf_ensemble()
    if template == "wired_af":
        return "af", wired_af_config()
    if template is not None:
        raise ValidationError(f"unknown config template {template!r}", invariant="format")
    if kind not in BOUND_KINDS:
        raise ValidationError(f"unknown bound {kind!r}; expected one of {BOUND_KINDS}",
                              invariant="format")
    if kind == "mf":
        return kind, MFConfig(ensemble_from_json(doc["ens0"]), ensemble_from_json(doc["ens1"]),
                              qlin.povm_from_json(doc["relay_povm"]),
                              np.asarray(doc["compressor"], dtype=float))
    if kind == "af":
        return kind, AFConfig(ensemble_from_json(doc["ens1"]), ensemble_from_json(doc["ens2"]),
                              floor_q=bool(doc.get("floor_q", False)))
    return kind, ensemble_from_json(doc["ensemble"])


def evaluate(kind: str, ch: RelayChannel, config):
    """Dispatch to the evaluator for ``kind``; ``holevo`` returns a float."""
    fn = {"pdf": eval_pdf, "full_df": eval_full_df, "hadamard": eval_hadamard_capacity,
          "holevo": holevo_information, "mf": eval_mf, "af": eval_af}.get(kind)
    if fn is None:
        raise ValidationError(f"unknown bound {kind!r}", invariant="format")
    return fn(ch, config)
