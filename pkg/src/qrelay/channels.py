"""Relay channels, standard example constructions and structural classifiers.

A :class:`RelayChannel` wraps a :class:`~qrelay.qlin.QuantumChannel` together
with a role map saying which inputs belong to the sender and the relay, and
which outputs reach the destination and the relay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import qlin
from .entropy import MarginalEntropies
from .errors import LabelError, StructureError, ValidationError
from .qlin import (
    POVM,
    DensityOperator,
    QuantumChannel,
    SubsystemLabel,
    choi_state,
    classical_offdiagonal,
    partial_trace,
    tensor,
    trace_distance,
)

SENDER_IN = "sender_in"
RELAY_IN = "relay_in"
DEST_OUT = "dest_out"
DEST_OUT_1 = "dest_out_1"
DEST_OUT_2 = "dest_out_2"
RELAY_OUT = "relay_out"
ROLES = (SENDER_IN, RELAY_IN, DEST_OUT, DEST_OUT_1, DEST_OUT_2, RELAY_OUT)

DEGRADED_THRESHOLD = 1e-6
ORC_THRESHOLD = 1e-8

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True, eq=False)
class RelayChannel:
    """N_{AD→BE} with its role map.

    ``tags`` caches classifier results (``degraded``, ``orc``, ``hadamard``,
    ``cq``); constructors may seed it with structure known by construction.
    """

    channel: QuantumChannel
    roles: Mapping[str, tuple]
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        roles = {}
        for role, names in dict(self.roles).items():
            if role not in ROLES:
                raise StructureError(f"unknown role {role!r}; expected one of {ROLES}")
            roles[role] = (names,) if isinstance(names, str) else tuple(names)
        ch = self.channel
        ins = roles.get(SENDER_IN, ()) + roles.get(RELAY_IN, ())
        outs = sum((roles.get(r, ()) for r in (DEST_OUT, DEST_OUT_1, DEST_OUT_2, RELAY_OUT)), ())
        if sorted(ins) != sorted(ch.in_names):
            raise StructureError(
                f"sender_in + relay_in {list(ins)} must partition inputs {list(ch.in_names)}")
        if sorted(outs) != sorted(ch.out_names):
            raise StructureError(
                f"destination + relay outputs {list(outs)} must partition {list(ch.out_names)}")
        if len(roles.get(RELAY_IN, ())) != 1 or len(roles.get(RELAY_OUT, ())) != 1:
            raise StructureError("a relay channel has exactly one relay input and one relay output")
        if not roles.get(SENDER_IN):
            raise StructureError("missing sender_in labels")
        object.__setattr__(self, "roles", roles)

    @property
    def sender(self) -> tuple:
        return self.roles[SENDER_IN]

    @property
    def relay_in(self) -> str:
        return self.roles[RELAY_IN][0]

    @property
    def relay_out(self) -> str:
        return self.roles[RELAY_OUT][0]

    @property
    def dest(self) -> tuple:
        r = self.roles
        return r.get(DEST_OUT_1, ()) + r.get(DEST_OUT_2, ()) + r.get(DEST_OUT, ())

    @property
    def has_split(self) -> bool:
        return bool(self.roles.get(DEST_OUT_1)) and bool(self.roles.get(DEST_OUT_2))

    def in_label(self, name: str) -> SubsystemLabel:
        for lab in self.channel.in_labels:
            if lab.name == name:
                return lab
        raise LabelError(f"{name!r} is not a channel input")

    def out_label(self, name: str) -> SubsystemLabel:
        for lab in self.channel.out_labels:
            if lab.name == name:
                return lab
        raise LabelError(f"{name!r} is not a channel output")

    def apply(self, rho: DensityOperator) -> DensityOperator:
        return qlin.apply_channel(self.channel, rho)


@dataclass(frozen=True, eq=False)
class HadamardSpec:
    """Measure (A, D) into classical Y₁, then prepare B from y₁."""

    measure: POVM
    prepare: Sequence[DensityOperator]
    sender: tuple = ("A",)
    relay_in: str = "D"
    relay_out: str = "Y1"

    def __post_init__(self):
        self.measure.check()
        if len(self.prepare) != len(self.measure):
            raise ValidationError("one preparation state per measurement outcome",
                                  invariant="shape")
        labels = self.prepare[0].labels
        for st in self.prepare:
            st.check()
            if st.labels != labels:
                raise LabelError("all prepared states must share labels")
        expected = sorted(tuple(self.sender) + (self.relay_in,))
        if sorted(self.measure.names) != expected:
            raise LabelError(f"POVM acts on {list(self.measure.names)}, expected {expected}")


# -- constructors ---------------------------------------------------------------


def depolarizing_kraus(q: float) -> np.ndarray:
    w = [1 - 3 * q / 4, q / 4, q / 4, q / 4]
    return np.stack([math.sqrt(max(wi, 0.0)) * PAULI[k] for wi, k in zip(w, "IXYZ")])


def make_depolarizing_relay(p: float, q: float) -> RelayChannel:
    """M_{A→B₁E} ⊗ P_{D→B₂}: Pauli-twirled broadcast with ancilla θ₀ and a depolarizing relay link.

    θ₀ = (1 − p)|0⟩⟨0| + p|1⟩⟨1| and P(ρ) = (1 − q)ρ + q I/2.
    """
    for name, v in (("p", p), ("q", q)):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"{name}={v} outside [0, 1]", invariant="range")
    append = [math.sqrt(1 - p) * np.array([[1, 0], [0, 0], [0, 1], [0, 0]]),
              math.sqrt(p) * np.array([[0, 0], [1, 0], [0, 0], [0, 1]])]
    m_kraus = np.stack([0.5 * np.kron(PAULI[k], PAULI[k]) @ a for k in "IXYZ" for a in append])
    m = QuantumChannel((("A", 2),), (("B1", 2), ("E", 2)), m_kraus)
    pch = QuantumChannel((("D", 2),), (("B2", 2),), depolarizing_kraus(q))
    ch = qlin.tensor_channels(m, pch).check()
    roles = {SENDER_IN: ("A",), RELAY_IN: ("D",), DEST_OUT_1: ("B1",), DEST_OUT_2: ("B2",),
             RELAY_OUT: ("E",)}
    return RelayChannel(ch, roles)


def make_wired_relay() -> RelayChannel:
    """Noiseless wires A₁→B₁ (qubit), D→B₂ (qubit), A₀→E (dimension 8)."""
    ins = (("A1", 2), ("A0", 8), ("D", 2))
    outs = (("B1", 2), ("B2", 2), ("E", 8))
    perm = qlin.permutation_matrix([2, 8, 2], [0, 2, 1])
    ch = QuantumChannel(ins, outs, perm[None]).check()
    roles = {SENDER_IN: ("A1", "A0"), RELAY_IN: ("D",), DEST_OUT_1: ("B1",),
             DEST_OUT_2: ("B2",), RELAY_OUT: ("E",)}
    return RelayChannel(ch, roles)


def _eig_factors(mat: np.ndarray, tol: float = 1e-14):
    w, v = np.linalg.eigh(qlin.hermitize(mat))
    return [(float(lam), v[:, i]) for i, lam in enumerate(w) if lam > tol]


def make_hadamard_relay(spec: HadamardSpec) -> RelayChannel:
    """ρ ↦ Σ_y tr(Γ_y ρ) σ_y ⊗ |y⟩⟨y|, with Y₁ delivered to the relay."""
    pov = spec.measure
    order = tuple(spec.sender) + (spec.relay_in,)
    perm = [pov.names.index(n) for n in order]
    elements = [qlin.permute_factors(el, [l.dim for l in pov.labels], perm) for el in pov.elements]
    in_labels = tuple(pov.labels[i] for i in perm)
    b_labels = spec.prepare[0].labels
    ny = len(pov)
    y_label = qlin.classical(spec.relay_out, ny)
    ops = []
    for y, (gamma, sigma) in enumerate(zip(elements, spec.prepare)):
        ey = np.zeros(ny)
        ey[y] = 1.0
        for lam, v in _eig_factors(gamma):
            for mu, w in _eig_factors(sigma.matrix):
                ops.append(math.sqrt(lam * mu) * np.outer(np.kron(w, ey), v.conj()))
    ch = QuantumChannel(in_labels, b_labels + (y_label,), np.stack(ops)).check()
    roles = {SENDER_IN: tuple(spec.sender), RELAY_IN: (spec.relay_in,),
             DEST_OUT: tuple(l.name for l in b_labels), RELAY_OUT: (spec.relay_out,)}
    return RelayChannel(ch, roles, {"hadamard": True})


def make_bitpipe_hadamard() -> RelayChannel:
    """Measure qubit A in the computational basis (D ignored); B is prepared as |y₁⟩."""
    a, d = ("A", 2), ("D", 2)
    el = np.stack([np.kron(np.diag([1.0, 0.0]), np.eye(2)), np.kron(np.diag([0.0, 1.0]), np.eye(2))])
    prep = [qlin.basis_state(y, [("B", 2)]) for y in range(2)]
    return make_hadamard_relay(HadamardSpec(POVM((a, d), el), prep))


def make_cq_relay(table: Mapping[tuple, DensityOperator], relay_out: str = "E",
                  x_name: str = "X", x1_name: str = "X1") -> RelayChannel:
    """Classical-quantum relay channel measuring (X, X₁) and emitting ``table[(x, x1)]``.

    Every table entry is a state on the same labels, one of which is the
    relay output ``relay_out``; the rest reach the destination.
    """
    keys = sorted(table)
    nx = max(k[0] for k in keys) + 1
    nx1 = max(k[1] for k in keys) + 1
    if len(keys) != nx * nx1:
        raise ValidationError(f"table must cover all {nx}x{nx1} input pairs", invariant="shape")
    labels = table[keys[0]].labels
    for k in keys:
        if table[k].labels != labels:
            raise ValidationError(f"entry {k} has labels {table[k].names}, expected "
                                  f"{[l.name for l in labels]}", invariant="dimension")
        table[k].check()
    names = [l.name for l in labels]
    if relay_out not in names:
        raise LabelError(f"relay output {relay_out!r} missing from table labels {names}")
    din = nx * nx1
    ops = []
    for (x, x1) in keys:
        e_in = np.zeros(din)
        e_in[x * nx1 + x1] = 1.0
        for mu, w in _eig_factors(table[(x, x1)].matrix):
            ops.append(math.sqrt(mu) * np.outer(w, e_in))
    ch = QuantumChannel(((x_name, nx), (x1_name, nx1)), labels, np.stack(ops)).check()
    roles = {SENDER_IN: (x_name,), RELAY_IN: (x1_name,), RELAY_OUT: (relay_out,),
             DEST_OUT: tuple(n for n in names if n != relay_out)}
    return RelayChannel(ch, roles, {"cq": True})


def make_bsc_cq(flip: float) -> RelayChannel:
    """Relay-less binary symmetric c-q channel: B = X ⊕ Bern(flip); D and E are trivial."""
    table = {}
    for x in range(2):
        diag = [1 - flip, flip] if x == 0 else [flip, 1 - flip]
        table[(x, 0)] = qlin.density_operator(np.diag(diag), [("B", 2), ("E", 1)])
    return make_cq_relay(table)


def with_input_unitary(ch: RelayChannel, u: np.ndarray, labels: Sequence[str]) -> RelayChannel:
    """Precede ``ch`` by a unitary acting on the named inputs."""
    labs = tuple(ch.in_label(n) for n in labels)
    pre = qlin.unitary_channel(u, labs)
    first = qlin.QuantumChannel(ch.channel.in_labels, ch.channel.in_labels,
                                _embed_kraus(pre, ch.channel.in_labels))
    return RelayChannel(qlin.compose(ch.channel, first), ch.roles)


def _embed_kraus(ch: QuantumChannel, labels) -> np.ndarray:
    names = [l.name for l in labels]
    idx = [names.index(n) for n in ch.in_names]
    rest = [i for i in range(len(names)) if i not in idx]
    dims = [l.dim for l in labels]
    drest = int(np.prod([dims[i] for i in rest], dtype=int)) if rest else 1
    p = qlin.permutation_matrix(dims, idx + rest)
    return np.stack([p.T @ np.kron(k, np.eye(drest)) @ p for k in ch.kraus])


# -- classifiers -----------------------------------------------------------------


@dataclass(frozen=True)
class DegradedResult:
    degraded: bool
    residual: float

    def __bool__(self):
        return self.degraded


@dataclass(frozen=True, eq=False)
class OrcResult:
    orc: bool
    distance: float
    choi_broadcast: DensityOperator = None
    choi_direct: DensityOperator = None

    def __bool__(self):
        return self.orc


def relay_choi(ch: RelayChannel) -> DensityOperator:
    return choi_state(ch.channel, ref_prefix="R_")


def is_degraded(ch: RelayChannel, threshold: float = DEGRADED_THRESHOLD) -> DegradedResult:
    """Markov-chain test on the Choi state over the joint input (A, D).

    The residual is I(R; B | E) with R the reference copies of all inputs.
    """
    if "degraded_residual" not in ch.tags:
        xi = relay_choi(ch)
        refs = ["R_" + n for n in ch.channel.in_names]
        res = MarginalEntropies(xi).cond_mutual(refs, list(ch.dest), [ch.relay_out])
        ch.tags["degraded_residual"] = float(res)
    res = ch.tags["degraded_residual"]
    return DegradedResult(res <= threshold, res)


def is_orc(ch: RelayChannel, tol: float = ORC_THRESHOLD) -> OrcResult:
    """Does the Choi state factor as choi(M_{A→B₁E}) ⊗ choi(P_{D→B₂})?"""
    if not ch.has_split:
        raise StructureError("ORC test needs dest_out_1 / dest_out_2 roles")
    if "orc" not in ch.tags:
        xi = relay_choi(ch)
        left = ["R_" + n for n in ch.sender] + list(ch.roles[DEST_OUT_1]) + [ch.relay_out]
        right = ["R_" + ch.relay_in] + list(ch.roles[DEST_OUT_2])
        xm = partial_trace(xi, left)
        xp = partial_trace(xi, right)
        dist = trace_distance(xi, tensor(xm, xp))
        ch.tags["orc"] = OrcResult(dist <= tol, float(dist), xm, xp)
    return ch.tags["orc"]


def orc_factors(ch: RelayChannel) -> tuple:
    """Broadcast channel M_{A→B₁E} and direct channel P_{D→B₂} of an ORC relay channel."""
    if not is_orc(ch):
        raise StructureError("channel does not have orthogonal receiver components")
    d = ch.in_label(ch.relay_in)
    fixed_d = qlin.basis_state(0, [d])
    m = qlin.trace_out_channel(qlin.fix_input(ch.channel, fixed_d), ch.roles[DEST_OUT_2])
    sender = [ch.in_label(n) for n in ch.sender]
    fixed_a = qlin.basis_state(0, sender)
    p = qlin.trace_out_channel(qlin.fix_input(ch.channel, fixed_a),
                               ch.roles[DEST_OUT_1] + (ch.relay_out,))
    return m, p


def is_classical_quantum(ch: RelayChannel) -> bool:
    """True when the channel output ignores input coherences (N = N ∘ dephasing)."""
    if "cq" not in ch.tags:
        xi = relay_choi(ch)
        nin = len(ch.channel.in_labels)
        dref = ch.channel.din
        off = classical_offdiagonal(xi.matrix, [dref, ch.channel.dout], 0) if nin else 0.0
        ch.tags["cq"] = off <= qlin.CLASSICAL_TOL
    return ch.tags["cq"]


def relay_output_is_classical(ch: RelayChannel) -> bool:
    xi = relay_choi(ch)
    return classical_offdiagonal(xi.matrix, xi.dims, xi.index(ch.relay_out)) <= qlin.CLASSICAL_TOL


def is_hadamard(ch: RelayChannel) -> bool:
    """Degraded with a classical relay output."""
    if "hadamard" not in ch.tags:
        ch.tags["hadamard"] = relay_output_is_classical(ch) and bool(is_degraded(ch))
    return ch.tags["hadamard"]


# -- JSON --------------------------------------------------------------------------


def relay_from_json(doc: dict, overrides: Mapping | None = None) -> RelayChannel:
    """Build a relay channel from a channel-spec document.

    Either ``{"template": ..., ...params}`` for the bundled families, or an
    explicit Kraus document (see :func:`qrelay.qlin.channel_from_json`) with a
    ``roles`` map.
    """
    doc = dict(doc)
    doc.update(overrides or {})
    template = doc.get("template")
    if template == "depolarizing_relay":
        return make_depolarizing_relay(float(doc["p"]), float(doc["q"]))
    if template == "wired_relay":
        return make_wired_relay()
    if template == "bitpipe_hadamard":
        return make_bitpipe_hadamard()
    if template == "bsc_cq":
        return make_bsc_cq(float(doc["flip"]))
    if template == "cq_table":
        table = {}
        for key, st in doc["table"].items():
            x, x1 = (int(v) for v in key.split(","))
            table[(x, x1)] = qlin.state_from_json(st)
        return make_cq_relay(table, relay_out=doc.get("relay_out", "E"))
    if template is not None:
        raise ValidationError(f"unknown channel template {template!r}", invariant="format")
    ch = qlin.channel_from_json(doc)
    if "roles" not in doc:
        raise StructureError("explicit channel spec needs a 'roles' map")
    return RelayChannel(ch, doc["roles"])


def relay_to_json(ch: RelayChannel) -> dict:
    doc = qlin.channel_to_json(ch.channel)
    doc["roles"] = {k: list(v) for k, v in ch.roles.items()}
    return doc
