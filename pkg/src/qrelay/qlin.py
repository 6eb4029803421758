"""Finite-dimensional quantum linear algebra over labeled tensor factors.

States and channels carry an ordered list of :class:`SubsystemLabel`; every
operation addresses factors by name and permutes them explicitly, so callers
never reorder axes by hand.  Classical registers are ordinary factors tagged
``kind="classical"`` whose states are diagonal in the computational basis.

All objects are immutable (their arrays are flagged read-only) and every
function is pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionCapError, LabelError, ValidationError

QUANTUM = "quantum"
CLASSICAL = "classical"

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-9
CLASSICAL_TOL = 1e-10
CPTP_TOL = 1e-9

_max_dim = 4096


def max_dim() -> int:
    """Current total-dimension limit for any composite system."""
    return _max_dim


def set_max_dim(limit: int) -> int:
    """Change the total-dimension limit; returns the previous value."""
    global _max_dim
    if int(limit) < 1:
        raise ValueError("dimension limit must be positive")
    old, _max_dim = _max_dim, int(limit)
    return old


def check_dim(dim: int, what: str = "composite") -> None:
    if dim > _max_dim:
        raise DimensionCapError(
            f"{what} dimension {dim} exceeds the limit {_max_dim} (see qlin.set_max_dim)"
        )


@dataclass(frozen=True)
class SubsystemLabel:
    name: str
    dim: int
    kind: str = QUANTUM

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise LabelError(f"label name must be a non-empty string, got {self.name!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise LabelError(f"label {self.name!r}: dimension must be a positive integer")
        if self.kind not in (QUANTUM, CLASSICAL):
            raise LabelError(f"label {self.name!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def is_classical(self) -> bool:
        return self.kind == CLASSICAL

    def renamed(self, name: str) -> "SubsystemLabel":
        return SubsystemLabel(name, self.dim, self.kind)

    def as_kind(self, kind: str) -> "SubsystemLabel":
        return SubsystemLabel(self.name, self.dim, kind)


def classical(name: str, dim: int) -> SubsystemLabel:
    return SubsystemLabel(name, dim, CLASSICAL)


def as_labels(labels) -> tuple:
    """Coerce labels given as SubsystemLabel, ``(name, dim)`` or ``(name, dim, kind)``."""
    if isinstance(labels, SubsystemLabel):
        labels = [labels]
    if isinstance(labels, tuple) and all(isinstance(l, SubsystemLabel) for l in labels):
        if len({l.name for l in labels}) == len(labels):
            return labels
    out = []
    for lab in labels:
        if isinstance(lab, SubsystemLabel):
            out.append(lab)
        else:
            out.append(SubsystemLabel(*lab))
    names = [lab.name for lab in out]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise LabelError(f"duplicate label names: {dup}")
    return tuple(out)


def _names(group) -> list:
    if isinstance(group, (str, SubsystemLabel)):
        group = [group]
    return [g.name if isinstance(g, SubsystemLabel) else g for g in group]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


def hermitize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


# -- array-level tensor manipulation ------------------------------------------


def permute_factors(mat: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder the tensor factors of a square operator; ``perm[k]`` is the old index of new factor k."""
    n = len(dims)
    perm = list(perm)
    if perm == list(range(n)):
        return mat
    t = mat.reshape(tuple(dims) * 2)
    t = t.transpose(perm + [n + p for p in perm])
    d = mat.shape[0]
    return t.reshape(d, d)


def permutation_matrix(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary P with P (v_0 ⊗ ... ⊗ v_n) = v_perm[0] ⊗ ... ⊗ v_perm[n]."""
    n = len(dims)
    d = int(np.prod(dims, dtype=int))
    eye = np.eye(d).reshape(tuple(dims) + (d,))
    return eye.transpose(list(perm) + [n]).reshape(d, d)


def ptrace_array(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of any square operator, keeping factors ``keep`` in the given order."""
    keep = list(keep)
    traced = [i for i in range(len(dims)) if i not in keep]
    dk = int(np.prod([dims[i] for i in keep], dtype=int))
    dt = int(np.prod([dims[i] for i in traced], dtype=int))
    t = permute_factors(mat, dims, keep + traced).reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


# -- states --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A density matrix over an ordered list of labeled subsystems.

    Construction checks only shapes and labels; call :meth:`check` (or use
    :func:`density_operator`) to enforce the physical invariants.
    """

    labels: tuple
    matrix: np.ndarray

    def __post_init__(self):
        labels = as_labels(self.labels)
        d = int(np.prod([lab.dim for lab in labels], dtype=int)) if labels else 1
        check_dim(d, "state")
        mat = np.asarray(self.matrix)
        if mat.shape != (d, d):
            raise ValidationError(
                f"matrix shape {mat.shape} does not match label dimensions {d}x{d}",
                invariant="shape",
            )
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrix", _frozen(mat))
        object.__setattr__(self, "_names", tuple(lab.name for lab in labels))
        object.__setattr__(self, "_dims", tuple(lab.dim for lab in labels))

    @property
    def names(self) -> tuple:
        return self._names

    @property
    def dims(self) -> tuple:
        return self._dims

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def label(self, name: str) -> SubsystemLabel:
        for lab in self.labels:
            if lab.name == name:
                return lab
        raise LabelError(f"unknown label {name!r}; state has {list(self.names)}")

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LabelError(f"unknown label {name!r}; state has {list(self.names)}") from None

    def reorder(self, names) -> "DensityOperator":
        names = _names(names)
        if sorted(names) != sorted(self.names):
            raise LabelError(f"reorder needs a permutation of {list(self.names)}, got {names}")
        perm = [self.index(n) for n in names]
        mat = permute_factors(self.matrix, self.dims, perm)
        return DensityOperator(tuple(self.labels[i] for i in perm), mat)

    def relabel(self, mapping: dict) -> "DensityOperator":
        labels = tuple(lab.renamed(mapping.get(lab.name, lab.name)) for lab in self.labels)
        return DensityOperator(labels, self.matrix)

    def with_kinds(self, kinds: dict) -> "DensityOperator":
        labels = tuple(lab.as_kind(kinds.get(lab.name, lab.kind)) for lab in self.labels)
        return DensityOperator(labels, self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def check(self) -> "DensityOperator":
        """Raise :class:`ValidationError` unless every state invariant holds."""
        mat = self.matrix
        herm = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
        if herm > HERMITIAN_TOL:
            raise ValidationError(f"state is not Hermitian (residual {herm:.3e})",
                                  invariant="hermitian", residual=herm)
        tr = float(np.real(np.trace(mat)))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"state trace is {tr!r}, expected 1",
                                  invariant="trace", residual=abs(tr - 1.0))
        lam = float(np.linalg.eigvalsh(hermitize(mat))[0])
        if lam < -POSITIVITY_TOL:
            raise ValidationError(f"state has negative eigenvalue {lam:.3e}",
                                  invariant="positive", residual=-lam)
        for i, lab in enumerate(self.labels):
            if lab.is_classical:
                off = classical_offdiagonal(mat, self.dims, i)
                if off > CLASSICAL_TOL:
                    raise ValidationError(
                        f"classical factor {lab.name!r} has off-diagonal weight {off:.3e}",
                        invariant="classical", residual=off,
                    )
        return self


def classical_offdiagonal(mat: np.ndarray, dims: Sequence[int], index: int) -> float:
    """Largest entry outside the diagonal blocks of factor ``index``."""
    others = [i for i in range(len(dims)) if i != index]
    dc = dims[index]
    if dc == 1:
        return 0.0
    rest = mat.shape[0] // dc
    t = permute_factors(mat, dims, [index] + others).reshape(dc, rest, dc, rest)
    blocks = np.abs(t).max(axis=(1, 3))
    np.fill_diagonal(blocks, 0.0)
    return float(blocks.max())


def density_operator(matrix, labels) -> DensityOperator:
    """Build and validate a state."""
    return DensityOperator(as_labels(labels), np.asarray(matrix, dtype=complex)).check()


def pure_state(vector, labels) -> DensityOperator:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValidationError("zero state vector", invariant="trace", residual=1.0)
    v = v / nrm
    return DensityOperator(as_labels(labels), np.outer(v, v.conj()))


def basis_state(index: int, labels) -> DensityOperator:
    labels = as_labels(labels)
    d = int(np.prod([lab.dim for lab in labels], dtype=int))
    v = np.zeros(d)
    v[index] = 1.0
    return pure_state(v, labels)


def maximally_mixed(labels) -> DensityOperator:
    labels = as_labels(labels)
    d = int(np.prod([lab.dim for lab in labels], dtype=int))
    return DensityOperator(labels, np.eye(d) / d)


def tensor(a: DensityOperator, b: DensityOperator, *more: DensityOperator) -> DensityOperator:
    """Kronecker product; labels concatenate and must stay distinct."""
    out = DensityOperator(a.labels + b.labels, np.kron(a.matrix, b.matrix))
    for c in more:
        out = tensor(out, c)
    return out


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    """Reduced state on ``keep``, returned in the order ``keep`` lists."""
    names = _names(keep)
    idx = [rho.index(n) for n in names]
    if len(set(idx)) != len(idx):
        raise LabelError(f"repeated label in {names}")
    mat = ptrace_array(rho.matrix, rho.dims, idx)
    return DensityOperator(tuple(rho.labels[i] for i in idx), mat)


def embed_classical(dist, label) -> DensityOperator:
    """Diagonal state of a classical register with the given distribution."""
    p = np.asarray(dist, dtype=float).reshape(-1)
    if np.any(p < 0):
        raise ValidationError("negative probability", invariant="pmf", residual=float(-p.min()))
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValidationError(f"probabilities sum to {p.sum()!r}", invariant="pmf",
                              residual=abs(p.sum() - 1.0))
    if isinstance(label, str):
        label = classical(label, p.size)
    elif not isinstance(label, SubsystemLabel):
        label = SubsystemLabel(*label)
    if label.dim != p.size:
        raise LabelError(f"label {label.name!r} has dim {label.dim}, distribution has {p.size}")
    return DensityOperator((label.as_kind(CLASSICAL),), np.diag(p))


def trace_norm(mat: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(mat)))))


def trace_distance(a, b) -> float:
    """½‖a − b‖₁ for states or matrices (states compared in a's label order)."""
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        b = b.reorder(a.names)
        a, b = a.matrix, b.matrix
    return 0.5 * trace_norm(np.asarray(a) - np.asarray(b))


# -- channels --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """A map in Kraus form; ``kraus`` has shape ``(n_ops, d_out, d_in)``."""

    in_labels: tuple
    out_labels: tuple
    kraus: np.ndarray

    def __post_init__(self):
        ins = as_labels(self.in_labels)
        outs = as_labels(self.out_labels)
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        din = int(np.prod([lab.dim for lab in ins], dtype=int)) if ins else 1
        dout = int(np.prod([lab.dim for lab in outs], dtype=int)) if outs else 1
        if k.ndim != 3 or k.shape[1:] != (dout, din):
            raise ValidationError(
                f"Kraus operators have shape {k.shape[1:]}, labels need {(dout, din)}",
                invariant="shape",
            )
        object.__setattr__(self, "in_labels", ins)
        object.__setattr__(self, "out_labels", outs)
        object.__setattr__(self, "kraus", _frozen(k))

    @property
    def in_names(self) -> tuple:
        return tuple(lab.name for lab in self.in_labels)

    @property
    def out_names(self) -> tuple:
        return tuple(lab.name for lab in self.out_labels)

    @property
    def din(self) -> int:
        return self.kraus.shape[2]

    @property
    def dout(self) -> int:
        return self.kraus.shape[1]

    def completeness_residual(self) -> float:
        s = np.einsum("kai,kaj->ij", self.kraus.conj(), self.kraus)
        return float(np.max(np.abs(s - np.eye(self.din))))

    def check(self, tol: float = CPTP_TOL) -> "QuantumChannel":
        res = self.completeness_residual()
        if res > tol:
            raise ValidationError(
                f"Kraus set is not trace preserving: completeness residual {res:.3e}",
                invariant="completeness", residual=res,
            )
        return self


def quantum_channel(kraus, in_labels, out_labels) -> QuantumChannel:
    return QuantumChannel(as_labels(in_labels), as_labels(out_labels), kraus).check()


def identity_channel(in_labels, out_labels=None) -> QuantumChannel:
    """Noiseless wire; optionally renames each factor to the matching out label."""
    ins = as_labels(in_labels)
    outs = ins if out_labels is None else as_labels(out_labels)
    if [l.dim for l in ins] != [l.dim for l in outs]:
        raise LabelError("identity channel needs matching dimensions")
    d = int(np.prod([lab.dim for lab in ins], dtype=int))
    return QuantumChannel(ins, outs, np.eye(d)[None])


def unitary_channel(u, labels) -> QuantumChannel:
    labels = as_labels(labels)
    return QuantumChannel(labels, labels, np.asarray(u)[None])


def apply_channel(ch: QuantumChannel, rho: DensityOperator) -> DensityOperator:
    """Act with ``ch`` on its input factors of ``rho`` and as identity elsewhere.

    The output factors take the place of the first input factor; the
    remaining factors keep their relative order.
    """
    idx = [rho.index(n) for n in ch.in_names]
    for i, lab in zip(idx, ch.in_labels):
        if rho.labels[i].dim != lab.dim:
            raise ValidationError(
                f"channel input {lab.name!r} has dim {lab.dim}, state has {rho.labels[i].dim}",
                invariant="dimension",
            )
    rest = [i for i in range(len(rho.labels)) if i not in idx]
    rest_labels = tuple(rho.labels[i] for i in rest)
    clash = set(ch.out_names) & {lab.name for lab in rest_labels}
    if clash:
        raise LabelError(f"output labels {sorted(clash)} already present in the state")
    drest = int(np.prod([rho.dims[i] for i in rest], dtype=int)) if rest else 1
    check_dim(ch.dout * drest, "output state")
    r = permute_factors(rho.matrix, rho.dims, idx + rest)
    k = ch.kraus
    nk, din, dout = k.shape[0], ch.din, ch.dout
    # K ρ on the input factor, then (·) K† contracted on the column input index
    t = (k @ r.reshape(din, -1)).reshape(nk, dout, drest, din, drest)
    t = t.transpose(0, 1, 2, 4, 3).reshape(nk, dout * drest * drest, din)
    out = (t @ np.conj(np.transpose(k, (0, 2, 1)))).sum(axis=0)
    out = out.reshape(dout, drest, drest, dout).transpose(0, 1, 3, 2)
    out = out.reshape(dout * drest, dout * drest)

    first = min(idx) if idx else 0
    n_before = sum(1 for i in rest if i < first)
    labels = rest_labels[:n_before] + ch.out_labels + rest_labels[n_before:]
    nout = len(ch.out_labels)
    cur = list(ch.out_labels) + list(rest_labels)
    dims = [lab.dim for lab in cur]
    perm = list(range(nout, nout + n_before)) + list(range(nout)) + list(
        range(nout + n_before, len(cur)))
    return DensityOperator(labels, permute_factors(out, dims, perm))


def choi_state(ch: QuantumChannel, ref_prefix: str = "R_") -> DensityOperator:
    """(id ⊗ ch) on a maximally entangled state between reference copies and the inputs.

    Reference labels are the input names with ``ref_prefix`` prepended and come
    first, followed by the channel outputs.
    """
    refs = tuple(lab.renamed(ref_prefix + lab.name) for lab in ch.in_labels)
    labels = as_labels(refs + ch.out_labels)
    check_dim(ch.din * ch.dout, "Choi state")
    # column i of K_k sits next to reference |i>
    psi = np.transpose(ch.kraus, (0, 2, 1)).reshape(ch.kraus.shape[0], -1)
    mat = psi.T @ psi.conj() / ch.din
    return DensityOperator(labels, mat)


def compose(second: QuantumChannel, first: QuantumChannel) -> QuantumChannel:
    """``second ∘ first``; ``second`` may act on a subset of ``first``'s outputs.

    Outputs are ``second``'s outputs followed by the untouched outputs of ``first``.
    """
    out1 = list(first.out_names)
    try:
        idx = [out1.index(n) for n in second.in_names]
    except ValueError:
        raise LabelError(
            f"inputs {list(second.in_names)} are not all outputs of {out1}") from None
    for i, lab in zip(idx, second.in_labels):
        if first.out_labels[i].dim != lab.dim:
            raise ValidationError(f"dimension mismatch on {lab.name!r}", invariant="dimension")
    rest = [i for i in range(len(out1)) if i not in idx]
    rest_labels = tuple(first.out_labels[i] for i in rest)
    drest = int(np.prod([lab.dim for lab in rest_labels], dtype=int)) if rest else 1
    p = permutation_matrix([lab.dim for lab in first.out_labels], idx + rest)
    k2 = np.stack([np.kron(k, np.eye(drest)) for k in second.kraus])
    kraus = np.einsum("aob,bc,kci->akoi", k2, p, first.kraus).reshape(
        -1, second.dout * drest, first.din)
    return QuantumChannel(first.in_labels, second.out_labels + rest_labels, kraus)


def tensor_channels(a: QuantumChannel, b: QuantumChannel) -> QuantumChannel:
    kraus = np.einsum("iab,jcd->ijacbd", a.kraus, b.kraus).reshape(
        -1, a.dout * b.dout, a.din * b.din)
    return QuantumChannel(a.in_labels + b.in_labels, a.out_labels + b.out_labels, kraus)


def trace_out_channel(ch: QuantumChannel, discard) -> QuantumChannel:
    """Compose ``ch`` with the partial trace over some of its outputs."""
    names = set(_names(discard))
    keep = [i for i, n in enumerate(ch.out_names) if n not in names]
    drop = [i for i, n in enumerate(ch.out_names) if n in names]
    dims = [lab.dim for lab in ch.out_labels]
    dk = int(np.prod([dims[i] for i in keep], dtype=int))
    dd = int(np.prod([dims[i] for i in drop], dtype=int))
    p = permutation_matrix(dims, keep + drop)
    k = np.einsum("ab,kbi->kai", p, ch.kraus).reshape(-1, dk, dd, ch.din)
    kraus = np.transpose(k, (0, 2, 1, 3)).reshape(-1, dk, ch.din)
    return QuantumChannel(ch.in_labels, tuple(ch.out_labels[i] for i in keep), kraus)


def fix_input(ch: QuantumChannel, state: DensityOperator) -> QuantumChannel:
    """Channel on the remaining inputs obtained by feeding ``state`` into some inputs."""
    fixed = list(state.names)
    ins = list(ch.in_names)
    for n in fixed:
        if n not in ins:
            raise LabelError(f"{n!r} is not an input of the channel")
    free = [i for i, n in enumerate(ins) if n not in fixed]
    idx_fixed = [ins.index(n) for n in fixed]
    dims = [lab.dim for lab in ch.in_labels]
    dfree = int(np.prod([dims[i] for i in free], dtype=int)) if free else 1
    dfix = state.dim
    w, v = np.linalg.eigh(hermitize(state.matrix))
    pinv = permutation_matrix(dims, free + idx_fixed).T
    ops = []
    for lam, vec in zip(w, v.T):
        if lam <= 1e-14:
            continue
        emb = np.kron(np.eye(dfree), vec.reshape(dfix, 1)) * math.sqrt(lam)
        ops.append(np.einsum("kai,ij->kaj", ch.kraus, pinv @ emb))
    return QuantumChannel(tuple(ch.in_labels[i] for i in free), ch.out_labels,
                          np.concatenate(ops, axis=0))


# -- measurements ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class POVM:
    """Measurement on ``labels`` with one PSD element per outcome."""

    labels: tuple
    elements: np.ndarray
    outcome_labels: tuple = ()

    def __post_init__(self):
        labels = as_labels(self.labels)
        el = np.asarray(self.elements, dtype=complex)
        d = int(np.prod([lab.dim for lab in labels], dtype=int))
        if el.ndim != 3 or el.shape[1:] != (d, d):
            raise ValidationError(f"POVM elements have shape {el.shape}, need (k, {d}, {d})",
                                  invariant="shape")
        outcomes = tuple(self.outcome_labels) or tuple(range(el.shape[0]))
        if len(outcomes) != el.shape[0]:
            raise ValidationError("one outcome label per element required", invariant="shape")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "elements", _frozen(el))
        object.__setattr__(self, "outcome_labels", outcomes)

    @property
    def names(self) -> tuple:
        return tuple(lab.name for lab in self.labels)

    def __len__(self):
        return self.elements.shape[0]

    def check(self, tol: float = CPTP_TOL) -> "POVM":
        for i, el in enumerate(self.elements):
            lam = float(np.linalg.eigvalsh(hermitize(el))[0])
            if lam < -tol:
                raise ValidationError(f"POVM element {i} has eigenvalue {lam:.3e}",
                                      invariant="positive", residual=-lam)
        res = float(np.max(np.abs(self.elements.sum(axis=0) - np.eye(self.elements.shape[1]))))
        if res > tol:
            raise ValidationError(f"POVM elements sum to identity only within {res:.3e}",
                                  invariant="completeness", residual=res)
        return self


def computational_povm(labels) -> POVM:
    labels = as_labels(labels)
    d = int(np.prod([lab.dim for lab in labels], dtype=int))
    el = np.zeros((d, d, d))
    el[np.arange(d), np.arange(d), np.arange(d)] = 1.0
    return POVM(labels, el)


# -- JSON --------------------------------------------------------------------------


def complex_from_json(data, ndim: int) -> np.ndarray:
    """Decode nested ``[re, im]`` pairs into a complex array of rank ``ndim``."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise ValidationError(
            f"expected a rank-{ndim} array of [re, im] pairs, got shape {arr.shape}",
            invariant="format",
        )
    return arr[..., 0] + 1j * arr[..., 1]


def complex_to_json(arr) -> list:
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def labels_from_json(items) -> tuple:
    out = []
    for item in items:
        if isinstance(item, dict):
            out.append(SubsystemLabel(item["name"], int(item["dim"]), item.get("kind", QUANTUM)))
        else:
            out.append(SubsystemLabel(*item))
    return as_labels(out)


def labels_to_json(labels) -> list:
    return [{"name": l.name, "dim": l.dim, "kind": l.kind} for l in labels]


def channel_from_json(doc: dict) -> QuantumChannel:
    """Parse and validate ``{"in": [...], "out": [...], "kraus": [...]}``.

    Non-CPTP Kraus sets raise :class:`ValidationError` with the completeness
    residual attached.
    """
    labels = doc.get("labels", doc)
    ins = labels_from_json(labels["in"])
    outs = labels_from_json(labels["out"])
    kraus = np.stack([complex_from_json(k, 2) for k in doc["kraus"]])
    return QuantumChannel(ins, outs, kraus).check()


def channel_to_json(ch: QuantumChannel) -> dict:
    return {
        "labels": {"in": labels_to_json(ch.in_labels), "out": labels_to_json(ch.out_labels)},
        "kraus": [complex_to_json(k) for k in ch.kraus],
    }


def state_from_json(doc: dict) -> DensityOperator:
    """A state given by ``labels`` and either ``ket`` or ``matrix`` (pairs) or ``diag`` (reals)."""
    labels = labels_from_json(doc["labels"])
    if "ket" in doc:
        return pure_state(complex_from_json(doc["ket"], 1), labels).check()
    if "diag" in doc:
        return density_operator(np.diag(np.asarray(doc["diag"], dtype=float)), labels)
    return density_operator(complex_from_json(doc["matrix"], 2), labels)


def state_to_json(rho: DensityOperator) -> dict:
    return {"labels": labels_to_json(rho.labels), "matrix": complex_to_json(rho.matrix)}


def povm_from_json(doc: dict) -> POVM:
    labels = labels_from_json(doc["labels"])
    if doc.get("kind") == "computational":
        return computational_povm(labels)
    el = np.stack([complex_from_json(e, 2) for e in doc["elements"]])
    return POVM(labels, el, tuple(doc.get("outcomes", ()))).check()
