"""Information measures in bits.

Marginals are taken by label name.  When a state carries classical factors
its spectrum is computed block by block over the classical indices, which
keeps classical-quantum states of a few hundred dimensions cheap.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LabelError, ValidationError
from .qlin import DensityOperator, hermitize, partial_trace, permute_factors

EIG_CUTOFF = 1e-12
NEG_TOL = 1e-9


def _entropy_from_eigs(lam: np.ndarray) -> float:
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size and lam.min() < -NEG_TOL:
        raise ValidationError(f"eigenvalue {lam.min():.3e} is below -{NEG_TOL}",
                              invariant="positive", residual=float(-lam.min()))
    # rounding can push a pure state's eigenvalue just above 1
    lam = np.minimum(lam[lam > EIG_CUTOFF], 1.0)
    return float(-np.sum(lam * np.log2(lam)))


def shannon_entropy(p) -> float:
    return _entropy_from_eigs(np.asarray(p, dtype=float))


def binary_entropy(t: float) -> float:
    """h(t) in bits."""
    return shannon_entropy([t, 1.0 - t])


def bconv(a: float, b: float) -> float:
    """Binary convolution a ∗ b = (1 − a) b + a (1 − b)."""
    return (1.0 - a) * b + a * (1.0 - b)


def spectrum(rho) -> np.ndarray:
    """Eigenvalues of a state, exploiting block structure of classical factors."""
    if not isinstance(rho, DensityOperator):
        return np.linalg.eigvalsh(hermitize(np.asarray(rho, dtype=complex)))
    cl = [i for i, lab in enumerate(rho.labels) if lab.is_classical and lab.dim > 1]
    if not cl:
        return np.linalg.eigvalsh(hermitize(rho.matrix))
    qu = [i for i in range(len(rho.labels)) if i not in cl]
    dc = int(np.prod([rho.dims[i] for i in cl], dtype=int))
    dq = rho.dim // dc
    t = permute_factors(rho.matrix, rho.dims, cl + qu).reshape(dc, dq, dc, dq)
    blocks = np.einsum("aiaj->aij", t)
    if dq == 1:
        return blocks.real.ravel()
    blocks = 0.5 * (blocks + np.conj(np.transpose(blocks, (0, 2, 1))))
    return np.linalg.eigvalsh(blocks).ravel()


def von_neumann_entropy(rho) -> float:
    """H(ρ) = −tr ρ log₂ ρ."""
    return _entropy_from_eigs(spectrum(rho))


def _group(rho: DensityOperator, group) -> tuple:
    if isinstance(group, str):
        group = (group,)
    names = tuple(g if isinstance(g, str) else g.name for g in group)
    for n in names:
        rho.index(n)
    return names


def _disjoint(*groups):
    seen = set()
    for g in groups:
        if seen & set(g):
            raise LabelError(f"label groups overlap on {sorted(seen & set(g))}")
        seen |= set(g)


class MarginalEntropies:
    """Memoized marginal entropies of one state, keyed by the set of labels kept."""

    def __init__(self, rho: DensityOperator):
        self.rho = rho
        self._cache = {}

    def H(self, *groups) -> float:
        names = []
        for g in groups:
            names.extend(_group(self.rho, g))
        key = frozenset(names)
        if len(key) != len(names):
            raise LabelError(f"label groups overlap in {names}")
        if not key:
            return 0.0
        if key not in self._cache:
            keep = [n for n in self.rho.names if n in key]
            marg = self.rho if len(keep) == len(self.rho.names) else partial_trace(self.rho, keep)
            self._cache[key] = von_neumann_entropy(marg)
        return self._cache[key]

    def mutual(self, a, b) -> float:
        a, b = _group(self.rho, a), _group(self.rho, b)
        _disjoint(a, b)
        return self.H(a) + self.H(b) - self.H(a, b)

    def cond_mutual(self, a, b, c) -> float:
        a, b, c = _group(self.rho, a), _group(self.rho, b), _group(self.rho, c)
        _disjoint(a, b, c)
        return self.H(a, c) + self.H(b, c) - self.H(a, b, c) - self.H(c)

    def cond_entropy(self, a, b) -> float:
        a, b = _group(self.rho, a), _group(self.rho, b)
        _disjoint(a, b)
        return self.H(a, b) - self.H(b)

    def coherent(self, a, b) -> float:
        return -self.cond_entropy(a, b)


def conditional_entropy(rho: DensityOperator, a, b) -> float:
    """H(A|B) = H(AB) − H(B)."""
    return MarginalEntropies(rho).cond_entropy(a, b)


def mutual_information(rho: DensityOperator, a, b) -> float:
    """I(A;B) = H(A) + H(B) − H(AB)."""
    return MarginalEntropies(rho).mutual(a, b)


def conditional_mutual_information(rho: DensityOperator, a, b, c) -> float:
    """I(A;B|C) = H(AC) + H(BC) − H(ABC) − H(C)."""
    return MarginalEntropies(rho).cond_mutual(a, b, c)


def coherent_information(rho: DensityOperator, a, b) -> float:
    """I(A⟩B) = H(B) − H(AB)."""
    return MarginalEntropies(rho).coherent(a, b)


def holevo_quantity(probs: Sequence[float], states: Sequence[np.ndarray]) -> float:
    """χ = H(Σ p_x ρ_x) − Σ p_x H(ρ_x), computed directly from the ensemble."""
    probs = np.asarray(probs, dtype=float)
    mats = [s.matrix if isinstance(s, DensityOperator) else np.asarray(s) for s in states]
    avg = sum(p * m for p, m in zip(probs, mats))
    return von_neumann_entropy(avg) - float(
        sum(p * von_neumann_entropy(m) for p, m in zip(probs, mats) if p > 0))


def relative_entropy(rho, sigma) -> float:
    """D(ρ‖σ) in bits; infinite when supp ρ ⊄ supp σ."""
    r = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    s = sigma.matrix if isinstance(sigma, DensityOperator) else np.asarray(sigma)
    lr, vr = np.linalg.eigh(hermitize(r))
    ls, vs = np.linalg.eigh(hermitize(s))
    overlap = np.abs(vr.conj().T @ vs) ** 2
    pos_r = lr > EIG_CUTOFF
    pos_s = ls > EIG_CUTOFF
    if np.any(overlap[np.ix_(pos_r, ~pos_s)] > 1e-12):
        return float("inf")
    log_s = np.zeros_like(ls)
    log_s[pos_s] = np.log2(ls[pos_s])
    cross = float(np.sum(lr[pos_r, None] * overlap[np.ix_(pos_r, pos_s)] * log_s[None, pos_s]))
    return float(np.sum(lr[pos_r] * np.log2(lr[pos_r]))) - cross


@dataclass(frozen=True)
class InfoQuery:
    """A named information quantity over label groups, e.g. ``("cond_mutual", (A, B, C))``."""

    quantity: str
    parts: tuple

    _ARITY = {"entropy": 1, "cond_entropy": 2, "mutual": 2, "cond_mutual": 3, "coherent": 2}

    def __post_init__(self):
        if self.quantity not in self._ARITY:
            raise ValueError(f"unknown quantity {self.quantity!r}")
        if len(self.parts) != self._ARITY[self.quantity]:
            raise ValueError(f"{self.quantity} takes {self._ARITY[self.quantity]} label groups")
        parts = tuple((p,) if isinstance(p, str) else tuple(p) for p in self.parts)
        _disjoint(*parts)
        object.__setattr__(self, "parts", parts)

    def evaluate(self, rho: DensityOperator) -> float:
        ent = MarginalEntropies(rho)
        if self.quantity == "entropy":
            return ent.H(self.parts[0])
        return {
            "cond_entropy": ent.cond_entropy,
            "mutual": ent.mutual,
            "cond_mutual": ent.cond_mutual,
            "coherent": ent.coherent,
        }[self.quantity](*self.parts)
