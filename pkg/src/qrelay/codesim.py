"""Desk-scale coding primitives: typical sets and projectors, the square-root
measurement decoder for random classical codes over a classical-quantum
channel, and the gentle-measurement check.

Error probabilities are exact trace formulas.  Randomness only enters
through codebook sampling, which is driven by a seeded numpy generator.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateCodebookError, DimensionCapError, ValidationError
from .entropy import shannon_entropy, von_neumann_entropy
from .qlin import DensityOperator, check_dim, hermitize, kron_all, permute_factors

SEQUENCE_CAP = 2 ** 14
OUTPUT_DIM_CAP = 2 ** 8
SUPPORT_CUTOFF = 1e-12
BOUND_SLACK = 1e-12
LAMBDA_TOL = 1e-9


@dataclass(frozen=True)
class TypeProfile:
    """Letter counts N(a|xⁿ) of a sequence over ``range(alphabet)``."""

    alphabet: int
    counts: tuple

    def __post_init__(self):
        if len(self.counts) != self.alphabet or min(self.counts, default=0) < 0:
            raise ValueError(f"counts {self.counts} do not fit an alphabet of size {self.alphabet}")

    @classmethod
    def of(cls, seq: Sequence[int], alphabet: int) -> "TypeProfile":
        c = Counter(seq)
        return cls(alphabet, tuple(c.get(a, 0) for a in range(alphabet)))

    @property
    def n(self) -> int:
        return sum(self.counts)

    def distribution(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / max(self.n, 1)

    def is_typical(self, p: np.ndarray, delta: float) -> bool:
        return bool(np.all(np.abs(p - self.distribution()) <= delta * p + 1e-12))


def _pmf(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-9:
        raise ValidationError(f"not a probability vector: {p}", invariant="pmf")
    return np.clip(p, 0.0, None)


def typical_set(p_X, n: int, delta: float) -> list:
    """All δ-typical sequences of length n, in lexicographic order."""
    p = _pmf(p_X)
    if n < 0 or delta < 0:
        raise ValueError("n and delta must be nonnegative")
    if p.size ** n > SEQUENCE_CAP:
        raise DimensionCapError(f"{p.size}^{n} sequences exceed the enumeration cap {SEQUENCE_CAP}")
    good = {}
    out = []
    for seq in itertools.product(range(p.size), repeat=n):
        t = TypeProfile.of(seq, p.size)
        if t.counts not in good:
            good[t.counts] = t.is_typical(p, delta) if n else True
        if good[t.counts]:
            out.append(seq)
    return out


def typicality_epsilon(p_X, n: int, delta: float) -> float:
    """ε_δ(n) = 2 d e^{−n ν δ²}, with ν the smallest nonzero probability."""
    p = _pmf(p_X)
    nu = p[p > 0].min()
    return 2.0 * p.size * math.exp(-n * nu * delta ** 2)


@dataclass(frozen=True, eq=False)
class TypicalProjector:
    """Projector onto the δ-typical eigen-sequences of an average state.

    The construction checks the three typicality properties and stores the
    measured quantities next to their analytic limits.
    """

    probs: np.ndarray
    basis: np.ndarray
    n: int
    delta: float
    sequences: tuple
    matrix: np.ndarray
    weight: float
    weight_floor: float
    rank_limit: float
    sandwich: float
    sandwich_limit: float

    @property
    def rank(self) -> int:
        return len(self.sequences)

    @property
    def entropy(self) -> float:
        return shannon_entropy(self.probs)


def _seq_basis(basis: np.ndarray, seqs: Sequence[tuple]) -> np.ndarray:
    """Columns |x_1⟩⊗...⊗|x_n⟩ for each sequence."""
    cols = []
    for s in seqs:
        v = np.ones(1, dtype=complex)
        for a in s:
            v = np.kron(v, basis[:, a])
        cols.append(v)
    return np.stack(cols, axis=1)


def _typical_from_spectrum(probs: np.ndarray, basis: np.ndarray, n: int,
                           delta: float) -> TypicalProjector:
    d = basis.shape[0]
    check_dim(d ** n, "typical projector")
    seqs = typical_set(probs, n, delta)
    if seqs:
        vecs = _seq_basis(basis, seqs)
        mat = vecs @ vecs.conj().T
        seq_probs = np.array([np.prod(probs[list(s)]) for s in seqs])
    else:
        mat = np.zeros((d ** n, d ** n), dtype=complex)
        seq_probs = np.zeros(0)
    h = shannon_entropy(probs)
    weight = float(seq_probs.sum())
    floor = 1.0 - typicality_epsilon(probs, n, delta)
    rank_limit = 2.0 ** (n * (1 + delta) * h)
    sandwich = float(seq_probs.max()) if seq_probs.size else 0.0
    sandwich_limit = 2.0 ** (-n * (1 - delta) * h)
    if weight < floor - BOUND_SLACK:
        raise ValidationError(f"typical weight {weight:.6g} below 1 - eps = {floor:.6g}",
                              invariant="typical-weight", residual=floor - weight)
    if len(seqs) > rank_limit * (1 + BOUND_SLACK):
        raise ValidationError(f"typical rank {len(seqs)} above {rank_limit:.6g}",
                              invariant="typical-rank", residual=len(seqs) - rank_limit)
    if sandwich > sandwich_limit * (1 + BOUND_SLACK):
        raise ValidationError(f"sandwich norm {sandwich:.6g} above {sandwich_limit:.6g}",
                              invariant="typical-sandwich", residual=sandwich - sandwich_limit)
    mat.setflags(write=False)
    return TypicalProjector(probs, basis, n, delta, tuple(seqs), mat, weight, floor,
                            rank_limit, sandwich, sandwich_limit)


def _as_matrix(state) -> np.ndarray:
    if isinstance(state, DensityOperator):
        return state.matrix
    return np.asarray(state, dtype=complex)


def average_state(p_X, states: Sequence) -> np.ndarray:
    p = _pmf(p_X)
    mats = [_as_matrix(s) for s in states]
    if len(mats) != p.size:
        raise ValidationError(f"{len(mats)} states for {p.size} letters", invariant="shape")
    return sum(w * m for w, m in zip(p, mats))


def typical_projector(ensemble, n: int, delta: float) -> TypicalProjector:
    """Typical projector of ρ^{⊗n} in the eigenbasis of ρ.

    ``ensemble`` is either a single state ρ or a pair ``(p_X, states)``, in
    which case ρ is the ensemble average.
    """
    if isinstance(ensemble, tuple) and len(ensemble) == 2:
        rho = average_state(*ensemble)
    else:
        rho = _as_matrix(ensemble)
    lam, vecs = np.linalg.eigh(hermitize(rho))
    lam = np.clip(lam, 0.0, None)
    lam = lam / lam.sum()
    return _typical_from_spectrum(lam, vecs, n, delta)


def conditional_typical_projector(states: Sequence, xn: Sequence[int], delta: float) -> np.ndarray:
    """Π(ω|xⁿ): the typical projector of ρ_a on the positions where x_i = a, for every a."""
    n = len(xn)
    mats = [_as_matrix(s) for s in states]
    d = mats[0].shape[0]
    if d ** n > OUTPUT_DIM_CAP:
        raise DimensionCapError(f"output dimension {d}^{n} exceeds the cap {OUTPUT_DIM_CAP}")
    blocks, order = [], []
    for a in sorted(set(xn)):
        idx = [i for i, x in enumerate(xn) if x == a]
        blocks.append(typical_projector(mats[a], len(idx), delta).matrix)
        order.extend(idx)
    grouped = kron_all(blocks)
    # factor k of ``grouped`` is position order[k]; move it back in place
    inverse = [order.index(i) for i in range(n)]
    return permute_factors(grouped, [d] * n, inverse)


def product_state(states: Sequence[np.ndarray], xn: Sequence[int]) -> np.ndarray:
    return kron_all([states[x] for x in xn])


def _psd_inverse_sqrt(s: np.ndarray) -> tuple:
    lam, vecs = np.linalg.eigh(hermitize(s))
    keep = lam > SUPPORT_CUTOFF * max(1.0, lam.max(initial=0.0))
    inv = np.zeros_like(lam)
    inv[keep] = lam[keep] ** -0.5
    return (vecs * inv) @ vecs.conj().T, int(keep.sum())


def build_sqrt_measurement(word_projs: Sequence[np.ndarray],
                           code_proj: np.ndarray | None = None) -> np.ndarray:
    """Square-root measurement Λ_m = S^{-1/2} Π Π_m Π S^{-1/2}, S = Σ_m Π Π_m Π.

    The inverse square root is taken on the support of S.  The last element
    of the returned stack completes the POVM.
    """
    words = [np.asarray(w, dtype=complex) for w in word_projs]
    d = words[0].shape[0]
    pi = np.eye(d) if code_proj is None else np.asarray(code_proj, dtype=complex)
    upsilon = [pi @ w @ pi for w in words]
    s = sum(upsilon)
    s_inv, rank = _psd_inverse_sqrt(s)
    if rank == 0:
        raise DegenerateCodebookError("the square-root measurement operator S has empty support")
    elems = [hermitize(s_inv @ u @ s_inv) for u in upsilon]
    elems.append(hermitize(np.eye(d) - sum(elems)))
    return np.stack(elems)


def check_povm_stack(elems: np.ndarray, tol: float = 1e-8) -> float:
    """Completeness residual of a POVM stack; raises if an element is not PSD."""
    low = min(np.linalg.eigvalsh(e).min() for e in elems)
    if low < -LAMBDA_TOL:
        raise ValidationError(f"POVM element eigenvalue {low:.3e}", invariant="positive",
                              residual=float(-low))
    res = float(np.abs(elems.sum(axis=0) - np.eye(elems.shape[1])).max())
    if res > tol:
        raise ValidationError(f"POVM completeness residual {res:.3e}", invariant="completeness",
                              residual=res)
    return res


@dataclass(frozen=True, eq=False)
class CodebookInstance:
    rate: float
    n: int
    codewords: np.ndarray
    states: tuple
    decoder: np.ndarray

    @property
    def size(self) -> int:
        return len(self.codewords)

    def success_probabilities(self) -> np.ndarray:
        return np.array([np.real(np.trace(self.decoder[m] @ self.states[m]))
                         for m in range(self.size)])

    def average_error(self) -> float:
        return float(np.clip(1.0 - self.success_probabilities().mean(), 0.0, 1.0))


@dataclass(frozen=True)
class PackingConstants:
    """Packing constants measured over every sequence of positive probability."""

    eps_code: float
    eps_word: float
    h: float
    H: float

    @property
    def eps(self) -> float:
        return max(self.eps_code, self.eps_word)

    def bound(self, m: int) -> float:
        e = self.eps
        return 2 * (e + 2 * math.sqrt(e)) + 4 * m * 2.0 ** (-(self.H - self.h))


@dataclass(frozen=True)
class SimulationResult:
    seed: int
    n: int
    rate: float
    delta: float
    size: int
    errors: tuple
    degenerate: tuple
    constants: PackingConstants
    bound: float

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors))

    def rows(self) -> list:
        c = self.constants
        return [{"seed": self.seed, "n": self.n, "R": self.rate, "delta": self.delta,
                 "M": self.size, "trial": t, "error": e, "degenerate": bool(g),
                 "eps": c.eps, "h": c.h, "H": c.H, "bound": self.bound}
                for t, (e, g) in enumerate(zip(self.errors, self.degenerate))]


def codebook_size(rate: float, n: int) -> int:
    """M = ⌈2^{nR}⌉, robust to rounding when nR is an integer."""
    return max(1, math.ceil(2.0 ** (n * rate) - 1e-9))


def _measure_constants(p: np.ndarray, mats: Sequence[np.ndarray], n: int, delta: float,
                       code: TypicalProjector, word_cache: dict) -> PackingConstants:
    support = [a for a in range(p.size) if p[a] > 0]
    eps_code = eps_word = 0.0
    h = -np.inf
    for xn in itertools.product(support, repeat=n):
        rho = product_state(mats, xn)
        w = word_cache.setdefault(xn, conditional_typical_projector(mats, xn, delta))
        eps_code = max(eps_code, 1.0 - float(np.real(np.trace(code.matrix @ rho))))
        eps_word = max(eps_word, 1.0 - float(np.real(np.trace(w @ rho))))
        tr = float(np.real(np.trace(w)))
        h = max(h, math.log2(tr) if tr > 0.5 else -np.inf)
    rho_n = kron_all([average_state(p, mats)] * n)
    top = np.linalg.eigvalsh(hermitize(code.matrix @ rho_n @ code.matrix)).max()
    big_h = -math.log2(top) if top > 0 else np.inf
    return PackingConstants(max(eps_code, 0.0), max(eps_word, 0.0), max(h, 0.0), big_h)


def simulate_direct_code(table: Sequence, p_X, rate: float, n: int, delta: float,
                         trials: int, seed: int) -> SimulationResult:
    """Sample ``trials`` random codebooks and decode each with the square-root measurement.

    ``table[x]`` is the channel output for input letter x.  Codewords are
    drawn i.i.d. from p_X; the decoder uses the typical projector of the
    average output as code projector and conditional typical projectors as
    codeword projectors.  A codebook whose decoder has no support counts as
    a total failure and is flagged degenerate.
    """
    p = _pmf(p_X)
    mats = [_as_matrix(s) for s in table]
    if len(mats) != p.size:
        raise ValidationError(f"{len(mats)} outputs for {p.size} letters", invariant="shape")
    d = mats[0].shape[0]
    if d ** n > OUTPUT_DIM_CAP:
        raise DimensionCapError(f"output dimension {d}^{n} exceeds the cap {OUTPUT_DIM_CAP}")
    code = typical_projector((p, mats), n, delta)
    words: dict = {}
    consts = _measure_constants(p, mats, n, delta, code, words)
    m = codebook_size(rate, n)
    rng = np.random.default_rng(seed)
    errors, degenerate = [], []
    for _ in range(trials):
        cw = rng.choice(p.size, size=(m, n), p=p)
        try:
            cb = make_codebook(rate, cw, mats, code.matrix, words, delta)
            errors.append(cb.average_error())
            degenerate.append(False)
        except DegenerateCodebookError:
            errors.append(1.0)
            degenerate.append(True)
    return SimulationResult(seed, n, float(rate), float(delta), m, tuple(errors),
                            tuple(degenerate), consts, consts.bound(m))


def make_codebook(rate: float, codewords: np.ndarray, table: Sequence, code_proj: np.ndarray,
                  word_cache: dict | None = None, delta: float = 0.0) -> CodebookInstance:
    cache = {} if word_cache is None else word_cache
    mats = [_as_matrix(s) for s in table]
    keys = [tuple(int(a) for a in row) for row in codewords]
    projs = [cache.setdefault(k, conditional_typical_projector(mats, k, delta)) for k in keys]
    states = tuple(product_state(mats, k) for k in keys)
    decoder = build_sqrt_measurement(projs, code_proj)
    return CodebookInstance(float(rate), codewords.shape[1], np.asarray(codewords), states, decoder)


@dataclass(frozen=True)
class GentleResult:
    success_prob: float
    delta: float
    trace_distance: float
    bound: float
    holds: bool
    post_state: np.ndarray = field(repr=False)


def gentle_measurement_check(rho, lam) -> GentleResult:
    """Disturbance ‖ρ − ρ̃‖₁ of ρ̃ = √Λ ρ √Λ / tr(Λρ) against 2√δ, δ = 1 − tr(Λρ)."""
    r = _as_matrix(rho)
    lam = hermitize(np.asarray(lam, dtype=complex))
    ev, vecs = np.linalg.eigh(lam)
    if ev.min() < -LAMBDA_TOL or ev.max() > 1 + LAMBDA_TOL:
        bad = max(-ev.min(), ev.max() - 1)
        raise ValidationError(f"measurement operator spectrum [{ev.min():.3g}, {ev.max():.3g}] "
                              "is outside [0, 1]", invariant="effect", residual=float(bad))
    root = (vecs * np.sqrt(np.clip(ev, 0.0, 1.0))) @ vecs.conj().T
    success = float(np.real(np.trace(lam @ r)))
    if success <= 0:
        raise ValidationError("outcome has zero probability", invariant="effect", residual=0.0)
    post = root @ r @ root / success
    dist = float(np.abs(np.linalg.eigvalsh(hermitize(r - post))).sum())
    delta = min(max(1.0 - success, 0.0), 1.0)
    bound = 2.0 * math.sqrt(delta)
    return GentleResult(success, delta, dist, bound, dist <= bound + 1e-10, post)


def holevo_of_table(p_X, table: Sequence) -> float:
    p = _pmf(p_X)
    mats = [_as_matrix(s) for s in table]
    return von_neumann_entropy(average_state(p, mats)) - float(
        sum(w * von_neumann_entropy(m) for w, m in zip(p, mats) if w > 0))
