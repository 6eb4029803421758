"""Random objects for tests, all driven by explicit numpy generators."""
import numpy as np
from hypothesis import strategies as st

from qrelay import qlin


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state(rng, labels, rank=None):
    labels = qlin.as_labels(labels)
    dim = int(np.prod([l.dim for l in labels]))
    return qlin.density_operator(random_density(rng, dim, rank), labels)


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus(rng, din, dout, n_kraus=2):
    """Kraus operators cut from a random isometry C^din -> C^dout ⊗ C^n."""
    z = rng.normal(size=(dout * n_kraus, din)) + 1j * rng.normal(size=(dout * n_kraus, din))
    v, _ = np.linalg.qr(z)
    return v.reshape(n_kraus, dout, din)


def random_channel(rng, in_labels, out_labels, n_kraus=2):
    ins, outs = qlin.as_labels(in_labels), qlin.as_labels(out_labels)
    din = int(np.prod([l.dim for l in ins]))
    dout = int(np.prod([l.dim for l in outs]))
    return qlin.quantum_channel(random_kraus(rng, din, dout, n_kraus), ins, outs)


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
small_dims = st.integers(min_value=1, max_value=3)


def random_povm(rng, labels, outcomes):
    labels = qlin.as_labels(labels)
    dim = int(np.prod([l.dim for l in labels]))
    v = random_kraus(rng, dim, 2, outcomes)  # (outcomes, 2, dim) isometry blocks
    return qlin.POVM(labels, np.stack([k.conj().T @ k for k in v]), ()).check()


def random_hadamard(rng, outcomes=None, b_dim=2):
    from qrelay.channels import HadamardSpec, make_hadamard_relay

    ny = int(rng.integers(2, 5)) if outcomes is None else outcomes
    pov = random_povm(rng, [("A", 2), ("D", 2)], ny)
    prep = [random_state(rng, [("B", b_dim)]) for _ in range(ny)]
    return make_hadamard_relay(HadamardSpec(pov, prep))
