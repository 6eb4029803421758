import json

import numpy as np
import pytest
from hypothesis import given
from numpy.testing import assert_allclose

from helpers import random_hadamard, random_unitary, seeds
from qrelay import channels, qlin
from qrelay.channels import (RelayChannel, is_classical_quantum, is_degraded, is_hadamard, is_orc,
                             make_bitpipe_hadamard, make_bsc_cq, make_depolarizing_relay,
                             make_wired_relay, orc_factors, relay_from_json, relay_to_json)
from qrelay.errors import LabelError, StructureError, ValidationError


class TestRoles:
    def test_roles_must_cover_inputs(self):
        ch = make_wired_relay().channel
        with pytest.raises((StructureError, LabelError)):
            RelayChannel(ch, {"sender_in": ("A1",), "relay_in": ("D",), "dest_out": ("B1", "B2"),
                              "relay_out": ("E",)})

    def test_accessors(self):
        ch = make_depolarizing_relay(0.1, 0.2)
        assert ch.sender == ("A",) and ch.relay_in == "D" and ch.relay_out == "E"
        assert ch.dest == ("B1", "B2") and ch.has_split


class TestDepolarizing:
    def test_range_checked(self):
        with pytest.raises(ValidationError):
            make_depolarizing_relay(1.2, 0.1)

    def test_relay_marginal_is_depolarizing(self, rng):
        q = 0.3
        ch = make_depolarizing_relay(0.1, q)
        _, p = orc_factors(ch)
        rho = qlin.density_operator(np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]]), [("D", 2)])
        out = qlin.apply_channel(p, rho)
        assert_allclose(out.matrix, (1 - q) * rho.matrix + q * np.eye(2) / 2, atol=1e-14)

    def test_broadcast_twirl(self):
        # |x⟩⟨x| ⊗ θ₀ twirled by {II, XX, YY, ZZ}: weight θ₀(a)/2 on |x a⟩ and on |x̄ ā⟩
        p = 0.2
        theta = [1 - p, p]
        m, _ = orc_factors(make_depolarizing_relay(p, 0.0))
        for x in range(2):
            out = qlin.apply_channel(m, qlin.basis_state(x, [("A", 2)]))
            expect = np.zeros((2, 2))
            for a in range(2):
                expect[x, a] += theta[a] / 2
                expect[1 - x, 1 - a] += theta[a] / 2
            assert_allclose(out.matrix, np.diag(expect.ravel()), atol=1e-14)

    def test_orc(self):
        assert is_orc(make_depolarizing_relay(0.1, 0.3)).orc


class TestClassifiers:
    def test_wired_relay(self):
        ch = make_wired_relay()
        deg = is_degraded(ch)
        assert not deg.degraded and deg.residual >= 0.1
        assert is_orc(ch).orc

    def test_bitpipe_hadamard(self):
        ch = make_bitpipe_hadamard()
        assert is_degraded(ch).residual <= 1e-8
        assert is_hadamard(ch)

    def test_swap_breaks_orc(self):
        # exchange the qubit A1 with the relay input D ahead of the wired relay
        ch = make_wired_relay()
        swap = qlin.permutation_matrix([2, 2], [1, 0])
        mixed = channels.with_input_unitary(ch, swap, ["A1", "D"])
        res = is_orc(mixed)
        assert not res.orc and res.distance > 0.1

    def test_orc_needs_split(self):
        with pytest.raises(StructureError):
            is_orc(make_bitpipe_hadamard())

    def test_classical_quantum(self):
        assert is_classical_quantum(make_bsc_cq(0.1))
        assert not is_classical_quantum(make_wired_relay())

    @given(seeds)
    def test_random_hadamard_degraded(self, seed):
        ch = random_hadamard(np.random.default_rng(seed))
        assert is_degraded(ch).residual <= 1e-6
        assert channels.relay_output_is_classical(ch)

    def test_local_unitary_on_relay_output_keeps_degradedness(self, rng):
        # a unitary on D before a degraded channel leaves the Markov residual unchanged
        ch = random_hadamard(rng)
        u = random_unitary(rng, 2)
        moved = channels.with_input_unitary(ch, u, ["D"])
        assert is_degraded(moved).residual <= 1e-6


class TestJson:
    def test_templates(self):
        assert relay_from_json({"template": "bsc_cq", "flip": 0.1}).tags["cq"]
        ch = relay_from_json({"template": "depolarizing_relay", "p": 0.1, "q": 0.3}, {"q": 0.4})
        assert ch.channel.dout == 8

    def test_unknown_template(self):
        with pytest.raises(ValidationError):
            relay_from_json({"template": "nope"})

    def test_explicit_roundtrip(self):
        ch = make_wired_relay()
        back = relay_from_json(json.loads(json.dumps(relay_to_json(ch))))
        assert back.roles == ch.roles
        assert_allclose(back.channel.kraus, ch.channel.kraus)

    def test_explicit_needs_roles(self):
        doc = relay_to_json(make_wired_relay())
        doc.pop("roles")
        with pytest.raises(StructureError):
            relay_from_json(doc)

    def test_cq_table(self):
        doc = {"template": "cq_table",
               "table": {"0,0": {"labels": [["B", 2], ["E", 1]], "diag": [1, 0]},
                         "1,0": {"labels": [["B", 2], ["E", 1]], "diag": [0, 1]}}}
        ch = relay_from_json(doc)
        assert is_classical_quantum(ch)
