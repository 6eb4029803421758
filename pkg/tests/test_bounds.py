import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from numpy.testing import assert_allclose

from helpers import random_channel, random_state, seeds
from qrelay import bounds, qlin
from qrelay.bounds import (AFConfig, Ensemble, MFConfig, depolarizing_mf_config, eval_af,
                           eval_depolarizing_closed_form, eval_full_df, eval_mf, eval_pdf,
                           wired_af_config, wired_pdf_ensemble, product_ensemble)
from qrelay.channels import (RelayChannel, make_bitpipe_hadamard, make_bsc_cq,
                             make_depolarizing_relay, make_wired_relay)
from qrelay.entropy import binary_entropy, holevo_quantity
from qrelay.errors import NonProductStateError, StructureError, ValidationError


def shannon(p):
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def classical_mf_oracle(p, q, alpha):
    """Reference measure-forward quantities from an explicit joint pmf of (x0, x1, b1, b2, y1, z1).

    With computational inputs the twirl leaves B1 = x0 ⊕ c and E = a ⊕ c, with
    c a fair coin and a ~ (1-p, p); B2 is x1 flipped w.p. q/2; Y1 = E and
    Z1 = Y1 ⊕ Bern(alpha).
    """
    joint = np.zeros((2,) * 6)
    for x0, x1, a, c, f, g in itertools.product(range(2), repeat=6):
        w = 0.25 * (p if a else 1 - p) * 0.5 * (q / 2 if f else 1 - q / 2) \
            * (alpha if g else 1 - alpha)
        y1 = a ^ c
        joint[x0, x1, x0 ^ c, x1 ^ f, y1, y1 ^ g] += w
    axes = dict(x0=0, x1=1, b1=2, b2=3, y1=4, z1=5)

    def h(*names):
        keep = sorted(axes[n] for n in names)
        drop = tuple(i for i in range(6) if i not in keep)
        return shannon(joint.sum(axis=drop))

    rate = h("z1", "b1", "b2", "x1") + h("x0", "x1") - h("x0", "z1", "b1", "b2", "x1") - h("x1")
    lhs = h("z1", "x1", "b1", "b2") + h("y1", "x1", "b1", "b2") \
        - h("z1", "y1", "x1", "b1", "b2") - h("x1", "b1", "b2")
    rhs = h("x1") + h("b1", "b2") - h("x1", "b1", "b2")
    return rate, lhs, rhs


def random_relay(rng, n_kraus=2):
    ch = random_channel(rng, [("A", 2), ("D", 2)], [("B", 2), ("E", 2)], n_kraus=n_kraus)
    return RelayChannel(ch, {"sender_in": ("A",), "relay_in": ("D",), "dest_out": ("B",),
                             "relay_out": ("E",)})


def random_pmf(rng, n):
    return rng.dirichlet(np.ones(n))


class TestMeasureForward:
    @pytest.mark.parametrize("p,q", [(0.1, 0.3), (0.0, 0.0), (0.5, 0.4), (0.3, 1.0), (0.2, 0.0)])
    def test_depolarizing_mf_closed_form(self, p, q):
        rec = eval_mf(make_depolarizing_relay(p, q), depolarizing_mf_config(q))
        assert rec.rate == pytest.approx(eval_depolarizing_closed_form(p, q), abs=1e-9)
        assert abs(rec.lhs_constraint - rec.rhs_constraint) <= 1e-9
        assert rec.feasible

    @pytest.mark.parametrize("p,q,alpha", [(0.1, 0.3, 0.15), (0.25, 0.4, 0.05), (0.3, 0.6, 0.4)])
    def test_against_classical_oracle(self, p, q, alpha):
        rec = eval_mf(make_depolarizing_relay(p, q), depolarizing_mf_config(q, alpha))
        rate, lhs, rhs = classical_mf_oracle(p, q, alpha)
        assert rec.rate == pytest.approx(rate, abs=1e-10)
        assert rec.lhs_constraint == pytest.approx(lhs, abs=1e-10)
        assert rec.rhs_constraint == pytest.approx(rhs, abs=1e-10)

    def test_infeasible_flagged(self):
        # a noiseless compressor on a noisy relay link asks more than the link delivers
        rec = eval_mf(make_depolarizing_relay(0.1, 0.6), depolarizing_mf_config(0.6, alpha=0.0))
        assert not rec.feasible
        assert rec.lhs_constraint > rec.rhs_constraint

    def test_closed_form_values(self):
        assert eval_depolarizing_closed_form(0.25, 0.4) == pytest.approx(1 - binary_entropy(0.35))
        assert eval_depolarizing_closed_form(0.5, 0.7) == pytest.approx(0.0, abs=1e-15)
        with pytest.raises(ValidationError):
            eval_depolarizing_closed_form(-0.1, 0.2)

    def test_compressor_shape_checked(self):
        cfg = depolarizing_mf_config(0.2)
        with pytest.raises(ValidationError):
            MFConfig(cfg.ens0, cfg.ens1, cfg.relay_povm, np.ones((2, 2, 1)) * 0.5)


class TestDecodeForward:
    def test_wired_pdf(self):
        rec = eval_pdf(make_wired_relay(), wired_pdf_ensemble())
        assert rec.rate == pytest.approx(2.0, abs=1e-9)
        assert rec.term_multicast == pytest.approx(2.0, abs=1e-9)
        assert rec.term_relay_plus_direct == pytest.approx(2.0, abs=1e-9)

    def test_full_df_on_wired_relay_is_limited(self):
        # the destination sees only two qubits, so nothing exceeds 2
        ens = wired_pdf_ensemble()
        full = eval_full_df(make_wired_relay(), ens.restricted(["X0", "X1"]))
        assert full.rate <= 2.0 + 1e-9

    def test_requires_u(self):
        ens = wired_pdf_ensemble().restricted(["X0", "X1"])
        with pytest.raises((ValidationError, StructureError)):
            eval_pdf(make_wired_relay(), ens)

    def test_hadamard_capacity_bitpipe(self):
        ens = product_ensemble({"X0": [0.5, 0.5], "X1": [1.0]},
                               {"X0": [qlin.basis_state(i, [("A", 2)]) for i in range(2)],
                                "X1": [qlin.basis_state(0, [("D", 2)])]})
        rec = bounds.eval_hadamard_capacity(make_bitpipe_hadamard(), ens)
        assert rec.rate == pytest.approx(1.0, abs=1e-12)

    def test_hadamard_capacity_rejects_other_channels(self):
        ens = wired_pdf_ensemble().restricted(["X0", "X1"])
        with pytest.raises(StructureError):
            bounds.eval_hadamard_capacity(make_wired_relay(), ens)

    @given(seeds)
    def test_reductions(self, seed):
        rng = np.random.default_rng(seed)
        ch = random_relay(rng, n_kraus=int(rng.integers(1, 4)))
        theta = [random_state(rng, [("A", 2)]) for _ in range(2)]
        zeta = [random_state(rng, [("D", 2)])]
        p0 = random_pmf(rng, 2)
        # trivial U: PD-F is the Holevo quantity of the direct link
        ens = Ensemble(("U", "X0", "X1"), p0.reshape(1, 2, 1), {"X0": theta, "X1": zeta})
        outs = [qlin.partial_trace(ch.apply(qlin.tensor(t, zeta[0])), ["B"]) for t in theta]
        assert eval_pdf(ch, ens).rate == pytest.approx(holevo_quantity(p0, outs), abs=1e-10)
        # U = X0: PD-F collapses to full decode-forward
        zeta2 = zeta + [random_state(rng, [("D", 2)])]
        joint = np.multiply.outer(p0, random_pmf(rng, 2))
        pmf = np.zeros((2, 2, 2))
        for u in range(2):
            pmf[u, u, :] = joint[u]
        ens = Ensemble(("U", "X0", "X1"), pmf, {"X0": theta, "X1": zeta2})
        full = eval_full_df(ch, Ensemble(("X0", "X1"), joint, {"X0": theta, "X1": zeta2}))
        assert eval_pdf(ch, ens).rate == pytest.approx(full.rate, abs=1e-10)

    def test_terms_bounded_by_multicast(self, rng):
        ch = random_relay(rng)
        theta = [random_state(rng, [("A", 2)]) for _ in range(2)]
        zeta = [random_state(rng, [("D", 2)]) for _ in range(2)]
        pmf = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
        rec = eval_pdf(ch, Ensemble(("U", "X0", "X1"), pmf, {"X0": theta, "X1": zeta}))
        assert rec.rate == pytest.approx(min(rec.term_multicast, rec.term_relay_plus_direct))


class TestEnsembles:
    def test_pmf_validated(self):
        with pytest.raises(ValidationError):
            Ensemble(("X0",), [0.6, 0.6])

    def test_joint_must_be_product(self):
        bell = qlin.pure_state(np.array([1, 0, 0, 1]) / math.sqrt(2), [("A", 2), ("D", 2)])
        with pytest.raises(NonProductStateError):
            bounds.ensemble_from_joint(("X0", "X1"), [[1.0]], {(0, 0): bell}, ["A"], ["D"])

    def test_joint_split(self, rng):
        a, d = random_state(rng, [("A", 2)]), random_state(rng, [("D", 2)])
        ens = bounds.ensemble_from_joint(("X0", "X1"), [[1.0]], {(0, 0): qlin.tensor(a, d)},
                                         ["A"], ["D"])
        assert_allclose(ens.states["X0"][0].matrix, a.matrix, atol=1e-14)

    def test_marginal_order(self, rng):
        pmf = rng.dirichlet(np.ones(6)).reshape(2, 3)
        ens = Ensemble(("U", "X0"), pmf)
        assert_allclose(ens.marginal(["X0", "U"]), pmf.T)


class TestAssistForward:
    def test_wired_relay_rate_two(self):
        rec = eval_af(make_wired_relay(), wired_af_config())
        assert rec.rate == pytest.approx(2.0, abs=1e-9)
        assert_allclose([rec.t_relay_decode, rec.t_ea_full, rec.t_ea_limited], [2, 2, 2],
                        atol=1e-9)
        assert rec.q_assist == pytest.approx(1.0, abs=1e-9)

    def test_pure_states_required(self):
        cfg = wired_af_config()
        mixed = [qlin.maximally_mixed(s.labels) for s in cfg.ens2.states["X2"]]
        with pytest.raises(ValidationError):
            AFConfig(cfg.ens1, Ensemble(("X2",), cfg.ens2.pmf, {"X2": mixed}))

    def test_needs_orc(self):
        with pytest.raises(StructureError):
            eval_af(make_bitpipe_hadamard(), wired_af_config())

    def test_negative_q_and_floor(self):
        # the depolarizing broadcast at full noise cannot carry coherent information
        ch = make_depolarizing_relay(0.5, 0.5)
        g = [qlin.pure_state(np.array([1, 0, 0, 1]) / math.sqrt(2), [("G0", 2), ("A", 2)])]
        ens1 = Ensemble(("X1",), [1.0], {"X1": [qlin.tensor(g[0], qlin.basis_state(
            0, [("G1", 1)]))]})
        ens2 = Ensemble(("X2",), [1.0], {"X2": [qlin.pure_state(
            np.array([1, 0, 0, 1]) / math.sqrt(2), [("G2", 2), ("D", 2)])]})
        raw = eval_af(ch, AFConfig(ens1, ens2))
        floored = eval_af(ch, AFConfig(ens1, ens2, floor_q=True))
        assert raw.q_assist < 0
        assert floored.t_ea_limited >= raw.t_ea_limited
        assert raw.rate >= 0.0


class TestCapacities:
    @pytest.mark.parametrize("flip", [0.0, 0.1, 0.25, 0.5])
    def test_bsc_holevo_capacity(self, flip):
        states = [np.diag([1 - flip, flip]), np.diag([flip, 1 - flip])]
        cap, pmf = bounds.cq_holevo_capacity(states)
        assert cap == pytest.approx(1 - binary_entropy(flip), abs=1e-9)

    def test_bsc_capacity_matches_grid_oracle(self):
        # exhaustive pmf grid at step 1e-3
        flip = 0.1
        grid = np.linspace(0, 1, 1001)
        vals = [binary_entropy(bounds.bconv(t, flip)) - binary_entropy(flip) for t in grid]
        cap, _ = bounds.eval_anti_degraded_capacity(make_bsc_cq(flip))[:2]
        assert cap == pytest.approx(max(vals), abs=1e-9)

    def test_anti_degraded_needs_cq(self):
        with pytest.raises(StructureError):
            bounds.eval_anti_degraded_capacity(make_wired_relay())


class TestConfigJson:
    def test_templates(self):
        kind, cfg = bounds.config_from_json({"template": "depolarizing_mf", "q": 0.3})
        assert kind == "mf" and cfg.compressor[0, 0, 1] == pytest.approx(0.15)
        assert bounds.config_from_json({"template": "wired_af"})[0] == "af"

    def test_depolarizing_mf_needs_q(self):
        with pytest.raises(ValidationError):
            bounds.config_from_json({"template": "depolarizing_mf"})

    def test_explicit_ensemble_roundtrip(self):
        ens = wired_pdf_ensemble()
        kind, back = bounds.config_from_json({"bound": "pdf",
                                              "ensemble": bounds.ensemble_to_json(ens)})
        assert kind == "pdf"
        assert eval_pdf(make_wired_relay(), back).rate == pytest.approx(2.0, abs=1e-9)

    def test_unknown_bound(self):
        with pytest.raises(ValidationError):
            bounds.config_from_json({"bound": "cutset"})
