import functools
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from helpers import seeds
from qrelay import bounds, optimizer, qlin
from qrelay.channels import make_bsc_cq, make_depolarizing_relay
from qrelay.entropy import binary_entropy
from qrelay.errors import InfeasibleError, ValidationError
from qrelay.optimizer import OptimizerConfig, ParamSpace, maximize, parameterize


@dataclass(frozen=True)
class Stub:
    rate: float
    lhs_constraint: float
    rhs_constraint: float


class TestParameterization:
    def test_zero_pmf_block_is_uniform(self):
        assert_allclose(optimizer.softmax(np.zeros(4)), np.full(4, 0.25))

    def test_zero_pure_block(self):
        assert_allclose(optimizer.raw_to_pure(np.zeros(4), 2), [1, 0])

    @given(seeds, st.integers(1, 4))
    def test_pure_normalized(self, seed, dim):
        v = optimizer.raw_to_pure(np.random.default_rng(seed).normal(size=2 * dim), dim)
        assert np.linalg.norm(v) == pytest.approx(1.0)

    @given(seeds, st.integers(1, 3))
    def test_mixed_is_state(self, seed, dim):
        rho = optimizer.raw_to_mixed(np.random.default_rng(seed).normal(size=2 * dim * dim), dim)
        qlin.density_operator(rho, [("A", dim)])

    @given(seeds, st.integers(2, 4))
    def test_povm_complete(self, seed, n):
        raw = np.random.default_rng(seed).normal(size=n * 2 * 4)
        els = optimizer.raw_to_povm(raw, n, 2)
        qlin.POVM(qlin.as_labels([("E", 2)]), els, ()).check()

    @pytest.mark.parametrize("bound", ["full_df", "mf"])
    def test_layout_length(self, bound):
        ch = make_depolarizing_relay(0.1, 0.3)
        space = ParamSpace(bound, ch)
        cfg = parameterize(space, np.zeros(space.n_params()))
        assert cfg is not None
        with pytest.raises(ValidationError):
            parameterize(space, np.zeros(space.n_params() + 1))

    def test_fixed_povm_sets_card(self):
        ch = make_depolarizing_relay(0.1, 0.3)
        space = ParamSpace("mf", ch, card_Y1=5, fixed_povm=qlin.computational_povm([("E", 2)]))
        assert space.card_Y1 == 2

    def test_bad_cards(self):
        with pytest.raises(ValueError):
            ParamSpace("pdf", make_bsc_cq(0.1), card_U=0)
        with pytest.raises(ValueError):
            ParamSpace("cutset", make_bsc_cq(0.1))


class TestMaximize:
    def test_bsc_reaches_capacity(self):
        flip = 0.1
        ch = make_bsc_cq(flip)
        space = ParamSpace("pdf", ch, card_U=1, card_X0=2, card_X1=1)
        res = maximize(functools.partial(bounds.eval_pdf, ch), space,
                       OptimizerConfig(restarts=2, max_evals=2000, seed=3))
        assert res.best_rate == pytest.approx(1 - binary_entropy(flip), abs=1e-4)
        assert res.best_rate <= 1 - binary_entropy(flip) + 1e-12

    def test_deterministic(self):
        ch = make_bsc_cq(0.25)
        space = ParamSpace("pdf", ch, card_U=1, card_X1=1)
        cfg = OptimizerConfig(restarts=2, max_evals=300, seed=42)
        a = maximize(functools.partial(bounds.eval_pdf, ch), space, cfg)
        b = maximize(functools.partial(bounds.eval_pdf, ch), space, cfg)
        assert a.best_rate == b.best_rate
        assert_allclose(a.best_raw, b.best_raw, rtol=0, atol=0)

    def test_restart_streams_independent_of_count(self):
        ch = make_bsc_cq(0.25)
        space = ParamSpace("pdf", ch, card_U=1, card_X1=1)
        ev = functools.partial(bounds.eval_pdf, ch)
        two = maximize(ev, space, OptimizerConfig(restarts=2, max_evals=200, seed=9))
        three = maximize(ev, space, OptimizerConfig(restarts=3, max_evals=200, seed=9))
        assert two.restart_bests == three.restart_bests[:2]

    def test_workers_do_not_change_result(self):
        ch = make_bsc_cq(0.25)
        space = ParamSpace("pdf", ch, card_U=1, card_X1=1)
        ev = functools.partial(bounds.eval_pdf, ch)
        serial = maximize(ev, space, OptimizerConfig(restarts=2, max_evals=200, seed=1))
        pooled = maximize(ev, space, OptimizerConfig(restarts=2, max_evals=200, seed=1, workers=2))
        assert serial.restart_bests == pooled.restart_bests

    def test_infeasible(self):
        space = ParamSpace("pdf", make_bsc_cq(0.1), card_X1=1)
        with pytest.raises(InfeasibleError):
            maximize(lambda cfg: Stub(1.0, 2.0, 1.0), space,
                     OptimizerConfig(restarts=1, max_evals=50))

    def test_only_feasible_points_reported(self):
        ch = make_depolarizing_relay(0.1, 0.3)
        space = ParamSpace("mf", ch, fixed_povm=qlin.computational_povm([("E", 2)]))
        res = maximize(functools.partial(bounds.eval_mf, ch), space,
                       OptimizerConfig(restarts=1, max_evals=400, seed=5))
        assert res.best_record.feasible
        assert res.best_record.lhs_constraint <= res.best_record.rhs_constraint + 1e-9

    def test_larger_u_never_worse_from_embedded_start(self):
        # a card_U = 1 optimum embeds into card_U = 2 by starving the second symbol
        ch = make_depolarizing_relay(0.2, 0.4)
        ev = functools.partial(bounds.eval_pdf, ch)
        small = ParamSpace("pdf", ch, card_U=1)
        res1 = maximize(ev, small, OptimizerConfig(restarts=1, max_evals=600, seed=2))
        big = ParamSpace("pdf", ch, card_U=2)
        n_pmf = small.card_X0 * small.card_X1
        pmf = np.concatenate([res1.best_raw[:n_pmf], np.full(n_pmf, -60.0)])
        start = np.concatenate([pmf, res1.best_raw[n_pmf:]])
        assert ev(parameterize(big, start)).rate == pytest.approx(res1.best_rate, abs=1e-12)
        res2 = maximize(ev, big, OptimizerConfig(restarts=1, max_evals=300, seed=2),
                        initial=[start])
        assert res2.best_rate >= res1.best_rate - 1e-12
