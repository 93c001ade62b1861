"""Training-length throughput optimization."""

import numpy as np
import pytest

from lsrx.als import AlsParams
from lsrx.distributions import ScalarDistribution, WindowSpec
from lsrx.errors import DomainError
from lsrx.throughput import BlockConfig, normalized_capacity, optimize_training

FLAT = ScalarDistribution.point_masses([1.0], [1.0])
EXP = ScalarDistribution.exponential(1.0)


def cdma_config(alpha=0.5, ell=15.0):
    params = AlsParams(alpha=alpha, beta=1.0, eta=2.0, sigma2=0.1, mu=0.0,
                       dist_p=FLAT, dist_h=EXP, window=WindowSpec.rectangular(),
                       s_type="iid", b_type="iid", mode="training")
    return BlockConfig(als_params=params, ell=ell, ebn0_db=10.0,
                       convention="per_chip")


class TestNormalizedCapacity:
    def test_vanishes_as_training_fills_block(self):
        cfg = cdma_config()
        # eta -> ell leaves no data symbols
        assert normalized_capacity(cfg, 0.999 * cfg.ell) < 0.05
        c_mid = normalized_capacity(cfg, 3.0)
        assert c_mid > 10 * normalized_capacity(cfg, 0.9999 * cfg.ell)

    def test_vanishes_at_minimal_training(self):
        # eta -> beta+ with mu=0 sends zeta (and the noise coupling) to
        # divergence, so throughput collapses
        cfg = cdma_config()
        assert normalized_capacity(cfg, 1.0 + 1e-6) == pytest.approx(0.0, abs=1e-6)

    def test_interior_point_positive(self):
        cfg = cdma_config()
        assert normalized_capacity(cfg, 3.0) > 0.5

    def test_eta_domain(self):
        cfg = cdma_config()
        with pytest.raises(DomainError):
            normalized_capacity(cfg, 0.0)
        with pytest.raises(DomainError):
            normalized_capacity(cfg, cfg.ell)

    def test_per_stream_convention(self):
        base = cdma_config()
        per_stream = BlockConfig(als_params=base.als_params, ell=base.ell,
                                 ebn0_db=base.ebn0_db, convention="per_stream")
        c_chip = normalized_capacity(base, 3.0)
        c_stream = normalized_capacity(per_stream, 3.0)
        assert c_chip == pytest.approx(0.5 * c_stream)


class TestOptimizeTraining:
    def test_interior_optimum_and_local_maximality(self):
        cfg = cdma_config()
        res = optimize_training(cfg, grid_points=24)
        assert 1.0 < res.eta_star < cfg.ell
        step = (cfg.ell - 1.0) / 24
        for probe in (res.eta_star - step, res.eta_star + step):
            if 1.0 < probe < cfg.ell:
                assert res.c_star >= normalized_capacity(cfg, probe) - 1e-6

    def test_longer_blocks_use_longer_but_relatively_less_training(self):
        short = optimize_training(cdma_config(ell=15.0), grid_points=24)
        long = optimize_training(cdma_config(ell=60.0), grid_points=24)
        assert long.eta_star > short.eta_star
        assert long.eta_star / 60.0 < short.eta_star / 15.0

    def test_curve_is_returned(self):
        res = optimize_training(cdma_config(), grid_points=16)
        assert res.curve.shape[1] == 2
        assert np.nanmax(res.curve[:, 1]) <= res.c_star + 1e-9
