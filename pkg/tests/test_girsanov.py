"""Unit tests for the drift-removal density."""

import math

import numpy as np
import pytest
from scipy.stats import norm

from roughdelta.fbm import GridSpec, PathSeed, sample_joint_batch, sample_joint_path
from roughdelta.frac_core import HurstParam
from roughdelta.girsanov import girsanov_xi, girsanov_xi_batch, reweighted_expectation
from roughdelta.sde import (
    RegimeSwitchDrift,
    ZeroDrift,
    euler_solve_batch,
    mollify,
)

H01 = HurstParam(0.1)


class TestXi:
    def test_zero_drift_gives_unit_density(self):
        grid = GridSpec(1.0, 32)
        path = sample_joint_path(grid, H01, 1, PathSeed(1, 0))
        w = girsanov_xi(H01, ZeroDrift(), path, 0.0)
        assert w.xi == pytest.approx(1.0, abs=1e-14)
        assert w.log_xi == pytest.approx(0.0, abs=1e-14)

    def test_single_matches_batch(self):
        grid = GridSpec(1.0, 32)
        path = sample_joint_path(grid, H01, 1, PathSeed(1, 5))
        drift = RegimeSwitchDrift(0.5, -0.5)
        w = girsanov_xi(H01, drift, path, 0.2)
        lx = girsanov_xi_batch(
            H01, drift, path.bh[None, :, 0], path.dW[None, :, 0], grid, 0.2
        )
        assert w.log_xi == pytest.approx(float(lx[0]), abs=1e-14)

    def test_dimension_guard(self):
        grid = GridSpec(1.0, 16)
        path = sample_joint_path(grid, H01, 2, PathSeed(1, 0))
        with pytest.raises(ValueError):
            girsanov_xi(H01, ZeroDrift(), path, 0.0)

    def test_unit_mean(self):
        grid = GridSpec(1.0, 128)
        dW, bh = sample_joint_batch(grid, H01, 1, 7, 0, 20000)
        lx = girsanov_xi_batch(
            H01, RegimeSwitchDrift(0.5, -0.5), bh[:, :, 0], dW[:, :, 0], grid, 0.0
        )
        xi = np.exp(lx)
        se = xi.std(ddof=1) / math.sqrt(len(xi))
        assert abs(xi.mean() - 1.0) <= 3 * se


class TestReweighting:
    def test_constant_drift_exact(self):
        # constant drift has a closed-form reweighted call value
        c, x0, strike = 0.5, 0.3, 0.2
        m = x0 + c - strike
        exact = m * norm.cdf(m) + norm.pdf(m)
        grid = GridSpec(1.0, 256)
        dW, bh = sample_joint_batch(grid, H01, 1, 7, 0, 20000)
        drift = mollify(RegimeSwitchDrift(c, c), 0.05)
        f = lambda x: np.maximum(x - strike, 0.0)
        xi, xif = reweighted_expectation(
            H01, drift, f, bh[:, :, 0], dW[:, :, 0], grid, x0
        )
        se = xif.std(ddof=1) / math.sqrt(len(xif))
        assert abs(xif.mean() - exact) <= 4 * se

    def test_matches_direct_simulation(self):
        grid = GridSpec(1.0, 256)
        drift = mollify(RegimeSwitchDrift(0.5, -0.5), 0.05)
        dW, bh = sample_joint_batch(grid, H01, 1, 7, 0, 20000)
        f = lambda x: np.maximum(x - 0.2, 0.0)
        xi, xif = reweighted_expectation(
            H01, drift, f, bh[:, :, 0], dW[:, :, 0], grid, 0.3
        )
        xt = euler_solve_batch(drift, np.array([0.3]), bh, grid)[:, -1, 0]
        direct = f(xt)
        gap = abs(xif.mean() - direct.mean())
        combined = math.hypot(
            xif.std(ddof=1) / math.sqrt(len(xif)),
            direct.std(ddof=1) / math.sqrt(len(direct)),
        )
        assert gap <= 3 * combined
