import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from trajvid.schedule import (NoiseSchedule, ScoreSingularityError,
                              forward_diffuse, score_from_x0)


def test_endpoint_values(schedule):
    a, s = schedule.coeffs(0, dtype=torch.float64)
    assert float(a) == 1.0 and float(s) == 0.0
    a, s = schedule.coeffs(schedule.T, dtype=torch.float64)
    assert abs(float(a)) < 1e-12 and abs(float(s) - 1.0) < 1e-12


def test_variance_preserving(schedule):
    ts = torch.arange(schedule.T + 1)
    a, s = schedule.coeffs(ts, dtype=torch.float64)
    assert torch.allclose(a ** 2 + s ** 2, torch.ones_like(a), atol=1e-12)


def test_alpha_decreasing_sigma_increasing(schedule):
    assert torch.all(schedule.alpha[1:] < schedule.alpha[:-1])
    assert torch.all(schedule.sigma[1:] > schedule.sigma[:-1])


def test_midpoint_value(schedule):
    a, s = schedule.coeffs(500, dtype=torch.float64)
    assert abs(float(a) - math.cos(math.pi / 4)) < 1e-12
    assert abs(float(s) - math.sin(math.pi / 4)) < 1e-12


def test_fewstep_grid_default(schedule):
    assert schedule.fewstep_grid == (1000, 750, 500, 250)
    assert schedule.step_grid(4) == [1000, 750, 500, 250]


def test_step_grid_uniform():
    sch = NoiseSchedule()
    assert sch.step_grid(2) == [1000, 500]
    assert sch.step_grid(50)[0] == 1000
    grid = sch.step_grid(50)
    assert len(grid) == 50
    assert all(a > b for a, b in zip(grid, grid[1:]))
    with pytest.raises(ValueError):
        sch.step_grid(0)


def test_grid_validation():
    with pytest.raises(ValueError):
        NoiseSchedule(fewstep_grid=(250, 500, 750, 1000))
    with pytest.raises(ValueError):
        NoiseSchedule(fewstep_grid=(1000, 1000, 500))
    with pytest.raises(ValueError):
        NoiseSchedule(fewstep_grid=(2000, 500))
    with pytest.raises(ValueError):
        NoiseSchedule(fewstep_grid=(500, 0))


def test_coeffs_range_check(schedule):
    with pytest.raises(ValueError):
        schedule.coeffs(-1)
    with pytest.raises(ValueError):
        schedule.coeffs(schedule.T + 1)


def test_forward_diffuse_endpoints(schedule):
    g = torch.Generator().manual_seed(0)
    x0 = torch.randn(2, 3, generator=g)
    eps = torch.randn(2, 3, generator=g)
    assert torch.equal(forward_diffuse(x0, 0, eps, schedule), x0)
    xt = forward_diffuse(x0, schedule.T, eps, schedule)
    assert torch.allclose(xt, eps, atol=1e-6)


def test_forward_diffuse_batched_t(schedule):
    g = torch.Generator().manual_seed(1)
    x0 = torch.randn(3, 4, 5, generator=g)
    eps = torch.randn(3, 4, 5, generator=g)
    t = torch.tensor([100, 500, 900])
    xt = forward_diffuse(x0, t, eps, schedule)
    for i in range(3):
        a, s = schedule.coeffs(int(t[i]), dtype=x0.dtype)
        assert torch.allclose(xt[i], a * x0[i] + s * eps[i], atol=1e-6)


def test_forward_diffuse_shape_mismatch(schedule):
    with pytest.raises(ValueError):
        forward_diffuse(torch.zeros(2, 3), 10, torch.zeros(3, 2), schedule)


def test_score_identity_exact_prediction(schedule):
    # if x0_hat == x0 and x_t = a x0 + s eps then score = -eps / sigma
    g = torch.Generator().manual_seed(2)
    x0 = torch.randn(2, 6, generator=g, dtype=torch.float64)
    eps = torch.randn(2, 6, generator=g, dtype=torch.float64)
    t = 400
    xt = forward_diffuse(x0, t, eps, schedule)
    score = score_from_x0(xt, t, x0, schedule)
    _, s = schedule.coeffs(t, dtype=torch.float64)
    assert torch.allclose(score, -eps / s, atol=1e-9)


def test_score_singularity_at_zero(schedule):
    x = torch.zeros(1, 3)
    with pytest.raises(ScoreSingularityError):
        score_from_x0(x, 0, x, schedule)
    with pytest.raises(ScoreSingularityError):
        score_from_x0(x, torch.tensor([5, 0]), x, schedule)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 1000), st.integers(0, 10 ** 6))
def test_diffuse_then_score_consistency(t, seed):
    sch = NoiseSchedule()
    g = torch.Generator().manual_seed(seed)
    x0 = torch.randn(4, generator=g, dtype=torch.float64)
    eps = torch.randn(4, generator=g, dtype=torch.float64)
    xt = forward_diffuse(x0, t, eps, sch)
    score = score_from_x0(xt, t, x0, sch)
    _, s = sch.coeffs(t, dtype=torch.float64)
    assert torch.allclose(score * s, -eps, atol=1e-8)
