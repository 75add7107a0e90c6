import math

import numpy as np
import pytest

import lnodec


def test_presets():
    di = lnodec.double_integrator()
    assert di.n_x == 2 and di.n_u == 1
    assert di.t_f == 1.5
    np.testing.assert_allclose(di.x_star, [1.0, 0.0])
    pl = lnodec.plasma()
    np.testing.assert_allclose(lnodec.drift(pl, np.array([37.0, 0.0]))[0],
                               -0.8088 / math.log(6.0), rtol=1e-12)


def test_policy_forward_is_bounded():
    di = lnodec.double_integrator()
    params = lnodec.init_policy(di, seed=3)
    assert params.theta.shape == (2241,)
    rng = np.random.default_rng(0)
    for x in rng.uniform(-50, 50, size=(200, 2)):
        u = lnodec.forward(params, x)
        assert -10.0 <= u[0] <= 10.0


def test_potential_and_rollout():
    di = lnodec.double_integrator()
    assert lnodec.potential(np.zeros(2), di.x_star, di.P) == pytest.approx(1.0)
    params = lnodec.init_policy(di, seed=0)
    tr = lnodec.rollout(di, params, di.x0, 50)
    assert len(tr.times) == 51
    assert tr.times[-1] == pytest.approx(1.5)
    assert tr.potentials[0] == pytest.approx(1.0)


def test_gradient_check_and_short_training():
    di = lnodec.double_integrator()
    cfg = lnodec.TrainConfig()
    cfg.segments = 50
    cfg.iterations = 10
    params = lnodec.init_policy(di, seed=1)
    check = lnodec.gradient_check(di, params, cfg, 10, 0)
    assert check.fd_vs_discrete <= 1e-6
    assert check.adjoint_vs_discrete <= 1e-3
    result = lnodec.train(di, cfg)
    assert len(result.history) == 10
    assert result.history[-1].total < result.history[0].total


def test_sobol_and_errors(tmp_path):
    pts = lnodec.sobol_points(4, 2, np.zeros(2), np.ones(2))
    np.testing.assert_allclose(pts[0], [0.5, 0.5])
    with pytest.raises(lnodec.ParseError):
        lnodec.run("train", config_text="[train]\ngama = 1\n", out_dir=str(tmp_path))
