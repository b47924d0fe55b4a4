import json
import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest
from scipy.integrate import solve_ivp

import ptdtc
from ptdtc import _kernels as K
from ptdtc import meanfield as mf
from ptdtc.integrators import dop853

PROBE = textwrap.dedent("""
    import json, numpy as np
    import ptdtc
    from ptdtc import meanfield as mf, stability as s
    rng = np.random.default_rng(7)
    out = {"backend": ptdtc.backend_name()}
    m = rng.normal(size=(64, 3)); m /= np.linalg.norm(m, axis=1, keepdims=True)
    cases = {"ddm": dict(g=2, omega=1, kappa=1.7), "lmg": dict(g=1, kappa=0.6),
             "waveguide": dict(g=1, omega=0.3, gamma=0.5), "lattice": dict(g=2, omega=1, kappa=1.5, d=2)}
    for name, p in cases.items():
        model = mf.make_model(name, **p)
        q0 = np.array([0.6, 0.8, 0.3]) if name == "lattice" else np.array([0.6, 0.8, 0.0])
        traj = mf.integrate(model, q0, 20.0, stride=1.0)
        fps = sorted(fp.coords.tolist() for fp in s.find_fixed_points(model))
        out[name] = {"traj": traj.q.tolist(), "steps": traj.n_accepted, "fps": fps}
    print(json.dumps(out))
""")


def run_probe(disable):
    env = dict(os.environ)
    env.pop("PTDTC_DISABLE_NUMBA", None)
    if disable:
        env["PTDTC_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", PROBE], capture_output=True, text=True, env=env, timeout=600)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout)


@pytest.fixture(scope="module")
def probes():
    return run_probe(False), run_probe(True)


def test_backends_selected_by_env(probes):
    fast, slow = probes
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"


@pytest.mark.parametrize("name", ["ddm", "lmg", "waveguide", "lattice"])
def test_backends_agree(probes, name):
    fast, slow = probes
    a, b = np.array(fast[name]["traj"]), np.array(slow[name]["traj"])
    assert np.max(np.abs(a - b)) < 1e-9
    assert abs(fast[name]["steps"] - slow[name]["steps"]) <= 2
    np.testing.assert_allclose(fast[name]["fps"], slow[name]["fps"], atol=1e-10)


def test_kernel_rhs_matches_numpy(rng):
    cases = {"ddm": (2, 1, 1.7), "lmg": (1, 0.6), "waveguide": (1, 0.3, 0.5)}
    for name, p in cases.items():
        model = mf.make_model(name, **dict(zip(mf.MODEL_PARAMS[name], p)))
        out = np.empty(3)
        for q in rng.normal(size=(20, 3)):
            K.rhs(model.kernel_id, model.param_vector, q, out)
            np.testing.assert_allclose(out, model.rhs(q), atol=1e-14)


def test_kernel_jacobian_matches_differences(rng):
    model = mf.make_model("waveguide", g=1.0, omega=0.3, gamma=0.5)
    J = np.empty((3, 3))
    for q in rng.normal(size=(10, 3)):
        K.jac3(model.kernel_id, model.param_vector, q, J)
        h = 1e-6
        num = np.column_stack([(model.rhs(q + h * e) - model.rhs(q - h * e)) / (2 * h) for e in np.eye(3)])
        np.testing.assert_allclose(J, num, atol=1e-8)


def test_kernel_matches_scipy_dop853():
    model = mf.make_model("ddm", g=2.0, omega=1.0, kappa=1.3)
    q0 = np.array([0.0, 0.6, 0.8])
    t = np.linspace(0, 10, 11)
    ours = mf.integrate(model, q0, 10.0, stride=1.0, rtol=1e-12, atol=1e-12).q
    ref = solve_ivp(lambda _, y: model.rhs(y), (0, 10), q0, method="DOP853", t_eval=t,
                    rtol=1e-12, atol=1e-12).y.T
    assert np.max(np.abs(ours - ref)) < 1e-9


def test_numpy_dop853_oscillator():
    t = np.linspace(0, 20, 41)
    y = dop853(lambda y: np.array([y[1], -y[0]]), [1.0, 0.0], t, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(y[:, 0], np.cos(t), atol=1e-10)


def test_numpy_dop853_complex_matrix():
    A = np.array([[-0.5j, 1.0], [-1.0, 0.3j]])
    y0 = np.eye(2, dtype=complex)
    t = np.array([0.0, 0.7, 2.0])
    ys = dop853(lambda Y: A @ Y, y0, t, rtol=1e-12, atol=1e-13)
    from scipy.linalg import expm
    for ti, yi in zip(t, ys):
        np.testing.assert_allclose(yi, expm(A * ti), atol=1e-10)


def test_numpy_dop853_post_step_and_budget():
    seen = []

    def post(y):
        seen.append(1)
        return y / np.linalg.norm(y)

    ys = dop853(lambda y: np.array([-y[1], y[0]]) + 1e-3 * y, [1.0, 0.0], [0.0, 5.0], post_step=post)
    assert seen and abs(np.linalg.norm(ys[-1]) - 1) < 1e-14
    with pytest.raises(RuntimeError):
        dop853(lambda y: -y, [1.0], [0.0, 100.0], h_max=0.1, max_steps=10)


def test_newton_batch_finds_manifold_points():
    model = mf.make_model("ddm", g=2.0, omega=1.0, kappa=1.9)
    seeds = np.array([[1.0, 0, 0], [0, 0, -1.0], [0, 0.9, 0.43]])
    seeds /= np.linalg.norm(seeds, axis=1, keepdims=True)
    qs, res, ok = K.newton_batch(model.kernel_id, model.param_vector, seeds, 60, 1e-14)
    assert ok.any()
    for q in qs[ok]:
        assert abs(np.linalg.norm(q) - 1) < 1e-12
        assert np.linalg.norm(model.rhs(q)) < 1e-10


def test_package_reports_backend():
    assert ptdtc.backend_name() in ("numba", "numpy")
