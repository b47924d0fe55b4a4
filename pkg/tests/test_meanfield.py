import numpy as np
import pytest
from hypothesis import given, strategies as st

from ptdtc import meanfield as mf
from ptdtc import stability as stab
from conftest import random_polar, random_sphere

G, W = 2.0, 1.0

MODELS = {
    "ddm": dict(g=2.0, omega=1.0, kappa=1.3),
    "lmg": dict(g=1.0, kappa=0.7),
    "waveguide": dict(g=1.0, omega=0.3, gamma=0.5),
    "lattice": dict(g=2.0, omega=1.0, kappa=1.5, d=2),
}

unit = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1)


def states_for(model, rng, n):
    return random_polar(rng, n) if model.name == "lattice" else random_sphere(rng, n)


def fd5(q, h):
    return (-q[4:] + 8 * q[3:-1] - 8 * q[1:-3] + q[:-4]) / (12 * h)


# --- vector fields -------------------------------------------------------------

def test_ddm_rhs_examples():
    for k in (0.5, 1.0, 1.9):
        mx = np.sqrt(1 - (k / G) ** 2)
        for s in (1, -1):
            assert np.linalg.norm(mf.ddm_rhs([s * mx, k / G, 0], G, W, k)) < 1e-14
    np.testing.assert_allclose(mf.ddm_rhs([1, 0, 0], G, W, 0.7), [0, 0, -1.4], atol=1e-15)


def test_ddm_rhs_formula_by_hand():
    x, y, z = 0.3, -0.5, 0.2
    g, w, k = 1.1, 0.4, 0.9
    expected = 2 * np.array([-w * y * z + k * x * z, w * x * z - g * z + k * y * z, g * y - k * (1 - z * z)])
    np.testing.assert_allclose(mf.ddm_rhs([x, y, z], g, w, k), expected, atol=1e-15)


def test_lmg_rhs_examples():
    g = 1.0
    for k in (0.3, 0.8):
        r = np.sqrt(1 - (k / g) ** 2)
        mp, mm = np.sqrt((1 + r) / 2), np.sqrt((1 - r) / 2)
        assert np.linalg.norm(mf.lmg_rhs([mp, mm, 0], g, k)) < 1e-14
    for z in (1, -1):
        assert np.linalg.norm(mf.lmg_rhs([0, 0, z], g, 0.4)) == 0
    r = np.sqrt(1 - 1.0)
    assert np.sqrt((1 + r) / 2) == pytest.approx(1 / np.sqrt(2))


def test_waveguide_rhs_examples():
    g, w, gam = 1.0, 0.3, 0.5
    np.testing.assert_allclose(mf.waveguide_rhs([0, 0, 1], g, w, gam), [0, -2 * g, 0], atol=1e-15)
    # m_z = 0 with g m_y = gamma m_x^2 + gamma k m_y^2
    y = (1 - np.sqrt(1 - 8 * gam ** 2 * w)) / (4 * gam * w)
    x = np.sqrt(1 - y * y)
    assert np.linalg.norm(mf.waveguide_rhs([x, y, 0], g, w, gam)) < 1e-14


def test_lattice_rhs_examples():
    q = np.array([0.6, 0.8, 0.0])
    out = mf.lattice_rhs(q, 1.3, 0.7, 0.0, 2)
    assert out[0] == 0 and out[1] == 0
    with pytest.raises(ValueError):
        mf.lattice_rhs([1.0, 0.0, 0.1], 1, 1, 1)


def test_lattice_newton_fixed_point():
    model = mf.make_model("lattice", g=2.0, omega=1.0, kappa=1.5, d=1)
    seed = np.array([1 / np.sqrt(2), 1 / np.sqrt(2), np.arcsin(-1.5 / 4) + 0.1])
    from ptdtc import _kernels as K
    q, res, _, ok = K.newton_manifold(model.kernel_id, model.param_vector, seed, 50, 1e-14)
    assert ok and np.linalg.norm(model.rhs(q)) < 1e-12
    assert q[0] == pytest.approx(q[1], abs=1e-12)
    assert np.sin(q[2]) == pytest.approx(-1.5 / 4, abs=1e-12)


@pytest.mark.parametrize("name", ["ddm", "lmg", "waveguide"])
def test_sphere_is_invariant(name, rng):
    model = mf.make_model(name, **MODELS[name])
    m = random_sphere(rng, 500)
    assert np.max(np.abs(np.sum(m * model.rhs(m), axis=1))) < 1e-14


def test_batch_and_single_agree(rng):
    m = random_sphere(rng, 7)
    batch = mf.ddm_rhs(m, G, W, 1.1)
    for i in range(7):
        np.testing.assert_array_equal(batch[i], mf.ddm_rhs(m[i], G, W, 1.1))


def test_make_model_validation():
    with pytest.raises(ValueError):
        mf.make_model("foo", g=1)
    with pytest.raises(ValueError):
        mf.make_model("ddm", g=1, omega=1)
    with pytest.raises(ValueError):
        mf.make_model("lmg", g=1, kappa=1, omega=2)
    with pytest.raises(ValueError):
        mf.make_model("lattice", g=1, omega=1, kappa=1, d=0)
    m = mf.make_model("lattice", g=1, omega=1, kappa=1)
    assert m.params["d"] == 1
    assert np.array_equal(m.parity @ m.parity, np.eye(3))
    assert "amplitude_norm" in m.conserved
    assert "norm" in mf.make_model("lmg", g=1, kappa=1).conserved


# --- n-PT symmetry -----------------------------------------------------------

@pytest.mark.parametrize("name", list(MODELS))
def test_npt_residual_vanishes(name, rng):
    model = mf.make_model(name, **MODELS[name])
    assert np.max(mf.npt_residual(model, states_for(model, rng, 1000))) < 1e-12


def test_npt_residual_detects_breaking(rng):
    model = mf.make_model("ddm", **MODELS["ddm"])
    eps = 0.3

    def kick(q):
        return eps * np.stack([0 * q[..., 0], 0 * q[..., 0], q[..., 2]], axis=-1)

    m = random_sphere(rng, 200)
    m = m[np.abs(m[:, 2]) > 0.3]
    assert np.all(mf.npt_residual(model, m, extra=kick) > eps / 2)


@given(unit, st.floats(0.1, 3), st.floats(0, 2), st.floats(0, 3))
def test_npt_property_ddm(v, g, w, k):
    m = np.array(v) / np.linalg.norm(v)
    assert mf.npt_residual(mf.make_model("ddm", g=g, omega=w, kappa=k), m) < 1e-12


# --- Schwinger map and lattice equivalence ---------------------------------

def test_schwinger_examples():
    ps = mf.schwinger_map(np.array([1.0, 0, 0]))
    assert ps.r_a == pytest.approx(1 / np.sqrt(2)) and ps.r_b == pytest.approx(1 / np.sqrt(2))
    assert ps.dtheta == 0 and not ps.degenerate
    ps = mf.schwinger_map(np.array([0, 0, 1.0]))
    assert ps.r_a == 1 and ps.r_b == 0 and ps.degenerate and ps.dtheta == 0


def test_schwinger_round_trip(rng):
    m = random_sphere(rng, 1000)
    ps = mf.schwinger_map(m)
    back = mf.schwinger_inverse(np.column_stack([ps.r_a, ps.r_b, ps.dtheta]))
    assert np.max(np.abs(back - m)) < 1e-12


@given(unit)
def test_schwinger_round_trip_property(v):
    m = np.array(v) / np.linalg.norm(v)
    ps = mf.schwinger_map(m)
    if not ps.degenerate:
        np.testing.assert_allclose(mf.schwinger_inverse([ps.r_a, ps.r_b, ps.dtheta]), m, atol=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_lattice_equals_mapped_ddm(d, rng):
    q = random_polar(rng, 1000)
    for g, w, k in rng.uniform(0.1, 3, size=(5, 3)):
        lattice = mf.lattice_rhs(q, g, w, k, d)
        mapped = 2 * d * mf.ddm_polar_rhs(q, *mf.lattice_ddm_params(g, w, k))
        assert np.max(np.abs(lattice - mapped)) < 1e-12


def test_lattice_equivalence_pins_my_sign(rng):
    # flipping the m_y convention breaks the equivalence
    q = random_polar(rng, 200)
    g, w, k = mf.lattice_ddm_params(1.2, 0.8, 0.6)
    flipped = q.copy()
    flipped[:, 2] = -q[:, 2]
    lattice = mf.lattice_rhs(q, 1.2, 0.8, 0.6, 1)
    other = 2 * mf.ddm_polar_rhs(flipped, g, w, k) * np.array([1, 1, -1])
    assert np.max(np.abs(lattice - other)) > 1e-3


# --- integration --------------------------------------------------------------

def test_integrate_rejects_off_manifold():
    model = mf.make_model("ddm", **MODELS["ddm"])
    with pytest.raises(ValueError):
        mf.integrate(model, [1.0, 0.1, 0], 1.0)
    with pytest.raises(ValueError):
        mf.integrate(model, [1.0, 0, 0], -1.0)
    with pytest.raises(ValueError):
        mf.integrate(mf.make_model("lattice", **MODELS["lattice"]), [1.0, 0.0, 0.0], 1.0)


def test_integrate_conservative_ddm():
    model = mf.make_model("ddm", g=G, omega=W, kappa=0.0)
    traj = mf.integrate(model, [0.6, 0.0, 0.8], 100.0, stride=0.1)
    assert np.max(np.abs(traj.conserved_residuals()["norm"])) < 1e-9
    assert traj.t[-1] == pytest.approx(100.0)


@pytest.mark.parametrize("name", list(MODELS))
def test_conservation_random_initial_states(name, rng):
    model = mf.make_model(name, **MODELS[name])
    for q0 in states_for(model, rng, 50):
        traj = mf.integrate(model, q0, 100.0, stride=0.5)
        assert traj.max_drift() < 1e-9


def test_drift_abort_raises():
    model = mf.make_model("ddm", g=G, omega=W, kappa=1.7)
    with pytest.raises(mf.IntegrationError):
        mf.integrate(model, [0.6, 0.8, 0.0], 10.0, stride=1.0, rtol=1e-2, atol=1e-2, h_max=1.0,
                     drift_abort=1e-12)


def test_step_budget_raises():
    model = mf.make_model("ddm", g=G, omega=W, kappa=1.7)
    with pytest.raises(mf.IntegrationError):
        mf.integrate(model, [0.6, 0.8, 0.0], 10.0, max_steps=5)


def test_pt_phase_orbit_closes():
    model = mf.make_model("ddm", g=G, omega=W, kappa=1.7)
    t_star, dist = mf.orbit_return(model, np.array([0.6, 0.8, 0.0]), 100.0)
    assert 0 < t_star <= 100 and dist < 1e-3


def test_fptb_converges_to_stable_point():
    k = 3.0
    model = mf.make_model("ddm", g=G, omega=W, kappa=k)
    D = k * k + W * W
    target = np.array([G * W / D, G * k / D, -np.sqrt(1 - G * G / D)])
    traj = mf.integrate(model, [0.6, 0.8, 0.0], 50.0, stride=1.0)
    assert np.linalg.norm(traj.q[-1] - target) < 1e-6


def test_pt_conjugate_examples():
    q0 = np.array([0.6, 0.8, 0.0])
    ddm = mf.make_model("ddm", g=G, omega=W, kappa=1.7)
    assert mf.pt_conjugate_trajectory(ddm, q0).attractor_distance < 1e-3
    lmg = mf.make_model("lmg", g=1.0, kappa=0.8)
    q1 = np.array([0.5, 0.3, 0.2])
    assert mf.pt_conjugate_trajectory(lmg, q1 / np.linalg.norm(q1)).attractor_distance < 1e-3
    broken = mf.make_model("ddm", g=G, omega=W, kappa=3.0)
    res = mf.pt_conjugate_trajectory(broken, q0)
    assert res.attractor_distance > 0.5
    assert res.forward.q[-1, 2] < 0 < res.mapped.q[-1, 2]


@pytest.mark.parametrize("name", list(MODELS))
def test_pt_image_solves_the_flow(name):
    model = mf.make_model(name, **MODELS[name])
    q0 = np.array([0.6, 0.8, 0.3]) if name == "lattice" else np.array([0.48, 0.6, 0.64])
    h = 1e-4
    traj = mf.integrate(model, q0, 2.0, stride=h, rtol=1e-13, atol=1e-13)
    image = mf.pt_image(traj)
    resid = fd5(image.q, h) - model.rhs(image.q[2:-2])
    assert np.max(np.abs(resid)) < 1e-8
    # the image also solves the explicitly reversed field
    integrated = mf.integrate(model, image.q[0], 0.5, stride=0.5, field="reversed", rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(integrated.q[-1], image.q[int(round(0.5 / h))], atol=1e-8)


def test_center_amplitude_scales_with_distance():
    model = mf.make_model("ddm", g=G, omega=W, kappa=1.7)
    fp = next(f for f in stab.find_fixed_points(model) if f.label == "m_-,PT")
    amps = []
    for delta in (1e-3, 2e-3):
        q0 = fp.coords + delta * np.array([0.0, 0.0, 1.0])
        traj = mf.integrate(model, q0 / np.linalg.norm(q0), 100.0, stride=0.01)
        dist = np.linalg.norm(traj.q - fp.coords, axis=1)
        amps.append((dist[: len(dist) // 10].max(), dist[-len(dist) // 10:].max()))
    ratio_early = amps[1][0] / amps[0][0]
    ratio_late = amps[1][1] / amps[0][1]
    assert abs(ratio_early - 2) < 0.2 and abs(ratio_late - 2) < 0.2


def test_point_set_distance():
    t = np.linspace(0, 2 * np.pi, 400)
    circle = np.column_stack([np.cos(t), np.sin(t), 0 * t])
    shifted = circle[::-1] + np.array([0, 0, 0.01])
    assert mf.point_set_distance(circle, shifted) == pytest.approx(0.01, rel=1e-6)
    # chords of a coarse polygon sit inside the circle by the sagitta
    sparse = circle[::7]
    sagitta = 1 - np.cos(7 * (t[1] - t[0]) / 2)
    assert mf.point_set_distance(circle, sparse) <= sagitta * 1.01
