"""Mean-field flows of the collective-spin and bipartite-lattice models.

Spin states are Bloch vectors ``m = (m_x, m_y, m_z)`` with ``|m| = 1``; the
lattice model uses polar coordinates ``(r_A, r_B, dtheta)`` with
``r_A^2 + r_B^2 = 1``. All vector fields accept a single state of shape
``(3,)`` or a batch ``(..., 3)``.

The PT operation on the flow is ``q(t) -> P q(-t)`` with ``P = diag(1, 1, -1)``
for spins and the ``r_A <-> r_B`` swap for the lattice. A field is
n-PT symmetric when ``P f(q) = -f(P q)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as K

__all__ = [
    "MeanFieldModel",
    "make_model",
    "MODEL_PARAMS",
    "ddm_rhs",
    "lmg_rhs",
    "waveguide_rhs",
    "lattice_rhs",
    "ddm_polar_rhs",
    "lattice_ddm_params",
    "schwinger_map",
    "schwinger_inverse",
    "PolarState",
    "Trajectory",
    "IntegrationError",
    "integrate",
    "npt_residual",
    "pt_conjugate_trajectory",
    "PTConjugate",
    "pt_image",
    "orbit_return",
    "point_set_distance",
]

SPIN_PARITY = np.diag([1, 1, -1])
LATTICE_PARITY = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]])
POLAR_GUARD = 1e-12


def ddm_rhs(m, g, omega, kappa):
    """Generalized driven Dicke model."""
    m = np.asarray(m, dtype=float)
    x, y, z = m[..., 0], m[..., 1], m[..., 2]
    return 2 * np.stack([
        -omega * y * z + kappa * x * z,
        omega * x * z - g * z + kappa * y * z,
        g * y - kappa * (1 - z ** 2),
    ], axis=-1)


def lmg_rhs(m, g, kappa):
    """Dissipative Lipkin-Meshkov-Glick model."""
    m = np.asarray(m, dtype=float)
    x, y, z = m[..., 0], m[..., 1], m[..., 2]
    return 2 * np.stack([
        -g * y * z + kappa * x * z,
        -g * x * z + kappa * y * z,
        2 * g * x * y - kappa * (x ** 2 + y ** 2),
    ], axis=-1)


def waveguide_rhs(m, g, omega, gamma):
    """Waveguide-coupled emitters; the effective decay ratio is ``2*omega + 1``."""
    m = np.asarray(m, dtype=float)
    x, y, z = m[..., 0], m[..., 1], m[..., 2]
    k = 2 * omega + 1
    return 2 * np.stack([
        gamma * x * z,
        -g * z + gamma * k * y * z,
        g * y - gamma * x ** 2 - gamma * k * y ** 2,
    ], axis=-1)


def lattice_rhs(q, g, omega, kappa, d=1):
    """Uniform mean-field flow of the bipartite boson lattice in ``d`` dimensions.

    Raises ``ValueError`` when an amplitude falls below 1e-12, where the polar
    chart is singular.
    """
    q = np.asarray(q, dtype=float)
    ra, rb, th = q[..., 0], q[..., 1], q[..., 2]
    if np.any(ra < POLAR_GUARD) or np.any(rb < POLAR_GUARD):
        raise ValueError("polar coordinates are singular at r_A = 0 or r_B = 0")
    c = 2 * d
    s, co = np.sin(th), np.cos(th)
    return np.stack([
        -c * (kappa * ra * rb ** 2 + g * rb * s),
        c * (kappa * ra ** 2 * rb + g * ra * s),
        -c * (g * (rb / ra - ra / rb) * co + omega * (ra ** 2 - rb ** 2)),
    ], axis=-1)


class PolarState(NamedTuple):
    r_a: np.ndarray
    r_b: np.ndarray
    dtheta: np.ndarray
    degenerate: np.ndarray


def schwinger_map(m) -> PolarState:
    """Bloch vector to two-mode polar coordinates.

    Convention: ``m_z = r_A^2 - r_B^2``, ``m_x = 2 r_A r_B cos(dtheta)``,
    ``m_y = -2 r_A r_B sin(dtheta)``. At the poles the phase is undefined;
    ``dtheta`` is set to 0 and ``degenerate`` is True there.
    """
    m = np.asarray(m, dtype=float)
    z = np.clip(m[..., 2], -1.0, 1.0)
    transverse = np.hypot(m[..., 0], m[..., 1])
    # the small radius comes from 2 r_A r_B = |m_perp|, which keeps it
    # accurate near the poles where 1 -/+ z cancels
    big = np.sqrt((1 + np.abs(z)) / 2)
    small = transverse / (2 * big)
    north = z >= 0
    r_a = np.where(north, big, small)
    r_b = np.where(north, small, big)
    degenerate = transverse < POLAR_GUARD
    dtheta = np.where(degenerate, 0.0, np.arctan2(-m[..., 1], m[..., 0]))
    return PolarState(r_a, r_b, dtheta, degenerate)


def schwinger_inverse(q):
    """Polar coordinates ``(r_A, r_B, dtheta)`` back to a Bloch vector."""
    q = np.asarray(q, dtype=float)
    ra, rb, th = q[..., 0], q[..., 1], q[..., 2]
    return np.stack([2 * ra * rb * np.cos(th), -2 * ra * rb * np.sin(th), ra ** 2 - rb ** 2], axis=-1)


def _polar_array(m):
    ps = schwinger_map(m)
    return np.stack([ps.r_a, ps.r_b, ps.dtheta], axis=-1)


def ddm_polar_rhs(q, g, omega, kappa):
    """DDM flow pushed through the Schwinger map into ``(r_A, r_B, dtheta)`` rates."""
    q = np.asarray(q, dtype=float)
    ra, rb = q[..., 0], q[..., 1]
    m = schwinger_inverse(q)
    dm = ddm_rhs(m, g, omega, kappa)
    x, y = m[..., 0], m[..., 1]
    dra = dm[..., 2] / (4 * ra)
    drb = -dm[..., 2] / (4 * rb)
    dth = (y * dm[..., 0] - x * dm[..., 1]) / (x ** 2 + y ** 2)
    return np.stack([dra, drb, dth], axis=-1)


def lattice_ddm_params(g, omega, kappa):
    """DDM parameters whose Schwinger-mapped flow, scaled by ``2d``, is the lattice flow.

    The lattice rates ``(g, omega, kappa)`` correspond to DDM rates
    ``(g, omega/2, kappa/2)``.
    """
    return g, omega / 2, kappa / 2


# --- model registry --------------------------------------------------------

MODEL_PARAMS = {
    "ddm": ("g", "omega", "kappa"),
    "lmg": ("g", "kappa"),
    "waveguide": ("g", "omega", "gamma"),
    "lattice": ("g", "omega", "kappa", "d"),
}

_MODEL_IDS = {"ddm": K.DDM, "lmg": K.LMG, "waveguide": K.WAVEGUIDE, "lattice": K.LATTICE}
_RHS = {"ddm": ddm_rhs, "lmg": lmg_rhs, "waveguide": waveguide_rhs, "lattice": lattice_rhs}


def _norm(q):
    return np.linalg.norm(np.asarray(q, dtype=float), axis=-1)


def _amplitude_norm(q):
    q = np.asarray(q, dtype=float)
    return np.hypot(q[..., 0], q[..., 1])


@dataclass(frozen=True)
class MeanFieldModel:
    """A registered mean-field vector field with its parity and invariants.

    ``conserved`` maps a name to a scalar function that the exact flow keeps
    at 1 on the constraint manifold.
    """

    name: str
    params: dict
    parity: np.ndarray = field(repr=False)
    conserved: dict = field(repr=False)
    dim: int = 3

    @property
    def kernel_id(self) -> int:
        return _MODEL_IDS[self.name]

    @property
    def param_vector(self) -> np.ndarray:
        vals = [float(self.params[k]) for k in MODEL_PARAMS[self.name]]
        return np.array(vals + [0.0] * (4 - len(vals)))

    @property
    def is_spin(self) -> bool:
        return self.name != "lattice"

    def rhs(self, q):
        return _RHS[self.name](q, *(self.params[k] for k in MODEL_PARAMS[self.name]))

    def apply_parity(self, q):
        return np.asarray(q, dtype=float) @ self.parity.T

    def to_bloch(self, q):
        """Coordinates in which distances are measured (Bloch vector for all models)."""
        return schwinger_inverse(q) if self.name == "lattice" else np.asarray(q, dtype=float)

    def with_params(self, **changes) -> "MeanFieldModel":
        return make_model(self.name, **{**self.params, **changes})

    def rate_scale(self) -> float:
        """Largest rate parameter; sets the scale for degeneracy thresholds."""
        vals = [abs(v) for k, v in self.params.items() if k != "d"]
        scale = max(vals) if vals else 1.0
        if self.name == "lattice":
            scale *= 2 * self.params["d"]
        return scale if scale > 0 else 1.0


def make_model(name: str, **params) -> MeanFieldModel:
    """Build a registered model: ``ddm``, ``lmg``, ``waveguide`` or ``lattice``."""
    if name not in MODEL_PARAMS:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODEL_PARAMS)}")
    keys = MODEL_PARAMS[name]
    if name == "lattice":
        params.setdefault("d", 1)
    missing = [k for k in keys if k not in params]
    extra = [k for k in params if k not in keys]
    if missing or extra:
        raise ValueError(f"model {name!r} takes {keys}; missing {missing}, unexpected {extra}")
    params = {k: (int(params[k]) if k == "d" else float(params[k])) for k in keys}
    if name == "lattice":
        if params["d"] < 1:
            raise ValueError("lattice dimension d must be >= 1")
        return MeanFieldModel(name, params, LATTICE_PARITY, {"amplitude_norm": _amplitude_norm})
    return MeanFieldModel(name, params, SPIN_PARITY, {"norm": _norm})


# --- integration -----------------------------------------------------------

class IntegrationError(RuntimeError):
    """Step-size underflow, step budget exhausted, or conservation drift abort."""


_STATUS_TEXT = {
    K.STEP_UNDERFLOW: "step size underflow",
    K.MAX_STEPS: "step budget exhausted",
    K.DRIFT_ABORT: "conserved quantity drifted beyond the abort threshold",
    K.NONFINITE: "non-finite state",
}


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    model: MeanFieldModel = field(repr=False)
    n_accepted: int = 0
    n_rejected: int = 0

    def conserved_residuals(self) -> dict:
        """``c(q(t)) - 1`` for each conserved scalar of the model."""
        return {name: fn(self.q) - 1.0 for name, fn in self.model.conserved.items()}

    def max_drift(self) -> float:
        return max(float(np.max(np.abs(fn(self.q) - fn(self.q[0]))))
                   for fn in self.model.conserved.values())

    def after(self, t_min: float) -> "Trajectory":
        keep = self.t >= t_min
        return Trajectory(self.t[keep], self.q[keep], self.model, self.n_accepted, self.n_rejected)


def _check_initial(model: MeanFieldModel, q0, tol=1e-9):
    q0 = np.asarray(q0, dtype=float)
    if q0.shape != (3,):
        raise ValueError(f"state must have shape (3,), got {q0.shape}")
    for name, fn in model.conserved.items():
        if abs(fn(q0) - 1.0) > tol:
            raise ValueError(f"initial state violates {name} = 1 (got {fn(q0)!r})")
    if model.name == "lattice" and min(q0[0], q0[1]) < POLAR_GUARD:
        raise ValueError("lattice initial state sits on the polar singularity")
    return q0


H_MAX_RATE = 0.04

_FIELD_MODES = {"forward": 0, "reversed": 1, "conjugated": 2}


def integrate(model: MeanFieldModel, q0, t_end: float, stride: float = 0.01,
              rtol: float = 1e-10, atol: float = 1e-10, h_max: float | None = None,
              drift_abort: float = 1e-6, max_steps: int = 10_000_000,
              field: str = "forward") -> Trajectory:
    """Integrate the flow from ``q0`` with an adaptive DOP853 pair.

    Output is sampled every ``stride`` (steps land exactly on samples).
    Conservation is monitored, never projected: if a conserved scalar moves by
    more than ``drift_abort`` the run stops with :class:`IntegrationError`.
    ``field`` selects the vector field: ``"forward"`` is ``f``,
    ``"reversed"`` is the PT-conjugated field ``-P f(P q)`` and
    ``"conjugated"`` is ``P f(P q)``, whose solutions are ``P q(t)``.
    ``h_max`` defaults to ``H_MAX_RATE / model.rate_scale()``; capping the step
    keeps the long-run drift of the conserved scalars below 1e-9 at t=100.
    """
    q0 = _check_initial(model, q0)
    if h_max is None:
        h_max = H_MAX_RATE / model.rate_scale()
    if field not in _FIELD_MODES:
        raise ValueError(f"field must be one of {sorted(_FIELD_MODES)}")
    if t_end <= 0 or stride <= 0:
        raise ValueError("t_end and stride must be positive")
    n = int(np.floor(t_end / stride + 1e-9))
    t = np.arange(n + 1) * stride
    if t[-1] < t_end - 1e-12:
        t = np.append(t, t_end)
    ys, status, n_acc, n_rej, _ = K.integrate_dop853(
        model.kernel_id, model.param_vector, q0, t, rtol, atol, 0.0,
        1e-14 * max(1.0, t_end), h_max, max_steps, _FIELD_MODES[field], drift_abort,
        K.TAB_A, K.TAB_B, K.TAB_E3, K.TAB_E5)
    if status != K.OK:
        raise IntegrationError(_STATUS_TEXT.get(status, f"status {status}"))
    return Trajectory(t, ys, model, int(n_acc), int(n_rej))


# --- PT symmetry of the flow -----------------------------------------------

def npt_residual(model: MeanFieldModel, q, extra=None):
    """``|P f(q) + f(P q)|`` per state (zero for an n-PT symmetric field).

    States are real here, so conjugation is the identity; the sign comes from
    ``t -> -t`` negating the time derivative. ``extra`` is an optional
    vector field added to ``f``, e.g. a symmetry-breaking perturbation.
    """
    q = np.asarray(q, dtype=float)

    def f(x):
        return model.rhs(x) if extra is None else model.rhs(x) + extra(x)

    r = model.apply_parity(f(q)) + f(model.apply_parity(q))
    out = np.linalg.norm(r, axis=-1)
    return float(out) if out.ndim == 0 else out


def _segment_distances(points, vertices):
    """Distance from each point to the polyline through ``vertices``."""
    if len(vertices) == 1:
        return np.linalg.norm(points - vertices[0], axis=-1)
    tree = cKDTree(vertices)
    k = min(8, len(vertices))
    _, idx = tree.query(points, k=k)
    idx = np.atleast_2d(idx.reshape(len(points), k))
    best = np.full(len(points), np.inf)
    n_seg = len(vertices) - 1
    for shift in (0, -1):
        seg = np.clip(idx + shift, 0, n_seg - 1)
        a = vertices[seg]
        b = vertices[seg + 1]
        ab = b - a
        ap = points[:, None, :] - a
        denom = np.einsum("ijk,ijk->ij", ab, ab)
        s = np.where(denom > 0, np.einsum("ijk,ijk->ij", ap, ab) / np.where(denom > 0, denom, 1), 0)
        s = np.clip(s, 0.0, 1.0)
        d = np.linalg.norm(ap - s[..., None] * ab, axis=-1)
        best = np.minimum(best, d.min(axis=1))
    return best


def point_set_distance(a, b) -> float:
    """Symmetric Hausdorff distance between two sampled curves (polyline projection)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(max(_segment_distances(a, b).max(), _segment_distances(b, a).max()))


class PTConjugate(NamedTuple):
    forward: Trajectory
    mapped: Trajectory
    attractor_distance: float


def pt_image(traj: Trajectory) -> Trajectory:
    """The PT-mapped curve ``P q(t0 - t)`` with ``t0`` the last sample time.

    It solves ``dq/dt = -P f(P q)``, which equals ``f`` for an n-PT
    symmetric field.
    """
    t0 = traj.t[-1]
    return Trajectory(t0 - traj.t[::-1], traj.model.apply_parity(traj.q[::-1]), traj.model,
                      traj.n_accepted, traj.n_rejected)


def pt_conjugate_trajectory(model: MeanFieldModel, q0, t_end: float = 100.0,
                            late_fraction: float = 0.5, **kwargs) -> PTConjugate:
    """Compare the attractor of ``q0`` with its PT image.

    ``forward`` starts at ``q0`` under ``f``. ``mapped`` starts at ``P q0``
    under ``P f(P q)`` and therefore traces ``P q(t)``; read backwards in time
    it is the solution ``P q(t0 - t)`` of the reversed field. Integrating it
    forward keeps the step control identical and avoids following an
    unstable direction. ``attractor_distance`` is the symmetric point-set
    distance between the last ``late_fraction`` of both, on Bloch vectors:
    small when the attractor is mapped onto itself, large when PT sends it to
    a different invariant set.
    """
    forward = integrate(model, q0, t_end, **kwargs)
    mapped = integrate(model, model.apply_parity(q0), t_end, field="conjugated", **kwargs)
    t_min = (1 - late_fraction) * t_end
    a = model.to_bloch(forward.after(t_min).q)
    b = model.to_bloch(mapped.after(t_min).q)
    return PTConjugate(forward, mapped, point_set_distance(a, b))


def orbit_return(model: MeanFieldModel, q0, t_end: float = 100.0, t_min: float = 0.5,
                 stride: float = 0.01, refine_stride: float = 1e-5, **kwargs):
    """Earliest close return of the trajectory to ``q0``.

    Scans the sampled trajectory for the first local minimum of
    ``|q(t) - q0|`` after ``t_min`` that comes within 1e-2, then re-integrates
    around it at ``refine_stride``. Returns ``(t_star, distance)``; if no
    candidate exists the global minimum over ``t >= t_min`` is refined.
    """
    q0 = np.asarray(q0, dtype=float)
    traj = integrate(model, q0, t_end, stride=stride, **kwargs)
    dist = np.linalg.norm(model.to_bloch(traj.q) - model.to_bloch(q0), axis=-1)
    valid = np.flatnonzero(traj.t >= t_min)
    inner = valid[(valid > 0) & (valid < len(dist) - 1)]
    is_min = (dist[inner] <= dist[inner - 1]) & (dist[inner] <= dist[inner + 1]) & (dist[inner] < 1e-2)
    if np.any(is_min):
        i = int(inner[np.argmax(is_min)])
    else:
        i = int(valid[np.argmin(dist[valid])])
    lo = max(i - 1, 0)
    span = traj.t[min(i + 1, len(traj.t) - 1)] - traj.t[lo]
    if span <= 0:
        return float(traj.t[i]), float(dist[i])
    fine = integrate(model, traj.q[lo], span, stride=refine_stride, **kwargs)
    fd = np.linalg.norm(model.to_bloch(fine.q) - model.to_bloch(q0), axis=-1)
    j = int(np.argmin(fd))
    return float(traj.t[lo] + fine.t[j]), float(fd[j])
