"""Fixed points, reduced Jacobians, phase labels and critical exceptional points.

Fixed points come from closed forms where they exist, supplemented by a
damped Newton search from 12 seeds on the constraint manifold. Linear
stability is analysed on a 2-D chart of the manifold: for spins the default
chart is ``(m_y, m_z)`` with ``m_x`` eliminated through the sphere, for the
lattice ``(r_B, dtheta)`` with ``r_A`` eliminated.

At a PT-symmetric fixed point the reduced Jacobian has the off-diagonal form
``[[0, alpha], [beta, 0]]`` with eigenvalues ``+-sqrt(alpha beta)``: a center
when ``alpha beta < 0``, a saddle when ``alpha beta > 0``. A critical
exceptional point (CEP) is where the two eigenvectors coalesce onto a zero
mode; when ``alpha`` and ``beta`` vanish together the Jacobian is zero and
there is no CEP.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .meanfield import MeanFieldModel, schwinger_map

__all__ = [
    "FixedPoint",
    "StabilityReport",
    "PhasePoint",
    "Classification",
    "CEPResult",
    "PairAnalysis",
    "PhaseBoundary",
    "ChartError",
    "ClassificationError",
    "closed_form_fixed_points",
    "find_fixed_points",
    "reduced_jacobian",
    "classify_fixed_point",
    "cep_metric",
    "stability_report",
    "pt_broken_pair_analysis",
    "phase_classify",
    "find_phase_boundaries",
    "meanfield_gap",
    "nonhermitian_pt_demo",
    "DemoResult",
    "CLASS_TOL",
    "CEP_THRESHOLD",
    "CEP_EIG_TOL",
]

CLASS_TOL = 1e-7
CEP_THRESHOLD = 0.999
# a metric of 0.999 on [[0, a], [b, 0]] already forces |lambda| ~ 0.02 ||J||
CEP_EIG_TOL = 0.05
FP_RESIDUAL_TOL = 1e-10
DEDUP_DIST = 1e-6
PT_FLAG_TOL = 1e-9
POLE_TOL = 1e-8
AUTO_CHART_MIN = 1e-3


class ChartError(ValueError):
    """The requested chart is singular at this point."""


class ClassificationError(RuntimeError):
    """No fixed points were found, so no phase can be assigned."""


def _serial(x):
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return [_serial(v) for v in x.tolist()] if x.dtype.kind == "c" else x.tolist()
    if isinstance(x, (list, tuple)):
        return [_serial(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


@dataclass
class FixedPoint:
    coords: np.ndarray
    residual: float
    pt_symmetric: bool
    source: str
    label: str = ""

    def to_dict(self) -> dict:
        return {"coords": _serial(self.coords), "residual": self.residual,
                "pt_symmetric": bool(self.pt_symmetric), "source": self.source,
                "label": self.label}


# --- fixed points -----------------------------------------------------------

def _ddm_closed(g, w, k):
    out = []
    if g > 0 and abs(k) <= g:
        my = k / g
        mx = math.sqrt(max(0.0, 1 - my * my))
        out += [((mx, my, 0.0), "m_+,PT"), ((-mx, my, 0.0), "m_-,PT")]
    D = k * k + w * w
    if D > 0 and D >= g * g:
        mz = math.sqrt(max(0.0, 1 - g * g / D))
        base = (g * w / D, g * k / D)
        out += [((*base, mz), "m_+,PTb"), ((*base, -mz), "m_-,PTb")]
    return out


def _lmg_closed(g, k):
    out = [((0.0, 0.0, 1.0), "m_+,PTb"), ((0.0, 0.0, -1.0), "m_-,PTb")]
    if g > 0 and 0 <= k <= g:
        root = math.sqrt(max(0.0, 1 - (k / g) ** 2))
        mp = math.sqrt((1 + root) / 2)
        mm = math.sqrt((1 - root) / 2)
        out += [((mp, mm, 0.0), "m_1,PT"), ((-mp, -mm, 0.0), "m_2,PT"),
                ((mm, mp, 0.0), "m_3,PT"), ((-mm, -mp, 0.0), "m_4,PT")]
    return out


def _waveguide_closed(g, w, gam):
    out = []
    if gam == 0:
        return out
    k = 2 * w + 1
    # m_z = 0 branch: 2 gamma w m_y^2 - g m_y + gamma = 0
    a, b, c = 2 * gam * w, -g, gam
    if a == 0:
        ys = [-c / b] if b != 0 else []
    else:
        disc = b * b - 4 * a * c
        ys = [] if disc < 0 else sorted({(-b + s * math.sqrt(disc)) / (2 * a) for s in (1, -1)})
    for i, y in enumerate(ys):
        if abs(y) <= 1:
            x = math.sqrt(max(0.0, 1 - y * y))
            out += [((x, y, 0.0), f"m_+,PT{i}"), ((-x, y, 0.0), f"m_-,PT{i}")]
    if k != 0 and abs(g / (gam * k)) <= 1:
        y = g / (gam * k)
        z = math.sqrt(max(0.0, 1 - y * y))
        out += [((0.0, y, z), "m_+,PTb"), ((0.0, y, -z), "m_-,PTb")]
    return out


def _lattice_closed(g, w, k):
    out = []
    for m, label in _ddm_closed(g, w / 2, k / 2):
        ps = schwinger_map(np.array(m))
        if ps.r_a < 1e-12 or ps.r_b < 1e-12:
            continue
        out.append(((float(ps.r_a), float(ps.r_b), float(ps.dtheta)), label))
    return out


def closed_form_fixed_points(model: MeanFieldModel) -> list:
    """``(coords, label)`` pairs from the closed forms, real and on-manifold only."""
    p = model.params
    if model.name == "ddm":
        cands = _ddm_closed(p["g"], p["omega"], p["kappa"])
    elif model.name == "lmg":
        cands = _lmg_closed(p["g"], p["kappa"])
    elif model.name == "waveguide":
        cands = _waveguide_closed(p["g"], p["omega"], p["gamma"])
    else:
        cands = _lattice_closed(p["g"], p["omega"], p["kappa"])
    return [(np.array(c, dtype=float), label) for c, label in cands]


def _fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = math.pi * (3 - math.sqrt(5)) * i
    r = np.sqrt(1 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def newton_seeds(model: MeanFieldModel, n: int = 12) -> np.ndarray:
    """Quasi-uniform seeds on the constraint manifold."""
    pts = _fibonacci_sphere(n)
    if model.name != "lattice":
        return pts
    ps = schwinger_map(pts)
    return np.column_stack([ps.r_a, ps.r_b, ps.dtheta])


def _is_pt_symmetric(model, q):
    return bool(np.max(np.abs(model.apply_parity(q) - q)) < PT_FLAG_TOL)


def _residual(model, q):
    return float(np.linalg.norm(model.rhs(q)))


def find_fixed_points(model: MeanFieldModel, n_seeds: int = 12, max_iter: int = 50,
                      newton_tol: float = 1e-13) -> list:
    """Closed-form fixed points plus Newton solutions, deduplicated at 1e-6.

    Closed-form candidates are always kept and must have residual below
    1e-10 (``RuntimeError`` otherwise). Newton runs from ``n_seeds`` seeds;
    seeds that do not converge are dropped. Distances are measured between
    Bloch vectors, so lattice phases compare modulo ``2 pi``.
    """
    points = []
    for q, label in closed_form_fixed_points(model):
        res = _residual(model, q)
        if res >= FP_RESIDUAL_TOL:
            raise RuntimeError(f"closed-form fixed point {label} has residual {res:.3g}")
        b = model.to_bloch(q)
        if any(np.linalg.norm(b - model.to_bloch(o.coords)) < 1e-12 for o in points):
            continue
        points.append(FixedPoint(q, res, _is_pt_symmetric(model, q), "closed_form", label))
    seeds = newton_seeds(model, n_seeds)
    qs, res, ok = K.newton_batch(model.kernel_id, model.param_vector, seeds, max_iter, newton_tol)
    for q, r, good in zip(qs, res, ok):
        if not good or not np.all(np.isfinite(q)):
            continue
        r = _residual(model, q)
        if r >= FP_RESIDUAL_TOL:
            continue
        b = model.to_bloch(q)
        if any(np.linalg.norm(b - model.to_bloch(o.coords)) < DEDUP_DIST for o in points):
            continue
        points.append(FixedPoint(q.copy(), r, _is_pt_symmetric(model, q), "newton"))
    return points


# --- reduced Jacobian -------------------------------------------------------

_SPIN_CHARTS = {"yz": 0, "xz": 1, "xy": 2}
_LATTICE_CHARTS = {"rb_theta": 0, "ra_theta": 1}


def _constraint_grad(model, q):
    if model.name == "lattice":
        return np.array([2 * q[0], 2 * q[1], 0.0])
    return 2 * np.asarray(q, dtype=float)


def resolve_chart(model: MeanFieldModel, q, chart: str | None = None) -> str:
    """Pick a chart name; ``None`` is the native chart, ``"auto"`` avoids poles."""
    q = np.asarray(q, dtype=float)
    charts = _LATTICE_CHARTS if model.name == "lattice" else _SPIN_CHARTS
    if chart is None:
        chart = next(iter(charts))
    if chart == "auto":
        for name, e in charts.items():
            if abs(q[e]) >= AUTO_CHART_MIN:
                return name
        return max(charts, key=lambda name: abs(q[charts[name]]))
    if chart not in charts:
        raise ValueError(f"unknown chart {chart!r} for model {model.name!r}; choose from {list(charts)}")
    e = charts[chart]
    if abs(q[e]) < POLE_TOL:
        raise ChartError(f"chart {chart!r} is singular here: eliminated coordinate is {q[e]:.3g}")
    return chart


def _chart_indices(model, chart):
    charts = _LATTICE_CHARTS if model.name == "lattice" else _SPIN_CHARTS
    e = charts[chart]
    kept = [i for i in range(3) if i != e]
    return e, kept


def _ambient_jacobian(model, q):
    J = np.empty((3, 3))
    K.jac3(model.kernel_id, model.param_vector, np.asarray(q, dtype=float), J)
    return J


def _lift(model, q, e, kept, u):
    """Point on the manifold with chart coordinates ``u`` (same branch as ``q``)."""
    out = np.array(q, dtype=float)
    out[kept[0]], out[kept[1]] = u
    if model.name == "lattice":
        rest = 1 - out[kept[0]] ** 2 if kept[0] in (0, 1) else 1 - out[kept[1]] ** 2
    else:
        rest = 1 - u[0] ** 2 - u[1] ** 2
    if rest < 0:
        raise ChartError("finite-difference step left the chart domain")
    out[e] = math.copysign(math.sqrt(rest), q[e])
    return out


def reduced_jacobian(model: MeanFieldModel, fp, method: str = "analytic",
                     chart: str | None = None) -> np.ndarray:
    """2x2 Jacobian of the flow restricted to the constraint manifold.

    ``fp`` is a :class:`FixedPoint` or coordinates. ``method="analytic"``
    applies the chain rule to the hand-derived ambient Jacobian;
    ``"finite_difference"`` differentiates the reduced vector field with
    central differences (step 1e-6) and one Richardson extrapolation.
    Raises :class:`ChartError` at a pole of the chart.
    """
    q = np.asarray(getattr(fp, "coords", fp), dtype=float)
    chart = resolve_chart(model, q, chart)
    e, kept = _chart_indices(model, chart)
    if method == "analytic":
        J3 = _ambient_jacobian(model, q)
        grad = _constraint_grad(model, q)
        dqe = -grad[kept] / grad[e]
        return np.array([[J3[a, b] + J3[a, e] * dqe[j] for j, b in enumerate(kept)] for a in kept])
    if method == "finite_difference":
        u0 = q[kept]

        def reduced(u):
            return model.rhs(_lift(model, q, e, kept, u))[kept]

        def central(h):
            cols = []
            for j in range(2):
                du = np.zeros(2)
                du[j] = h
                cols.append((reduced(u0 + du) - reduced(u0 - du)) / (2 * h))
            return np.column_stack(cols)

        h = 1e-6
        return (4 * central(h / 2) - central(h)) / 3
    raise ValueError(f"method must be 'analytic' or 'finite_difference', got {method!r}")


# --- classification ---------------------------------------------------------

class Classification(NamedTuple):
    label: str
    eigenvalues: np.ndarray
    alpha: float | None
    beta: float | None


def classify_fixed_point(J, tol: float = CLASS_TOL, scale: float = 1.0) -> Classification:
    """Label a 2x2 reduced Jacobian.

    center: both ``|Re lambda| < tol ||J||`` and ``|Im lambda| > tol ||J||``;
    stable / unstable: both real parts below ``-tol ||J||`` / above
    ``tol ||J||``; saddle: real eigenvalues of opposite sign; degenerate:
    ``||J|| < tol * scale`` or any marginal case left over. ``alpha = J12``
    and ``beta = J21`` are reported when the diagonal vanishes.
    """
    J = np.asarray(J, dtype=float)
    if J.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {J.shape}")
    nrm = float(np.linalg.norm(J))
    lam = np.linalg.eigvals(J)
    lam = lam[np.lexsort((lam.real, -lam.imag))]
    eps = tol * nrm
    alpha = beta = None
    if abs(J[0, 0]) <= eps and abs(J[1, 1]) <= eps:
        alpha, beta = float(J[0, 1]), float(J[1, 0])
    if nrm < tol * scale:
        return Classification("degenerate", lam, alpha, beta)
    re, im = lam.real, lam.imag
    if np.all(np.abs(re) < eps) and np.all(np.abs(im) > eps):
        label = "center"
    elif np.all(re < -eps):
        label = "stable"
    elif np.all(re > eps):
        label = "unstable"
    elif np.all(np.abs(im) <= eps) and re.min() < -eps and re.max() > eps:
        label = "saddle"
    else:
        label = "degenerate"
    return Classification(label, lam, alpha, beta)


class CEPResult(NamedTuple):
    metric: float
    is_cep: bool
    degenerate: bool
    eigenvalues: np.ndarray

    @property
    def flag(self) -> str:
        if self.degenerate:
            return "no-CEP-degenerate"
        return "CEP" if self.is_cep else "none"


def cep_metric(J, threshold: float = CEP_THRESHOLD, eig_tol: float = CEP_EIG_TOL,
               tol: float = CLASS_TOL, scale: float = 1.0) -> CEPResult:
    """Eigenvector coalescence ``|<v1, v2>|`` of unit eigenvectors, in ``[0, 1]``.

    A CEP needs ``metric > threshold``, both ``|lambda| < eig_tol ||J||`` and
    ``||J|| >= tol * scale``. A vanishing Jacobian (``alpha = beta = 0``) is
    reported as degenerate with metric NaN rather than as a CEP.
    """
    J = np.asarray(J, dtype=float)
    nrm = float(np.linalg.norm(J))
    if not np.all(np.isfinite(J)):
        raise ValueError("Jacobian has non-finite entries")
    if nrm < tol * scale or nrm == 0:
        return CEPResult(float("nan"), False, True, np.zeros(2, dtype=complex))
    lam, vecs = np.linalg.eig(J)
    v1 = vecs[:, 0] / np.linalg.norm(vecs[:, 0])
    v2 = vecs[:, 1] / np.linalg.norm(vecs[:, 1])
    metric = float(min(1.0, abs(np.vdot(v1, v2))))
    small = bool(np.all(np.abs(lam) < eig_tol * nrm))
    return CEPResult(metric, metric > threshold and small, False, lam)


@dataclass
class StabilityReport:
    """Linear stability of one fixed point on a chart of the manifold."""

    fixed_point: FixedPoint
    chart: str
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    classification: str
    alpha: float | None
    beta: float | None
    cep_metric: float
    cep_flag: str

    def to_dict(self) -> dict:
        d = self.fixed_point.to_dict()
        d.update({
            "chart": self.chart,
            "jacobian": _serial(self.jacobian),
            "eigenvalues": _serial(np.asarray(self.eigenvalues, dtype=complex)),
            "class": self.classification,
            "alpha": self.alpha,
            "beta": self.beta,
            "cep_metric": None if math.isnan(self.cep_metric) else self.cep_metric,
            "cep_flag": self.cep_flag,
        })
        return d


def stability_report(model: MeanFieldModel, fp: FixedPoint, method: str = "analytic",
                     chart: str | None = "auto", tol: float = CLASS_TOL,
                     threshold: float = CEP_THRESHOLD, eig_tol: float = CEP_EIG_TOL) -> StabilityReport:
    chart = resolve_chart(model, fp.coords, chart)
    J = reduced_jacobian(model, fp, method, chart)
    scale = model.rate_scale()
    cls = classify_fixed_point(J, tol, scale)
    cep = cep_metric(J, threshold, eig_tol, tol, scale)
    _, vecs = np.linalg.eig(J)
    return StabilityReport(fp, chart, J, cls.eigenvalues, vecs, cls.label, cls.alpha, cls.beta,
                           cep.metric, cep.flag)


# --- PT-broken pairs --------------------------------------------------------

class PairAnalysis(NamedTuple):
    pair: tuple
    eigenvalues: tuple
    R: tuple
    Q: tuple
    physical: tuple
    classes: tuple
    stable_unstable: bool


def pt_broken_pair_analysis(model: MeanFieldModel, fixed_points: list | None = None,
                            tol: float = CLASS_TOL) -> list:
    """Pair PT-broken fixed points with their parity images and analyse each member.

    For ``J = [[g1, a], [b, g2]]`` the eigenvalues are ``R +- sqrt(R^2 + Q)``
    with ``R = (g1 + g2)/2`` and ``Q = a b - g1 g2``. A member is physical when
    ``g1 g2 > a b`` (``det J > 0``); ``R`` and ``Q`` are chart invariant.
    ``stable_unstable`` is True when one member is stable and the other
    unstable. Raises ``ValueError`` if there are no PT-broken points.
    """
    if fixed_points is None:
        fixed_points = find_fixed_points(model)
    broken = [fp for fp in fixed_points if not fp.pt_symmetric]
    if not broken:
        raise ValueError(f"no PT-broken fixed points for {model.name} at {model.params}")
    used = set()
    out = []
    for i, fp in enumerate(broken):
        if i in used:
            continue
        image = model.to_bloch(model.apply_parity(fp.coords))
        dists = [np.linalg.norm(image - model.to_bloch(o.coords)) for o in broken]
        j = int(np.argmin(dists))
        if dists[j] > DEDUP_DIST or j == i:
            raise RuntimeError("PT-broken fixed point without a parity partner")
        used.update((i, j))
        members = (fp, broken[j])
        # order as (+, -) by the sign of the parity-odd component
        odd = [float(np.dot(model.to_bloch(m.coords), [0, 0, 1])) for m in members]
        if odd[0] < odd[1]:
            members = members[::-1]
        eigs, Rs, Qs, phys, classes = [], [], [], [], []
        for m in members:
            J = reduced_jacobian(model, m, chart="auto")
            cls = classify_fixed_point(J, tol, model.rate_scale())
            eigs.append(cls.eigenvalues)
            Rs.append(float(np.trace(J) / 2))
            Qs.append(float(J[0, 1] * J[1, 0] - J[0, 0] * J[1, 1]))
            phys.append(bool(np.linalg.det(J) > 0))
            classes.append(cls.label)
        out.append(PairAnalysis(members, tuple(eigs), tuple(Rs), tuple(Qs), tuple(phys),
                                tuple(classes), set(classes) == {"stable", "unstable"}))
    return out


# --- phases -----------------------------------------------------------------

@dataclass
class PhasePoint:
    params: dict
    phase: str
    fixed_points: list
    reports: list = field(default_factory=list)

    @property
    def n_symmetric(self) -> int:
        return sum(fp.pt_symmetric for fp in self.fixed_points)

    @property
    def n_broken(self) -> int:
        return sum(not fp.pt_symmetric for fp in self.fixed_points)

    def to_dict(self) -> dict:
        fps = [r.to_dict() for r in self.reports] if self.reports else [fp.to_dict() for fp in self.fixed_points]
        return {"params": dict(self.params), "phase": self.phase, "fixed_points": fps}


def _phase_label(fixed_points):
    sym = any(fp.pt_symmetric for fp in fixed_points)
    brk = any(not fp.pt_symmetric for fp in fixed_points)
    if sym and brk:
        return "PPTB"
    return "PT" if sym else "FPTB"


def phase_classify(model: MeanFieldModel, with_reports: bool = False) -> PhasePoint:
    """PT if only PT-symmetric fixed points exist, FPTB if only broken ones, PPTB if both."""
    fps = find_fixed_points(model)
    if not fps:
        raise ClassificationError(f"no fixed points found for {model.name} at {model.params}")
    reports = [stability_report(model, fp) for fp in fps] if with_reports else []
    return PhasePoint(dict(model.params), _phase_label(fps), fps, reports)


def max_symmetric_cep(model: MeanFieldModel, fixed_points: list | None = None):
    """Largest CEP metric over the PT-symmetric fixed points, with its report (or None)."""
    if fixed_points is None:
        fixed_points = find_fixed_points(model)
    best = None
    for fp in fixed_points:
        if not fp.pt_symmetric:
            continue
        rep = stability_report(model, fp)
        key = -1.0 if math.isnan(rep.cep_metric) else rep.cep_metric
        if best is None or key > best[0]:
            best = (key, rep)
    return None if best is None else best[1]


class PhaseBoundary(NamedTuple):
    value: float
    bracket: tuple
    from_phase: str
    to_phase: str
    report: StabilityReport | None

    @property
    def cep_metric(self) -> float:
        return float("nan") if self.report is None else self.report.cep_metric

    @property
    def cep_flag(self) -> str:
        return "none" if self.report is None else self.report.cep_flag


def find_phase_boundaries(model: MeanFieldModel, param: str, lo: float, hi: float,
                          n_coarse: int = 41, xtol: float = 1e-12) -> list:
    """Locate phase-label changes along ``param`` in ``[lo, hi]``.

    A coarse scan brackets each change; bisection on the label shrinks the
    bracket to ``xtol``. The CEP metric is then taken as the largest one over
    the PT-symmetric fixed points on the side of the bracket that has them.
    """
    if not lo < hi or n_coarse < 2:
        raise ValueError("need lo < hi and n_coarse >= 2")

    def label(v):
        return phase_classify(model.with_params(**{param: v})).phase

    grid = np.linspace(lo, hi, n_coarse)
    labels = [label(v) for v in grid]
    out = []
    for i in range(n_coarse - 1):
        if labels[i] == labels[i + 1]:
            continue
        a, b = float(grid[i]), float(grid[i + 1])
        la, lb = labels[i], labels[i + 1]
        while b - a > xtol:
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            lm = label(mid)
            if lm == la:
                a = mid
            elif lm == lb:
                b = mid
            else:
                # a third phase inside the bracket: keep the lower transition
                b, lb = mid, lm
        rep = None
        for v in (a, b):
            rep = max_symmetric_cep(model.with_params(**{param: v}))
            if rep is not None:
                break
        out.append(PhaseBoundary(0.5 * (a + b), (a, b), la, lb, rep))
    return out


def meanfield_gap(model: MeanFieldModel) -> float:
    """Mean-field relaxation rate: 0 in the PT and PPTB phases.

    In the FPTB phase it is the slowest decay rate ``min |Re lambda|`` at the
    stable fixed point, e.g. ``2 kappa |m_z|`` for the DDM and ``2(kappa - g)``
    for the LMG model.
    """
    pp = phase_classify(model)
    if pp.phase != "FPTB":
        return 0.0
    rates = []
    for fp in pp.fixed_points:
        J = reduced_jacobian(model, fp, chart="auto")
        cls = classify_fixed_point(J, scale=model.rate_scale())
        if cls.label == "stable":
            rates.append(float(np.min(np.abs(cls.eigenvalues.real))))
    return min(rates) if rates else float("nan")


# --- two-level gain/loss ----------------------------------------------------

class DemoResult(NamedTuple):
    hamiltonian: np.ndarray
    eigenvalues: np.ndarray
    regime: str
    eigenvector_overlap: float


def nonhermitian_pt_demo(g: float, gamma: float) -> DemoResult:
    """Balanced gain and loss ``H = [[-i Gamma, g], [g, i Gamma]]``.

    Eigenvalues are ``+-sqrt(g^2 - Gamma^2)``: real (unbroken) for
    ``Gamma < g``, imaginary (broken) for ``Gamma > g``, coalescing at the
    exceptional point ``Gamma = g`` (relative tolerance 1e-12).
    """
    if g < 0 or gamma < 0:
        raise ValueError("g and Gamma must be non-negative")
    H = np.array([[-1j * gamma, g], [g, 1j * gamma]])
    root = np.sqrt(complex(g * g - gamma * gamma))
    eig = np.array([root, -root])
    if g > 0 and abs(gamma - g) < 1e-12 * g:
        regime = "EP"
        eig = np.zeros(2, dtype=complex)
    elif gamma <= g:
        regime = "unbroken"
    else:
        regime = "broken"
    _, vecs = np.linalg.eig(H)
    overlap = abs(np.vdot(vecs[:, 0], vecs[:, 1])) / (np.linalg.norm(vecs[:, 0]) * np.linalg.norm(vecs[:, 1]))
    return DemoResult(H, eig, regime, float(overlap))
