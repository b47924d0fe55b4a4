"""Lindbladian superoperators, spectra, steady states and density-matrix evolution.

Vectorization is column stacking throughout, ``vec(A X B) = (B^T kron A) vec(X)``,
so ``vec(rho)`` is ``rho.reshape(-1, order="F")``. The dissipator keeps the
factor-2 convention ``D[L] rho = 2 L rho L^dag - {L^dag L, rho}``; with it the
mean-field decay rates read ``2 kappa <m_z>`` without rescaling.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .integrators import dop853
from .spinops import SpinBasis, SpinModel, build_spin_operators

__all__ = [
    "Superoperator",
    "SpectralSummary",
    "SteadyState",
    "SpectrumError",
    "build_liouvillian",
    "spectrum",
    "lindblad_gap",
    "steady_state",
    "evolve_density",
    "DensityTrajectory",
    "expectation",
    "coherent_state",
    "vec",
    "unvec",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 10_000


class SpectrumError(RuntimeError):
    """Eigensolver failure or an inconsistent spectrum."""


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray
    basis: SpinBasis
    vectorization: str = "column"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def norm(self) -> float:
        """Infinity norm (max absolute row sum); bounds the spectral radius."""
        return float(np.abs(self.matrix).sum(axis=1).max())

    def blocks(self) -> list:
        """Index sets of the invariant blocks implied by the sparsity pattern.

        Two vectorized entries share a block when the superoperator couples
        them in either direction; eigenvalues of the blocks together give the
        full spectrum.
        """
        graph = csr_matrix(self.matrix != 0)
        n, labels = connected_components(graph, directed=True, connection="weak")
        order = np.argsort(labels, kind="stable")
        splits = np.flatnonzero(np.diff(labels[order])) + 1
        return np.split(order, splits) if n > 1 else [np.arange(self.dim)]


def build_liouvillian(model: SpinModel, dense_limit: int = DENSE_LIMIT) -> Superoperator:
    """Dense superoperator of ``d rho/dt = -i[H, rho] + sum_mu D[L_mu] rho``.

    Raises ``ValueError`` when ``d^2`` exceeds ``dense_limit``.
    """
    d = model.dim
    if d * d > dense_limit:
        raise ValueError(f"superoperator dimension {d * d} exceeds dense limit {dense_limit}")
    eye = np.eye(d)
    H = model.hamiltonian
    # SpinModel already rejects non-Hermitian H; this guards hand-built instances
    if np.linalg.norm(H - H.conj().T) > 1e-12 * max(np.linalg.norm(H), 1.0):
        raise ValueError("Hamiltonian is not Hermitian")
    out = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for L in model.jumps:
        LdL = L.conj().T @ L
        out += 2 * np.kron(L.conj(), L) - np.kron(eye, LdL) - np.kron(LdL.T, eye)
    sup = Superoperator(out, model.basis)
    trace_row = vec(eye).conj() @ out
    if np.linalg.norm(trace_row) > 1e-10 * max(np.linalg.norm(out), 1.0):
        raise RuntimeError("superoperator is not trace preserving")
    return sup


class SpectralSummary(NamedTuple):
    eigenvalues: np.ndarray
    gap: float
    steady_count: int
    lam_tol: float


def _block_eigvals(sup: Superoperator) -> np.ndarray:
    vals = []
    for idx in sup.blocks():
        block = sup.matrix[np.ix_(idx, idx)]
        try:
            vals.append(scipy.linalg.eigvals(block, overwrite_a=True, check_finite=True))
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SpectrumError(f"eigensolver failed: {exc}") from exc
    ev = np.concatenate(vals)
    if not np.all(np.isfinite(ev)):
        raise SpectrumError("eigensolver returned non-finite eigenvalues")
    return ev


def spectrum(sup: Superoperator, lam_tol: float | None = None) -> SpectralSummary:
    """All eigenvalues sorted by descending real part, the gap and the steady count.

    ``lam_tol`` defaults to ``1e-8 * ||L||``. The gap is ``|Re lambda|`` of the
    eigenvalue with the largest real part among those with ``|lambda| > lam_tol``.
    """
    if lam_tol is None:
        lam_tol = 1e-8 * sup.norm()
    ev = _block_eigvals(sup)
    ev = ev[np.lexsort((-ev.imag, -ev.real))]
    nonzero = np.abs(ev) > lam_tol
    steady = int(np.count_nonzero(~nonzero))
    gap = float(abs(ev[nonzero].real.max())) if np.any(nonzero) else 0.0
    return SpectralSummary(ev, gap, steady, float(lam_tol))


def lindblad_gap(model: SpinModel, lam_tol: float | None = None) -> float:
    return spectrum(build_liouvillian(model), lam_tol).gap


class SteadyState(NamedTuple):
    rho: np.ndarray
    steady_count: int
    degenerate: bool
    residual: float


def steady_state(sup: Superoperator, lam_tol: float | None = None,
                 summary: SpectralSummary | None = None) -> SteadyState:
    """Null vector of the superoperator reshaped into a density matrix.

    The steady count comes from ``summary`` (computed when not given). The
    state itself is the solution of ``L x = 0`` with one row replaced by the
    trace condition, solved on the trace-carrying blocks. When several
    eigenvalues fall below ``lam_tol`` the solution is still the unique
    exact null vector if there is one, and ``degenerate`` is set; this is
    informational near the PT phase, where the gap genuinely closes.
    ``residual`` is ``||L vec(rho)|| / ||L||``.
    """
    if summary is None:
        summary = spectrum(sup, lam_tol)
    if summary.steady_count == 0:
        raise SpectrumError(f"no eigenvalue below lam_tol={summary.lam_tol:.3g}; tolerance too tight")
    d = sup.basis.dim
    trace_vec = vec(np.eye(d))
    x = np.zeros(d * d, dtype=complex)
    idx = np.sort(np.concatenate([b for b in sup.blocks() if np.any(trace_vec[b])]))
    A = sup.matrix[np.ix_(idx, idx)]
    row = int(np.flatnonzero(trace_vec[idx])[0])
    A[row, :] = trace_vec[idx]
    rhs = np.zeros(len(idx), dtype=complex)
    rhs[row] = 1.0
    try:
        x[idx] = scipy.linalg.solve(A, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SpectrumError(f"steady-state solve failed: {exc}") from exc
    rho = unvec(x, d)
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    if not np.all(np.isfinite(rho)):
        raise SpectrumError("steady state is not finite")
    residual = float(np.linalg.norm(sup.matrix @ vec(rho)) / max(np.linalg.norm(sup.matrix), 1e-300))
    count = summary.steady_count
    return SteadyState(rho, count, count > 1, residual)


def _check_density(rho, dim, tol=1e-10):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match dim {dim}")
    if np.linalg.norm(rho - rho.conj().T) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


class DensityTrajectory(NamedTuple):
    t: np.ndarray
    rho: np.ndarray

    def expect(self, O) -> np.ndarray:
        """``tr(O rho(t))`` at every sample."""
        return np.einsum("ij,tji->t", np.asarray(O), self.rho)

    def trace_residual(self) -> np.ndarray:
        return np.abs(np.trace(self.rho, axis1=1, axis2=2) - 1)


def evolve_density(model: SpinModel, rho0, t_end: float, stride: float = 0.1,
                   rtol: float = 1e-10, atol: float = 1e-12) -> DensityTrajectory:
    """Integrate the master equation in operator form with adaptive DOP853.

    Uses ``H_eff = H - i sum L^dag L`` so that
    ``d rho/dt = -i(H_eff rho - rho H_eff^dag) + 2 sum L rho L^dag``.
    Each accepted state is symmetrized to be exactly Hermitian.
    """
    rho0 = _check_density(rho0, model.dim)
    if t_end <= 0 or stride <= 0:
        raise ValueError("t_end and stride must be positive")
    h_eff = model.hamiltonian.copy()
    for L in model.jumps:
        h_eff = h_eff - 1j * (L.conj().T @ L)
    h_eff_dag = h_eff.conj().T
    jumps = [(L, L.conj().T) for L in model.jumps]

    def rhs(rho):
        out = -1j * (h_eff @ rho - rho @ h_eff_dag)
        for L, Ld in jumps:
            out += 2 * (L @ rho @ Ld)
        return out

    def hermitize(rho):
        return (rho + rho.conj().T) / 2

    n = int(np.floor(t_end / stride + 1e-9))
    t = np.arange(n + 1) * stride
    if t[-1] < t_end - 1e-12:
        t = np.append(t, t_end)
    rho = dop853(rhs, rho0, t, rtol=rtol, atol=atol, post_step=hermitize)
    return DensityTrajectory(t, rho)


def expectation(rho, O) -> complex:
    """``tr(O rho)``."""
    rho = np.asarray(rho)
    O = np.asarray(O)
    if rho.shape != O.shape or rho.ndim != 2:
        raise ValueError(f"dimension mismatch: rho {rho.shape}, O {O.shape}")
    return complex(np.einsum("ij,ji->", O, rho))


def coherent_state(basis: SpinBasis, m) -> np.ndarray:
    """Spin-coherent density matrix whose Bloch vector ``<m>`` points along ``m``."""
    m = np.asarray(m, dtype=float)
    m = m / np.linalg.norm(m)
    theta = np.arccos(np.clip(m[2], -1, 1))
    phi = np.arctan2(m[1], m[0])
    ops = build_spin_operators(basis)
    S = basis.spin
    top = np.zeros(basis.dim, dtype=complex)
    top[0] = 1
    psi = scipy.linalg.expm(-1j * phi * S * ops.m_z) @ (scipy.linalg.expm(-1j * theta * S * ops.m_y) @ top)
    return np.outer(psi, psi.conj())
