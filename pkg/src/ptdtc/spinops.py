"""Collective-spin operators in the Dicke basis, parity, and PT checks.

Matrices are plain ``complex128`` NumPy arrays. The Dicke basis is ordered
from the top state ``|S, S>`` down to ``|S, -S>``, so ``m_z`` is diagonal
with entries ``1, (S-1)/S, ..., -1``.

Operators are normalized as ``m_a = S_a / S`` (so ``m_a`` for spin 1/2 are
the Pauli matrices) and ``m_pm = m_x +- i m_y``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "SpinBasis",
    "SpinModel",
    "SpinOperators",
    "build_spin_operators",
    "build_parity",
    "pt_transform",
    "check_lpt_symmetry",
    "LPTCheck",
    "ddm_model",
    "lmg_model",
    "waveguide_model",
    "build_spin_model",
    "SPIN_MODELS",
]

LPT_DENSE_SPIN_LIMIT = 60


@dataclass(frozen=True)
class SpinBasis:
    """Dicke basis of a single collective spin, stored as the integer ``2S``."""

    twice_spin: int

    def __post_init__(self):
        if int(self.twice_spin) != self.twice_spin or self.twice_spin < 1:
            raise ValueError(f"2S must be a positive integer, got {self.twice_spin!r}")
        object.__setattr__(self, "twice_spin", int(self.twice_spin))

    @classmethod
    def from_spin(cls, spin) -> "SpinBasis":
        """Build from ``S`` given as int, float or Fraction (half-integers only)."""
        twice = Fraction(spin).limit_denominator(2) * 2
        if twice.denominator != 1 or abs(float(twice) - 2 * float(spin)) > 1e-12:
            raise ValueError(f"spin must be a half-integer, got {spin!r}")
        return cls(int(twice))

    @property
    def spin(self) -> float:
        return self.twice_spin / 2

    @property
    def dim(self) -> int:
        return self.twice_spin + 1

    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers ``S, S-1, ..., -S``."""
        return (self.twice_spin - 2 * np.arange(self.dim)) / 2.0


class SpinOperators(NamedTuple):
    m_x: np.ndarray
    m_y: np.ndarray
    m_z: np.ndarray
    m_plus: np.ndarray
    m_minus: np.ndarray


def build_spin_operators(basis: SpinBasis) -> SpinOperators:
    """Normalized collective spin operators ``m_a = S_a / S``."""
    S = basis.spin
    m = basis.m_values()
    # <m+1| S_+ |m> = sqrt(S(S+1) - m(m+1)); row index of m+1 is one above m
    ladder = np.sqrt(S * (S + 1) - m[1:] * (m[1:] + 1))
    s_plus = np.diag(ladder, k=1).astype(complex)
    s_minus = s_plus.T.copy()
    m_plus = s_plus / S
    m_minus = s_minus / S
    m_x = (m_plus + m_minus) / 2
    m_y = (m_plus - m_minus) / 2j
    m_z = np.diag(m / S).astype(complex)
    return SpinOperators(m_x, m_y, m_z, m_plus, m_minus)


def build_parity(basis: SpinBasis) -> np.ndarray:
    """Parity ``P = i^{2S} exp(i pi S m_x)``: a pi rotation about x.

    Built from the eigendecomposition of ``S_x``. The result is real,
    symmetric and squares to the identity; numerical dust below 1e-10 in the
    imaginary part is removed.
    """
    s_x = build_spin_operators(basis).m_x * basis.spin
    evals, evecs = np.linalg.eigh(s_x)
    phase = (1j) ** basis.twice_spin
    P = phase * (evecs * np.exp(1j * np.pi * evals)) @ evecs.conj().T
    P = (P + P.conj().T) / 2
    if np.linalg.norm(P.imag) < 1e-10:
        P = P.real.astype(complex)
    return P


def pt_transform(O: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Apply ``PT(O) = P T O^dag (PT)^-1`` with ``T`` complex conjugation.

    In the fixed Dicke basis this is ``P O^T P^-1``; ``P^-1 = P`` for the
    parity built by :func:`build_parity`.
    """
    O = np.asarray(O)
    P = np.asarray(P)
    if O.ndim != 2 or O.shape[0] != O.shape[1] or O.shape != P.shape:
        raise ValueError(f"dimension mismatch: O {O.shape}, P {P.shape}")
    P_inv = P if _is_involution(P) else np.linalg.inv(P)
    return P @ O.T @ P_inv


def _is_involution(P, tol=1e-12):
    return np.linalg.norm(P @ P - np.eye(P.shape[0])) < tol * P.shape[0]


@dataclass
class SpinModel:
    """Finite-size GKSL generator: Hamiltonian and jump operators on one basis.

    Rates follow the factor-2 dissipator convention
    ``D[L] rho = 2 L rho L^dag - {L^dag L, rho}``.
    """

    basis: SpinBasis
    hamiltonian: np.ndarray
    jumps: list = field(default_factory=list)
    label: str = "custom"

    def __post_init__(self):
        d = self.basis.dim
        H = np.asarray(self.hamiltonian, dtype=complex)
        if H.shape != (d, d):
            raise ValueError(f"Hamiltonian shape {H.shape} does not match basis dim {d}")
        scale = max(np.linalg.norm(H), 1.0)
        if np.linalg.norm(H - H.conj().T) > 1e-12 * scale:
            raise ValueError("Hamiltonian is not Hermitian")
        jumps = [np.asarray(L, dtype=complex) for L in self.jumps]
        for L in jumps:
            if L.shape != (d, d):
                raise ValueError(f"jump operator shape {L.shape} does not match basis dim {d}")
        self.hamiltonian = H
        self.jumps = jumps

    @property
    def dim(self) -> int:
        return self.basis.dim


class LPTCheck(NamedTuple):
    residual: float
    symmetric: bool


def check_lpt_symmetry(model: SpinModel, tol: float = 1e-10) -> LPTCheck:
    """Compare the Lindbladian of ``{PT(H); PT(L_mu)}`` with that of ``{H; L_mu}``.

    The residual is ``||L_PT - L|| / ||L||`` (Frobenius). Summing the
    dissipators over all jumps makes any relabeling of the jump set
    irrelevant.
    """
    from .liouville import build_liouvillian

    if model.basis.spin > LPT_DENSE_SPIN_LIMIT:
        raise ValueError(f"dense L-PT check limited to S <= {LPT_DENSE_SPIN_LIMIT}")
    limit = model.dim ** 2
    P = build_parity(model.basis)
    transformed = SpinModel(
        model.basis,
        pt_transform(model.hamiltonian, P),
        [pt_transform(L, P) for L in model.jumps],
        label=f"PT({model.label})",
    )
    ref = build_liouvillian(model, dense_limit=limit).matrix
    new = build_liouvillian(transformed, dense_limit=limit).matrix
    scale = np.linalg.norm(ref)
    residual = float(np.linalg.norm(new - ref) / scale) if scale > 0 else 0.0
    return LPTCheck(residual, residual < tol)


# --- model cards -----------------------------------------------------------

def _basis(spin) -> SpinBasis:
    return spin if isinstance(spin, SpinBasis) else SpinBasis.from_spin(spin)


def _extra(ops: SpinOperators, S: float, extra_jumps) -> list:
    names = {"m_x": ops.m_x, "m_y": ops.m_y, "m_z": ops.m_z,
             "m_plus": ops.m_plus, "m_minus": ops.m_minus}
    out = []
    for name, rate in (extra_jumps or {}).items():
        if name not in names:
            raise ValueError(f"unknown jump operator {name!r}; choose from {sorted(names)}")
        if rate < 0:
            raise ValueError("jump rates must be non-negative")
        out.append(np.sqrt(rate * S) * names[name])
    return out


def ddm_model(spin, g: float, omega: float, kappa: float,
              extra_jumps: dict | None = None, break_symmetry: float = 0.0) -> SpinModel:
    """Generalized driven Dicke model ``H = S(2g m_x + w m_z^2)``, ``L = sqrt(kS) m_-``.

    ``extra_jumps`` maps operator names (``m_x``, ``m_plus``, ...) to rates;
    each adds ``sqrt(rate S) m_a``. ``break_symmetry`` adds ``eps S m_z`` to H,
    which is PT-odd.
    """
    basis = _basis(spin)
    S = basis.spin
    ops = build_spin_operators(basis)
    H = S * (2 * g * ops.m_x + omega * ops.m_z @ ops.m_z) + break_symmetry * S * ops.m_z
    jumps = [np.sqrt(kappa * S) * ops.m_minus] + _extra(ops, S, extra_jumps)
    return SpinModel(basis, H, jumps, label="ddm")


def lmg_model(spin, g: float, kappa: float, extra_jumps: dict | None = None) -> SpinModel:
    """Dissipative LMG model ``H = g S (m_+^2 + m_-^2) / 2``, ``L = sqrt(kS) m_-``.

    Equivalently ``H = g (S_+^2 + S_-^2) / (2S)`` in unnormalized spin
    operators; this is the normalization whose large-S limit is the LMG
    mean-field flow in :mod:`ptdtc.meanfield`.
    """
    basis = _basis(spin)
    S = basis.spin
    ops = build_spin_operators(basis)
    H = g * S * (ops.m_plus @ ops.m_plus + ops.m_minus @ ops.m_minus) / 2
    jumps = [np.sqrt(kappa * S) * ops.m_minus] + _extra(ops, S, extra_jumps)
    return SpinModel(basis, H, jumps, label="lmg")


def waveguide_model(spin, g: float, omega: float, gamma: float,
                    extra_jumps: dict | None = None) -> SpinModel:
    """Emitters coupled to a waveguide; Hamiltonian without a Z2 symmetry.

    ``H = S(2g m_x - w gamma {m_x, m_y})`` with jumps
    ``sqrt(gamma S/2) ((2w+1) m_x - i m_y)`` and ``sqrt(gamma S/2) m_-``.
    """
    basis = _basis(spin)
    S = basis.spin
    ops = build_spin_operators(basis)
    anti = ops.m_x @ ops.m_y + ops.m_y @ ops.m_x
    H = S * (2 * g * ops.m_x - omega * gamma * anti)
    pref = np.sqrt(gamma * S / 2)
    jumps = [pref * ((2 * omega + 1) * ops.m_x - 1j * ops.m_y), pref * ops.m_minus]
    jumps += _extra(ops, S, extra_jumps)
    return SpinModel(basis, H, jumps, label="waveguide")


SPIN_MODELS = {
    "ddm": (ddm_model, ("g", "omega", "kappa")),
    "lmg": (lmg_model, ("g", "kappa")),
    "waveguide": (waveguide_model, ("g", "omega", "gamma")),
}


def build_spin_model(name: str, spin, params: dict, **extra) -> SpinModel:
    """Look up a finite-size model card by name and build it from ``params``."""
    try:
        factory, keys = SPIN_MODELS[name]
    except KeyError:
        raise ValueError(f"no finite-size card for model {name!r}") from None
    missing = [k for k in keys if k not in params]
    if missing:
        raise ValueError(f"model {name!r} needs parameters {missing}")
    return factory(spin, *(params[k] for k in keys), **extra)
