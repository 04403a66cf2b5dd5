"""
Lattice sampling and atomic decomposition on the half-plane.

``sampling_check`` compares ``‖{f(ζ_j) Δ^{(ν+n/r)/p}(Im ζ_j)}‖_{ℓ^p}`` with
``‖f‖_{p,ν}``; ``atomic_fit`` expands ``f`` in the kernel atoms
``K_σ(·, ζ_j) Δ^{σ+n/r-(ν+n/r)/2}(Im ζ_j)`` by weighted least squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UnsupportedBackendError
from .geometry import Lattice, kernel
from .measures import KernelFunction
from .quadrature import disc_rule

__all__ = ["FitResult", "SamplingResult", "atomic_fit", "sampling_check", "ZeroFunction", "MAX_FIT_NODES"]

MAX_FIT_NODES = 200
# least-squares grid on the whole half-plane
FIT_RHO = 64
FIT_THETA = 256


class ZeroFunction:
    """The zero function (``‖0‖_{p,ν} = 0``)."""

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.zeros(z.shape[:-1] if z.ndim and z.shape[-1] == 1 else z.shape, dtype=complex)

    def norm_p(self, p, nu):
        return 0.0


def _require_halfline(lattice: Lattice):
    if lattice.backend.n != 1:
        raise UnsupportedBackendError("sampling and atomic fits are implemented on the half-plane only")


def _atoms(lattice: Lattice, sigma: float, nu: float, z) -> np.ndarray:
    b = lattice.backend
    nodes = lattice.nodes
    expo = sigma + b.n_over_r - 0.5 * (nu + b.n_over_r)
    K = np.asarray(kernel(b, sigma, z[:, None, :], nodes[None, :, :]), dtype=complex)
    return K * b.det(nodes.imag)[None, :] ** expo


@dataclass
class FitResult:
    coefficients: np.ndarray
    residual: float
    coefficient_ratio: float
    condition: float
    rank: int

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "coefficient_ratio": self.coefficient_ratio,
            "condition": self.condition,
            "rank": self.rank,
            "coefficients": [[float(c.real), float(c.imag)] for c in self.coefficients],
        }


def atomic_fit(f, lattice: Lattice, sigma: float, nu: float, rcond: float = 1e-12) -> FitResult:
    """Least-squares atomic expansion of ``f`` in ``A²_ν``.

    The residual is measured in ``‖·‖_{2,ν}`` on a whole-plane rule.
    Singular values below ``rcond·s_max`` are dropped (the reported
    ``condition`` is that of the full system).

    Returns
    -------
    FitResult
        ``residual = ‖f - Σλ_j a_j‖ / ‖f‖`` and
        ``coefficient_ratio = ‖λ‖_{ℓ²} / ‖f‖_{2,ν}``.
    """
    _require_halfline(lattice)
    lattice.backend.check_nu(nu)
    if len(lattice) > MAX_FIT_NODES:
        raise ParameterError(f"atomic_fit supports at most {MAX_FIT_NODES} lattice nodes, got {len(lattice)}")
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    z, w = disc_rule(float(nu), FIT_RHO, FIT_THETA)
    z = z[:, None]
    sw = np.sqrt(w)
    A = _atoms(lattice, sigma, nu, z) * sw[:, None]
    rhs = np.asarray(f(z), dtype=complex).reshape(-1) * sw
    fnorm = float(np.linalg.norm(rhs))
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    keep = s > rcond * s[0]
    coef = Vh[keep].conj().T @ ((U[:, keep].conj().T @ rhs) / s[keep])
    res = float(np.linalg.norm(rhs - A @ coef))
    cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
    if fnorm == 0.0:
        return FitResult(np.zeros(len(lattice), dtype=complex), 0.0, 0.0, cond, int(keep.sum()))
    return FitResult(coef, res / fnorm, float(np.linalg.norm(coef)) / fnorm, cond, int(keep.sum()))


@dataclass
class SamplingResult:
    lattice_norm: float
    function_norm: float

    @property
    def ratio(self) -> float:
        if self.function_norm == 0.0:
            return math.nan
        return self.lattice_norm / self.function_norm

    def to_dict(self) -> dict:
        return {"lattice_norm": self.lattice_norm, "function_norm": self.function_norm, "ratio": self.ratio}


def sampling_check(f, lattice: Lattice, p: float, nu: float) -> SamplingResult:
    """Lattice ``ℓ^p`` norm of ``f(ζ_j) Δ^{(ν+n/r)/p}(Im ζ_j)`` against ``‖f‖_{p,ν}``.

    ``f`` must provide ``norm_p(p, nu)`` (kernel test functions compute it
    from the determinant-integral law).
    """
    _require_halfline(lattice)
    lattice.backend.check_nu(nu)
    if not p > 0:
        raise ParameterError("p must be positive")
    b = lattice.backend
    vals = np.abs(np.asarray(f(lattice.nodes), dtype=complex).reshape(-1))
    vals = vals * b.det(lattice.nodes.imag) ** ((nu + b.n_over_r) / p)
    s = math.fsum((vals**p).tolist())
    return SamplingResult(s ** (1.0 / p) if s > 0 else 0.0, float(f.norm_p(p, nu)))


def kernel_test_function(backend, sigma, u, coef=1.0) -> KernelFunction:
    return KernelFunction.at(backend, sigma, u, coef)
