"""Representation-theoretic building blocks for spectra on the 3-sphere.

The frame fields X_i dual to the invariant coframe satisfy
[X_1, X_2] = -2 X_3 (cyclic); this follows from d(eta_3) = 2 eta_1 ^ eta_2
through d eta(X, Y) = -eta([X, Y]) and is checked by a unit test rather than
assumed.  On the spin-j block of matrix coefficients the X_i therefore act by
matrices A_i with [A_1, A_2] = -2 A_3; we take A_i = 2i J_i with the standard
hermitian spin matrices J_i, and for spin 1 also provide the real
(cartesian) basis A_i = -2 L_i, in which the adjoint representation of the
group evaluates to the plain rotation matrix.

Matrix coefficients are normalised by Schur orthogonality with
int |pi^j_{mn}|^2 = 1/(2j+1) over the normalised Haar measure; the left
regular representation then carries each spin-j block with multiplicity
2j+1 (one copy per row index).

Group elements are unit quaternions (w, x, y, z).  A coefficient function
with coefficient array c on the spin-j block evaluates to
sum_{mn} c_{mn} pi^j(q)_{mn}, where pi^j is the representation matrix whose
right-translation generators are -A_i; with that convention the frame
derivative of a coefficient function is X_m f <-> c @ A_m^T.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

from .triples import SO3_GENERATORS


def spin_matrices(j: float):
    """Hermitian spin-j matrices (J1, J2, J3) with [J1, J2] = i J3."""
    n = int(round(2 * j)) + 1
    if abs(2 * j - round(2 * j)) > 1e-12 or j < 0:
        raise ValueError("spin must be a non-negative half-integer")
    m = j - np.arange(n)  # weights j, j-1, ..., -j
    Jz = np.diag(m).astype(complex)
    Jp = np.zeros((n, n), dtype=complex)
    for a in range(1, n):
        mm = m[a]
        Jp[a - 1, a] = math.sqrt(j * (j + 1) - mm * (mm + 1))
    Jm = Jp.conj().T
    Jx = 0.5 * (Jp + Jm)
    Jy = -0.5j * (Jp - Jm)
    return Jx, Jy, Jz


def frame_generators(j: float, basis: str = "weight"):
    """Matrices A_i of the frame fields X_i on the spin-j coefficient block.

    Skew-hermitian, with [A_1, A_2] = -2 A_3 (cyclic).  ``cartesian`` is the
    real so(3) basis, available for j = 1 only.
    """
    if basis == "cartesian":
        if abs(j - 1.0) > 1e-12:
            raise ValueError("cartesian basis is specific to spin 1")
        return tuple((-2.0 * L).astype(complex) for L in SO3_GENERATORS)
    return tuple(2j * J for J in spin_matrices(j))


def half_integers(max_j: float):
    """0, 1/2, 1, ..., max_j."""
    out = []
    k = 0
    while k / 2.0 <= max_j + 1e-12:
        out.append(k / 2.0)
        k += 1
    return out


# ---------------------------------------------------------------------------
# group elements and representation matrices
# ---------------------------------------------------------------------------

def random_unit_quaternions(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def quat_mul(p, q) -> np.ndarray:
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ])


def adjoint_matrix(q) -> np.ndarray:
    """Rotation matrix of x -> q x q^{-1} on imaginary quaternions."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def group_matrix(q, j: float, basis: str = "weight") -> np.ndarray:
    """pi^j(q) for the unit quaternion q = cos(theta) + sin(theta) n . e.

    Defined as expm(theta sum_m n_m B_m) with B_m = -A_m, so that evaluation
    is compatible with the frame-derivative convention X_m f <-> c @ A_m^T.
    """
    w, x, y, z = (float(v) for v in q)
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    w, x, y, z = w / norm, x / norm, y / norm, z / norm
    s = math.sqrt(x * x + y * y + z * z)
    n_dim = int(round(2 * j)) + 1
    if s < 1e-300:
        if w > 0:
            return np.eye(n_dim, dtype=complex)
        # q = -1: scalar (-1)^{2j}
        return ((-1.0) ** int(round(2 * j))) * np.eye(n_dim, dtype=complex)
    theta = math.atan2(s, w)
    n = np.array([x, y, z]) / s
    A = frame_generators(j, basis=basis)
    gen = -(n[0] * A[0] + n[1] * A[1] + n[2] * A[2])
    return expm(theta * gen)


# ---------------------------------------------------------------------------
# coefficient functions on a single spin block
# ---------------------------------------------------------------------------

def coefficient_value(c: np.ndarray, q, j: float, basis: str = "weight") -> complex:
    """Evaluate sum_{mn} c_{mn} pi^j(q)_{mn}."""
    return complex(np.sum(np.asarray(c) * group_matrix(q, j, basis)))


def frame_derivative(c: np.ndarray, m: int, j: float, basis: str = "weight") -> np.ndarray:
    """Coefficient array of X_m applied to a spin-j coefficient function."""
    A = frame_generators(j, basis=basis)
    return np.asarray(c) @ A[m].T


def schur_norm_sq(c: np.ndarray, j: float) -> float:
    """L^2 norm squared of a coefficient function, normalised Haar measure."""
    return float(np.sum(np.abs(np.asarray(c)) ** 2) / (2 * j + 1))
