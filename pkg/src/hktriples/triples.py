"""The constraint system on triples of 2-forms.

A triple omega = (omega_1, omega_2, omega_3) of 2-forms is hyperkahler when
each form is closed and the wedge Gram matrix is 2*delta_ij times the volume
element mu = (omega_1^2 + omega_2^2 + omega_3^2)/6.  This module provides the
defect matrix Q, its linearisation P, pointwise metric reconstruction from a
definite triple, the associated complex structures, and the gauge operators
L v = d(i_v omega),  L* theta = (J . d* theta)^sharp.

Conventions.  mu as above equals the metric volume form dV_g of the
reconstructed metric.  J matrices act on frame vectors; on the standard flat
triple they are left multiplication by the imaginary quaternion units, so
J1 J2 = J3 and J1 J2 J3 = -1.  On 1-forms J_i acts by metric transport,
(J_i a)^sharp = J_i (a^sharp); with this convention J.(i_v omega) = -3 v^flat
and the formula for L* is the negative of the L^2 adjoint of L (the kernel,
which is all that is used downstream, is unaffected).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .forms import (
    DT,
    DiagonalMetric,
    MixedForm,
    Scalar,
    as_scalar,
    codifferential,
    ext_d,
    hodge_star,
    inner_product,
    wedge,
)


class DegenerateTripleError(ValueError):
    """Wedge Gram matrix is not definite at the evaluation point."""


class NotClosedError(ValueError):
    """Operation requires a closed triple."""


def _eps(i, j, k):
    if len({i, j, k}) != 3:
        return 0.0
    return float(np.sign((j - i) * (k - j) * (k - i)))


# so(3) generators, L_m x = e_m x x (cross product): (L_m)_{ap} = eps_{mpa}
SO3_GENERATORS = []
for _m in range(3):
    _L = np.zeros((3, 3))
    for _a in range(3):
        for _p in range(3):
            _L[_a, _p] = _eps(_m, _p, _a)
    SO3_GENERATORS.append(_L)


@dataclass(frozen=True)
class TripleField:
    """Three 2-forms with an orientation flag and a frame mode tag.

    ``frame_mode == "rotating"`` marks coefficient triples whose geometric
    realisation is conjugated pointwise by the group element; the conjugation
    acts on the R^3 index only and is materialised in the exterior derivative
    below and in the boundary spectrum module.
    """

    forms: tuple
    orientation: str = "standard"
    frame_mode: str = "fixed"

    def __post_init__(self):
        if len(self.forms) != 3 or any(f.degree != 2 for f in self.forms):
            raise ValueError("a TripleField holds three 2-forms")
        if self.frame_mode not in ("fixed", "rotating"):
            raise ValueError(f"unknown frame mode {self.frame_mode!r}")

    def __iter__(self):
        return iter(self.forms)

    def map(self, fn) -> "TripleField":
        return TripleField(tuple(fn(f) for f in self.forms), self.orientation, self.frame_mode)


def rotating_correction(forms, degree_shift_check=True):
    """-2 sum_m eta_m ^ (L_m acting on the R^3 index)."""
    out = []
    for k in range(3):
        acc = MixedForm.zero(forms[0].degree + 1)
        for m in range(3):
            eta_m = MixedForm.basis(m + 1)
            for j in range(3):
                w = SO3_GENERATORS[m][k, j]
                if w != 0.0:
                    acc = acc + wedge(eta_m, forms[j]) * (-2.0 * w)
        out.append(acc)
    return tuple(out)


def exterior_derivative(triple: TripleField) -> tuple:
    """Componentwise d, plus the conjugation correction in rotating mode."""
    d = tuple(ext_d(f) for f in triple.forms)
    if triple.frame_mode == "fixed":
        return d
    corr = rotating_correction(triple.forms)
    return tuple(d[k] + corr[k] for k in range(3))


def closedness_residual(triple: TripleField) -> float:
    return max(f.max_abs() for f in exterior_derivative(triple))


def volume_form(omega: TripleField) -> MixedForm:
    """mu = (omega_1^2 + omega_2^2 + omega_3^2)/6; errors when it vanishes."""
    acc = MixedForm.zero(4)
    for f in omega.forms:
        acc = acc + wedge(f, f)
    mu = acc * (1.0 / 6.0)
    c = mu.coefficient(0, 1, 2, 3)
    if c.value == 0.0:
        raise DegenerateTripleError("volume form vanishes at evaluation point")
    return mu


def wedge_gram(omega: TripleField) -> np.ndarray:
    """W_ij = (omega_i ^ omega_j) / (dt^eta1^eta2^eta3)."""
    W = np.zeros((3, 3))
    for i in range(3):
        for j in range(i, 3):
            c = wedge(omega.forms[i], omega.forms[j]).coefficient(0, 1, 2, 3)
            W[i, j] = W[j, i] = c.value
    return W


def q_matrix(omega: TripleField) -> np.ndarray:
    """Q_ij = omega_i^omega_j / ((omega_1^2+omega_2^2+omega_3^2)/3) - delta_ij."""
    W = wedge_gram(omega)
    denom = np.trace(W) / 3.0
    if denom == 0.0:
        raise DegenerateTripleError("degenerate denominator in Q")
    return W / denom - np.eye(3)


# ---------------------------------------------------------------------------
# pointwise linear algebra in Lambda^2 R^4
# ---------------------------------------------------------------------------

def form_matrix(f: MixedForm) -> np.ndarray:
    """Antisymmetric matrix B[a,b] = f(X_a, X_b) in the frame dual to {dt, eta_i}."""
    if f.degree != 2:
        raise ValueError("form_matrix expects a 2-form")
    B = np.zeros((4, 4))
    for (a, b), c in f.coeffs.items():
        B[a, b] = c.value
        B[b, a] = -c.value
    return B


def matrix_form(B: np.ndarray) -> MixedForm:
    out = {}
    for a in range(4):
        for b in range(a + 1, 4):
            if B[a, b] != 0.0:
                out[(a, b)] = Scalar(float(B[a, b]))
    return MixedForm(2, out)


def _wedge_pairing(A: np.ndarray, B: np.ndarray) -> float:
    """(alpha ^ beta) / (e0^e1^e2^e3) for 2-forms given as antisymmetric matrices."""
    return (
        A[0, 1] * B[2, 3] - A[0, 2] * B[1, 3] + A[0, 3] * B[1, 2]
        + B[0, 1] * A[2, 3] - B[0, 2] * A[1, 3] + B[0, 3] * A[1, 2]
    )


DEGENERACY_THRESHOLD = 1e-12


def metric_from_definite(omega) -> np.ndarray:
    """Pointwise metric of a definite triple.

    Input: a TripleField (evaluated) or a sequence of three antisymmetric
    4x4 matrices.  Output: the 4x4 SPD matrix g with every omega_i self-dual
    and metric volume equal to (omega_1^2+omega_2^2+omega_3^2)/6.

    Algorithm: normalise against the wedge Gram matrix, build the third
    complex structure by matrix division of the first two normalised forms,
    recover g from g(J3 . , .) = w3 and rescale to the target volume.
    """
    if isinstance(omega, TripleField):
        mats = [form_matrix(f) for f in omega.forms]
    else:
        mats = [np.asarray(B, dtype=float) for B in omega]

    W = np.zeros((3, 3))
    for i in range(3):
        for j in range(i, 3):
            W[i, j] = W[j, i] = _wedge_pairing(mats[i], mats[j])

    orient = 1.0
    evals = np.linalg.eigvalsh(W)
    if evals[-1] < 0:
        orient = -1.0
        W = -W
        evals = -evals[::-1]
    if evals[0] <= DEGENERACY_THRESHOLD * max(abs(evals[-1]), 1e-300):
        raise DegenerateTripleError("wedge Gram matrix is not definite")

    lam, U = np.linalg.eigh(W)
    A = U @ np.diag(lam ** -0.5) @ U.T  # W^{-1/2}
    w = [sum(A[i, j] * mats[j] for j in range(3)) for i in range(3)]
    # now w_i ^ w_j = delta_ij * (orient * frame volume)

    K = -np.linalg.solve(w[0], w[1])  # candidate J3
    g0 = w[2] @ K
    g0 = 0.5 * (g0 + g0.T)
    if np.linalg.eigvalsh(g0)[0] < 0:
        g0 = -g0

    # rescale so that the metric volume matches mu = trace(W)/6 * frame volume
    target = abs(_wedge_pairing(mats[0], mats[0]) + _wedge_pairing(mats[1], mats[1])
                 + _wedge_pairing(mats[2], mats[2])) / 6.0
    det = np.linalg.det(g0)
    if det <= 0:
        raise DegenerateTripleError("metric reconstruction failed (non-positive determinant)")
    g = g0 * (target / math.sqrt(det)) ** 0.5

    _validate_self_dual(mats, g, orient)
    return g


def _validate_self_dual(mats, g, orient, tol=1e-8):
    vol = math.sqrt(np.linalg.det(g)) * orient
    ginv = np.linalg.inv(g)
    for B in mats:
        # (*B)_{ab} = vol/2 * eps_{abcd} g^{cc'} g^{dd'} B_{c'd'} in frame indices
        starB = _star_matrix(B, ginv, vol)
        scale = max(np.abs(B).max(), 1.0)
        if np.abs(starB - B).max() > tol * scale:
            raise DegenerateTripleError("reconstructed metric does not make the triple self-dual")


_EPS4 = np.zeros((4, 4, 4, 4))
for _p in permutations(range(4)):
    _sgn = 1.0
    _lst = list(_p)
    for _i in range(4):
        for _j in range(3 - _i):
            if _lst[_j] > _lst[_j + 1]:
                _lst[_j], _lst[_j + 1] = _lst[_j + 1], _lst[_j]
                _sgn = -_sgn
    _EPS4[_p] = _sgn


def _star_matrix(B: np.ndarray, ginv: np.ndarray, vol: float) -> np.ndarray:
    Braised = ginv @ B @ ginv.T
    return 0.5 * vol * np.einsum("abcd,cd->ab", _EPS4, Braised)


@dataclass(frozen=True)
class ComplexStructureSet:
    """Three frame matrices J_i with the quaternion relations (residual-tested)."""

    J: tuple
    metric: np.ndarray = field(repr=False, default=None)

    def quaternion_residual(self) -> float:
        J1, J2, J3 = self.J
        eye = np.eye(4)
        res = [np.abs(J1 @ J1 + eye).max(), np.abs(J2 @ J2 + eye).max(),
               np.abs(J3 @ J3 + eye).max(), np.abs(J1 @ J2 @ J3 + eye).max()]
        return max(res)


def complex_structures(omega, g) -> ComplexStructureSet:
    """J_i = -g^{-1} B_i, with B_i the frame matrix of omega_i."""
    if isinstance(omega, TripleField):
        mats = [form_matrix(f) for f in omega.forms]
    else:
        mats = [np.asarray(B, dtype=float) for B in omega]
    g = np.asarray(g, dtype=float)
    ginv = np.linalg.inv(g)
    J = tuple(-ginv @ B for B in mats)
    return ComplexStructureSet(J, g)


# ---------------------------------------------------------------------------
# 1-form helpers
# ---------------------------------------------------------------------------

def oneform_components(a: MixedForm) -> np.ndarray:
    if a.degree != 1:
        raise ValueError("expected a 1-form")
    return np.array([a.coefficient(i).value for i in range(4)])


def components_oneform(v) -> MixedForm:
    return MixedForm(1, {(i,): Scalar(float(v[i])) for i in range(4) if v[i] != 0.0})


def j_dot(a_triple, J: ComplexStructureSet, g) -> np.ndarray:
    """J . a = sum_i J_i a_i on a triple of 1-forms, via metric transport.

    Accepts MixedForm 1-forms or component 4-vectors; returns frame components
    of the resulting 1-form.
    """
    g = np.asarray(g, dtype=float)
    ginv = np.linalg.inv(g)
    out = np.zeros(4)
    for i in range(3):
        a = a_triple[i]
        comp = oneform_components(a) if isinstance(a, MixedForm) else np.asarray(a, dtype=float)
        out = out + g @ (J.J[i] @ (ginv @ comp))
    return out


def big_l(v, omega: TripleField, tol: float = 1e-10) -> TripleField:
    """L v = d(i_v omega); requires d(omega) = 0."""
    if closedness_residual(omega) > tol:
        raise NotClosedError("L v = d(i_v omega) requires a closed triple")
    from .forms import contract

    out = tuple(ext_d(contract(v, f)) for f in omega.forms)
    return TripleField(out, omega.orientation, omega.frame_mode)


def l_star(theta: TripleField, omega: TripleField, metric: DiagonalMetric) -> np.ndarray:
    """L* theta = (J . d* theta)^sharp as frame components of a vector field."""
    g = _metric_matrix_with_orientation(metric)
    J = complex_structures(omega, g)
    delta = [codifferential(f, metric) for f in theta.forms]
    a = j_dot(delta, J, g)
    return np.linalg.inv(g) @ a  # sharp


def _metric_matrix_with_orientation(metric: DiagonalMetric) -> np.ndarray:
    return metric.metric_matrix()


def inner_matrix(theta: TripleField, omega: TripleField, metric: DiagonalMetric) -> np.ndarray:
    M = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            M[i, j] = inner_product(theta.forms[i], omega.forms[j], metric).value
    return M


def lin_p(theta: TripleField, omega: TripleField, metric: DiagonalMetric) -> np.ndarray:
    """P(theta)_ij = s^2_0 of the inner-product matrix (theta_i, omega_j).

    Equals the derivative of Q at the hyperkahler triple omega.
    """
    M = inner_matrix(theta, omega, metric)
    S = 0.5 * (M + M.T)
    return S - np.trace(S) / 3.0 * np.eye(3)


def vector_field_linearization_parts(alpha: MixedForm, omega: TripleField, metric: DiagonalMetric):
    """Decompose (omega_i, d tau_j) for tau_j = J_j alpha = *(alpha ^ omega_j).

    Returns (trace, skew, s20): the scalar trace part (= d* alpha), the axial
    vector v_k = (M_ij - M_ji)/2 for (i,j,k) cyclic (= -(d alpha, omega_k)
    componentwise), and the symmetric trace-free part (identically zero).
    """
    tau = [hodge_star(wedge(alpha, f), metric) for f in omega.forms]
    M = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            M[i, j] = inner_product(omega.forms[i], ext_d(tau[j]), metric).value
    trace = np.trace(M) / 3.0
    skew = np.array([
        0.5 * (M[1, 2] - M[2, 1]),
        0.5 * (M[2, 0] - M[0, 2]),
        0.5 * (M[0, 1] - M[1, 0]),
    ])
    S = 0.5 * (M + M.T)
    s20 = S - np.trace(S) / 3.0 * np.eye(3)
    return trace, skew, s20
