"""Closed anti-self-dual 2-forms on the flat 4-ball from boundary eigenforms.

Orientation convention.  This module pins both the 3-sphere star and the
cone star to the ``reversed`` orientation (the classical ball orientation,
opposite to the one induced by the diagonal profile ansatz).  Under it the
reference flat triple

    w_i = r dr ^ eta_i - r^2 eta_j ^ eta_k

is pointwise self-dual, the negative eigenspaces

    E_k = { alpha in Omega^2(S^3) : d * alpha = -k alpha },   k = 2, 3, ...

contain the invariant forms at k = 2, and every generator

    beta = d( r^k * alpha ),   alpha in E_k

is closed (exact by construction) and anti-self-dual; a regression test
asserts the (+/-) split.  The eigenvalue condition, closedness and
anti-self-duality are all residual-tested, not assumed.

Coefficients live in finite Peter-Weyl blocks: a form is a sum of terms
(radial power) x (matrix-coefficient function) x (frame monomial), closed
under d and the flat-cone Hodge star.  Products are supported against
invariant forms only, which covers every pointwise inner product needed
here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .forms import _CYCLIC, _merge_keys, _perm_sign
from .su2 import coefficient_value, frame_derivative, frame_generators, random_unit_quaternions
from .spectrum import _curl_matrix
from .triples import SO3_GENERATORS

STRUCTURE_CONSTANT = 2.0
_AXES4 = (0, 1, 2, 3)  # 0 = dr


class EigenvalueMismatchError(ValueError):
    """Supplied form is not an eigenform with the claimed eigenvalue."""


class TruncationError(ValueError):
    """Requested data outside the supported spin truncation."""


def _slice_count(key) -> int:
    return sum(1 for i in key if i != 0)


@dataclass
class PWForm:
    """Sum of terms r^p * (spin-j coefficient function) * frame monomial.

    ``coeffs[(key, p)]`` maps spins j to complex arrays of shape
    (2j+1, 2j+1) in the weight basis.  Keys are increasing index tuples over
    (dr, eta_1, eta_2, eta_3) = (0, 1, 2, 3).
    """

    degree: int
    coeffs: dict = field(default_factory=dict)

    def copy(self) -> "PWForm":
        return PWForm(self.degree, {kp: {j: a.copy() for j, a in blocks.items()}
                                    for kp, blocks in self.coeffs.items()})

    def _add_term(self, key, p, j, arr):
        if not np.any(arr):
            return
        blocks = self.coeffs.setdefault((tuple(key), int(p)), {})
        if j in blocks:
            blocks[j] = blocks[j] + arr
        else:
            blocks[j] = np.array(arr, dtype=complex)

    def prune(self, tol: float = 0.0) -> "PWForm":
        out = PWForm(self.degree)
        for (key, p), blocks in self.coeffs.items():
            for j, arr in blocks.items():
                if np.abs(arr).max() > tol:
                    out._add_term(key, p, j, arr)
        return out

    def __add__(self, other: "PWForm") -> "PWForm":
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        out = self.copy()
        for (key, p), blocks in other.coeffs.items():
            for j, arr in blocks.items():
                out._add_term(key, p, j, arr)
        return out

    def __neg__(self) -> "PWForm":
        return self * (-1.0)

    def __sub__(self, other: "PWForm") -> "PWForm":
        return self + (-other)

    def __mul__(self, s) -> "PWForm":
        out = PWForm(self.degree)
        for (key, p), blocks in self.coeffs.items():
            for j, arr in blocks.items():
                out._add_term(key, p, j, s * arr)
        return out

    __rmul__ = __mul__

    def max_abs(self) -> float:
        out = 0.0
        for blocks in self.coeffs.values():
            for arr in blocks.values():
                out = max(out, float(np.abs(arr).max()))
        return out

    def coefficient_norm_sq(self) -> float:
        """Shell L^2 norm squared at r = 1 (Schur orthogonality, Haar = 1)."""
        out = 0.0
        for (key, _p), blocks in self.coeffs.items():
            for j, arr in blocks.items():
                out += float(np.sum(np.abs(arr) ** 2)) / (2 * j + 1)
        return out

    def evaluate(self, r: float, q) -> dict:
        """Frame-monomial components at the point (r, q)."""
        out = {}
        for (key, p), blocks in self.coeffs.items():
            val = 0.0 + 0.0j
            for j, arr in blocks.items():
                val += coefficient_value(arr, q, j)
            out[key] = out.get(key, 0.0) + (r ** p) * val
        return out


def pw_invariant(degree: int, terms) -> PWForm:
    """Invariant form from (key, power, coefficient) terms."""
    out = PWForm(degree)
    for key, p, c in terms:
        key = tuple(key)
        sign = _perm_sign(key)
        out._add_term(tuple(sorted(key)), p, 0.0, np.array([[sign * c]], dtype=complex))
    return out


def cone_d(a: PWForm) -> PWForm:
    """Exterior derivative on the cone: dr ^ d/dr + group derivatives + structure terms."""
    out = PWForm(a.degree + 1)
    for (key, p), blocks in a.coeffs.items():
        for j, arr in blocks.items():
            # radial derivative of r^p
            if 0 not in key and p != 0:
                out._add_term((0,) + key, p - 1, j, p * arr)
            # frame derivatives of the coefficient function
            for m in range(3):
                darr = frame_derivative(arr, m, j)
                merged = _merge_keys((m + 1,), key)
                if merged is not None and np.any(darr):
                    sign, new_key = merged
                    out._add_term(new_key, p, j, sign * darr)
            # structure terms d(eta_i) = 2 eta_j ^ eta_k
            for pos, idx in enumerate(key):
                if idx == 0:
                    continue
                jj, kk = _CYCLIC[idx]
                rest = key[:pos] + key[pos + 1:]
                leib = -1.0 if pos % 2 else 1.0
                merged = _merge_keys((jj, kk), rest)
                if merged is None:
                    continue
                sign, new_key = merged
                out._add_term(new_key, p, j, STRUCTURE_CONSTANT * leib * sign * arr)
    return out.prune()


def cone_star(a: PWForm, orientation: str = "reversed") -> PWForm:
    """Hodge star of dr^2 + r^2 sum eta_i^2; radial powers shift accordingly."""
    sigma = -1.0 if orientation == "reversed" else 1.0
    out = PWForm(4 - a.degree)
    for (key, p), blocks in a.coeffs.items():
        comp = tuple(i for i in _AXES4 if i not in key)
        sign = _perm_sign(key + comp)
        shift = _slice_count(comp) - _slice_count(key)
        for j, arr in blocks.items():
            out._add_term(comp, p + shift, j, sigma * sign * arr)
    return out.prune()


def slice_star(a: PWForm, orientation: str = "reversed") -> PWForm:
    """Unit-sphere star on slice forms (no dr content)."""
    sigma = -1.0 if orientation == "reversed" else 1.0
    out = PWForm(3 - a.degree)
    for (key, p), blocks in a.coeffs.items():
        if 0 in key:
            raise ValueError("slice star applied to a form containing dr")
        comp = tuple(i for i in (1, 2, 3) if i not in key)
        sign = _perm_sign(key + comp)
        for j, arr in blocks.items():
            out._add_term(comp, p, j, sigma * sign * arr)
    return out.prune()


def cone_codifferential(a: PWForm) -> PWForm:
    """-*d* in every degree; independent of the orientation convention."""
    return -1.0 * cone_star(cone_d(cone_star(a)))


def wedge_invariant(a: PWForm, inv: PWForm) -> PWForm:
    """a ^ inv for an invariant (single-block, spin-0) second factor."""
    out = PWForm(a.degree + inv.degree)
    for (ka, pa), blocks in a.coeffs.items():
        for (kb, pb), inv_blocks in inv.coeffs.items():
            c0 = inv_blocks.get(0.0)
            if c0 is None:
                raise ValueError("second factor must be invariant")
            merged = _merge_keys(ka, kb)
            if merged is None:
                continue
            sign, key = merged
            for j, arr in blocks.items():
                out._add_term(key, pa + pb, j, sign * complex(c0[0, 0]) * arr)
    return out.prune()


def inner_invariant(a: PWForm, inv: PWForm) -> dict:
    """Pointwise inner product against an invariant form of the same degree.

    Metric dr^2 + r^2 sum eta_i^2; returns {(radial power, j): array} of the
    resulting coefficient function.
    """
    if a.degree != inv.degree:
        raise ValueError("degree mismatch")
    out: dict = {}
    for (key, pa), blocks in a.coeffs.items():
        for (kb, pb), inv_blocks in inv.coeffs.items():
            if kb != key:
                continue
            c0 = inv_blocks.get(0.0)
            if c0 is None:
                raise ValueError("second factor must be invariant")
            power = pa + pb - 2 * _slice_count(key)
            for j, arr in blocks.items():
                cur = out.setdefault((power, j), np.zeros_like(arr))
                out[(power, j)] = cur + complex(c0[0, 0]) * arr
    return {k: v for k, v in out.items() if np.abs(v).max() > 0}


def reference_flat_triple():
    """Pointwise self-dual flat triple under the module orientation."""
    out = []
    for i in range(3):
        jj, kk = _CYCLIC[i + 1]
        out.append(pw_invariant(2, [((0, i + 1), 1, 1.0), ((jj, kk), 2, -1.0)]))
    return tuple(out)


# ---------------------------------------------------------------------------
# boundary eigenforms and generators
# ---------------------------------------------------------------------------

def eigenform_basis(k: int):
    """Basis of E_k = {alpha : d * alpha = -k alpha} as slice 2-form PWForms.

    Under the reversed star these are the +k eigenvectors of the curl block
    at spin j = k/2 - 1, one form per (eigenvector, Peter-Weyl row).
    """
    if k < 2 or k != int(k):
        raise ValueError("eigenvalue label k must be an integer >= 2")
    j = k / 2.0 - 1.0
    C = _curl_matrix(j)
    evals, evecs = np.linalg.eigh(C)
    idx = [i for i, lam in enumerate(evals) if abs(lam - k) < 1e-9]
    n = int(round(2 * j)) + 1
    out = []
    base2 = {1: (2, 3), 2: (3, 1), 3: (1, 2)}
    for i in idx:
        v = evecs[:, i].reshape(3, n)
        for row in range(n):
            form = PWForm(2)
            for e in range(3):
                arr = np.zeros((n, n), dtype=complex)
                arr[row, :] = v[e]
                jj, kk = base2[e + 1]
                sign = _perm_sign((jj, kk))
                form._add_term(tuple(sorted((jj, kk))), 0, j, sign * arr)
            out.append(form.prune())
    return out


def eigenvalue_residual(alpha: PWForm, k: int) -> float:
    """| d * alpha + k alpha | coefficient-wise (reversed star)."""
    lhs = cone_d(slice_star(alpha))
    return (lhs + float(k) * alpha).max_abs()


@dataclass
class AsdGenerator:
    """beta = d(r^k * alpha) for a boundary eigenform alpha in E_k."""

    k: int
    spin: float
    alpha: PWForm
    beta: PWForm
    closed_residual: float
    asd_residual: float

    @staticmethod
    def norm_ratio(gen: "AsdGenerator") -> float:
        return math.sqrt(gen.beta.coefficient_norm_sq() / gen.alpha.coefficient_norm_sq())


def asd_from_eigenform(alpha: PWForm, k: int, tol: float = 1e-9) -> AsdGenerator:
    """Build and residual-check a closed ASD 2-form from a boundary eigenform."""
    res = eigenvalue_residual(alpha, k)
    scale = max(alpha.max_abs(), 1.0)
    if res > tol * scale:
        raise EigenvalueMismatchError(
            f"d*alpha != -{k} alpha (residual {res:.2e}); wrong eigenvalue or orientation")
    u = slice_star(alpha)  # 1-form on the sphere
    radial_u = PWForm(1)
    for (key, p), blocks in u.coeffs.items():
        for j, arr in blocks.items():
            radial_u._add_term(key, p + k, j, arr)
    beta = cone_d(radial_u)
    closed = cone_d(beta).max_abs()
    asd = (cone_star(beta) + beta).max_abs()
    spins = {j for blocks in alpha.coeffs.values() for j in blocks}
    return AsdGenerator(k, max(spins), alpha, beta, closed, asd)


def generators(k_values=(2, 3)) -> list:
    out = []
    for k in k_values:
        for alpha in eigenform_basis(k):
            out.append(asd_from_eigenform(alpha, k))
    return out


# ---------------------------------------------------------------------------
# linearised-deformation checks
# ---------------------------------------------------------------------------

def tangent_condition_check(theta_triple):
    """Inner-product matrix (theta_i, w_j) against the reference flat triple,
    plus the gauge condition L* theta = 0.

    Returns (constant matrix part, residual of all non-constant parts,
    l_star residual).  For anti-self-dual input everything vanishes; a
    control run with theta = w shows the constant part 2 delta_ij.
    """
    w = reference_flat_triple()
    M_const = np.zeros((3, 3))
    res = 0.0
    for i in range(3):
        for jdx in range(3):
            prod = inner_invariant(theta_triple[i], w[jdx])
            for (power, j), arr in prod.items():
                if power == 0 and j == 0.0:
                    M_const[i, jdx] += float(arr.real[0, 0])
                    res = max(res, float(np.abs(arr.imag).max()))
                else:
                    res = max(res, float(np.abs(arr).max()))
    return M_const, res, l_star_residual(theta_triple)


def l_star_residual(theta_triple) -> float:
    """|L* theta| via J . d* theta = sum_i *(d* theta_i ^ w_i) (reversed star)."""
    w = reference_flat_triple()
    acc = PWForm(1)
    for i in range(3):
        delta = cone_codifferential(theta_triple[i])
        acc = acc + cone_star(wedge_invariant(delta, w[i]))
    return acc.max_abs()


def quotient_condition_check(alpha_triple, n_points: int = 200, seed: int = 0,
                             tol: float = 1e-9):
    """Trace and skew parts of the matrix (alpha_i, gamma_j) on the unit sphere.

    gamma is the unit flat boundary framing (eta_2^eta_3, eta_3^eta_1,
    eta_1^eta_2); the framing is orthonormal, so the matrix entries are the
    coefficient functions of alpha in that basis, evaluated pointwise on a
    seeded sample of group elements.  Returns a dict verdict.
    """
    qs = random_unit_quaternions(n_points, seed=seed)
    base2 = {0: (2, 3), 1: (3, 1), 2: (1, 2)}
    max_trace = 0.0
    max_skew = 0.0
    for q in qs:
        M = np.zeros((3, 3), dtype=complex)
        for i in range(3):
            vals = alpha_triple[i].evaluate(1.0, q)
            for e in range(3):
                key = tuple(sorted(base2[e]))
                v = vals.get(key)
                if v is not None:
                    M[i, e] = _perm_sign(base2[e]) * v
        max_trace = max(max_trace, abs(np.trace(M)))
        skew = 0.5 * (M - M.T)
        max_skew = max(max_skew, float(np.abs(skew).max()))
    return {"pass": bool(max_trace < tol and max_skew < tol),
            "max_trace": max_trace, "max_skew": max_skew}


def inventory_json(gens, path=None):
    payload = [{"k": g.k, "spin": g.spin,
                "closed_residual": g.closed_residual,
                "asd_residual": g.asd_residual,
                "norm_ratio": AsdGenerator.norm_ratio(g)} for g in gens]
    if path is None:
        return payload
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
    return payload
