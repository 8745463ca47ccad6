"""Exact exterior calculus on the frame {dt, eta1, eta2, eta3}.

Everything invariant under the group action lives in the exterior algebra of
the coframe dt, eta1, eta2, eta3, where the eta_i are the left-invariant
coframe on the 3-sphere normalised so that

    d(eta_1) = 2 eta_2 ^ eta_3   (and cyclic).

The factor 2 is not a free choice: it is the unique normalisation for which
closedness of the diagonal profile ansatz reproduces the profile ODE systems
(see tests/test_forms.py::test_structure_constant_pinned_by_profile_odes).

Coefficients are forward-mode dual numbers (value, d/dt), so exterior
derivatives of t-dependent families are exact whenever the t-derivative of
each coefficient is supplied.  Catalog profiles supply closed-form
derivatives; integrated trajectories supply the ODE right-hand side.

Basis index 0 denotes dt; 1..3 denote eta_1..eta_3.  Monomial keys are
strictly increasing tuples of indices, ordered dt < eta1 < eta2 < eta3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

DT = 0
ETA1, ETA2, ETA3 = 1, 2, 3

_AXES4 = (0, 1, 2, 3)
_AXES3 = (1, 2, 3)

# cyclic successor pairs: d(eta_i) = STRUCTURE_CONSTANT * eta_j ^ eta_k
_CYCLIC = {1: (2, 3), 2: (3, 1), 3: (1, 2)}

STRUCTURE_CONSTANT = 2.0


class DegreeError(ValueError):
    """Operands have incompatible or out-of-range degrees."""


class SingularMetricError(ValueError):
    """A frame scale factor vanishes at the evaluation point."""


@dataclass(frozen=True)
class Scalar:
    """Dual number (value, t-derivative) for forward-mode differentiation."""

    value: float
    dt: float = 0.0

    def __add__(self, other):
        o = as_scalar(other)
        return Scalar(self.value + o.value, self.dt + o.dt)

    __radd__ = __add__

    def __sub__(self, other):
        o = as_scalar(other)
        return Scalar(self.value - o.value, self.dt - o.dt)

    def __rsub__(self, other):
        return as_scalar(other) - self

    def __neg__(self):
        return Scalar(-self.value, -self.dt)

    def __mul__(self, other):
        o = as_scalar(other)
        return Scalar(self.value * o.value, self.dt * o.value + self.value * o.dt)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = as_scalar(other)
        v = self.value / o.value
        return Scalar(v, (self.dt - v * o.dt) / o.value)

    def __rtruediv__(self, other):
        return as_scalar(other) / self

    def __pow__(self, n: int):
        out = Scalar(1.0)
        base = self
        for _ in range(n):
            out = out * base
        return out

    def sqrt(self):
        r = math.sqrt(self.value)
        return Scalar(r, self.dt / (2.0 * r))

    def __abs__(self):
        return abs(self.value)


def as_scalar(x) -> Scalar:
    if isinstance(x, Scalar):
        return x
    return Scalar(float(x))


def _merge_keys(k1: tuple, k2: tuple):
    """Sign and key of e_{k1} ^ e_{k2}; None if they share an index."""
    if set(k1) & set(k2):
        return None
    merged = list(k1 + k2)
    # parity of the sort = sign of the wedge reordering
    sign = 1
    for i in range(len(merged)):
        for j in range(len(merged) - 1 - i):
            if merged[j] > merged[j + 1]:
                merged[j], merged[j + 1] = merged[j + 1], merged[j]
                sign = -sign
    return sign, tuple(merged)


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                sign = -sign
    return sign


@dataclass(frozen=True)
class MixedForm:
    """Pure-degree element of the exterior algebra with Scalar coefficients.

    Treat instances as immutable values; all operations return new forms.
    """

    degree: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, c in self.coeffs.items():
            key = tuple(key)
            if len(key) != self.degree:
                raise DegreeError(f"monomial {key} has wrong degree for form of degree {self.degree}")
            if tuple(sorted(key)) != key:
                raise ValueError(f"monomial key {key} not in canonical order")
            c = as_scalar(c)
            if c.value != 0.0 or c.dt != 0.0:
                clean[key] = c
        object.__setattr__(self, "coeffs", clean)

    # -- constructors -----------------------------------------------------
    @staticmethod
    def zero(degree: int) -> "MixedForm":
        return MixedForm(degree, {})

    @staticmethod
    def basis(*indices) -> "MixedForm":
        key = tuple(indices)
        sign = _perm_sign(key)
        if len(set(key)) != len(key):
            return MixedForm(len(key), {})
        skey = tuple(sorted(key))
        return MixedForm(len(key), {skey: Scalar(float(sign))})

    # -- accessors ---------------------------------------------------------
    def coefficient(self, *indices) -> Scalar:
        key = tuple(sorted(indices))
        sign = _perm_sign(tuple(indices))
        c = self.coeffs.get(key, Scalar(0.0))
        return c if sign == 1 else -c

    def terms(self):
        return sorted(self.coeffs.items())

    def max_abs(self, channel: str = "value") -> float:
        if not self.coeffs:
            return 0.0
        if channel == "value":
            return max(abs(c.value) for c in self.coeffs.values())
        return max(abs(c.dt) for c in self.coeffs.values())

    def is_slice_form(self) -> bool:
        """True if no monomial involves dt."""
        return all(DT not in key for key in self.coeffs)

    # -- algebra -----------------------------------------------------------
    def __add__(self, other: "MixedForm") -> "MixedForm":
        if self.degree != other.degree:
            raise DegreeError("cannot add forms of different degree")
        out = dict(self.coeffs)
        for key, c in other.coeffs.items():
            out[key] = out.get(key, Scalar(0.0)) + c
        return MixedForm(self.degree, out)

    def __sub__(self, other: "MixedForm") -> "MixedForm":
        return self + (-other)

    def __neg__(self) -> "MixedForm":
        return MixedForm(self.degree, {k: -c for k, c in self.coeffs.items()})

    def __mul__(self, s) -> "MixedForm":
        s = as_scalar(s)
        return MixedForm(self.degree, {k: c * s for k, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __repr__(self):
        if not self.coeffs:
            return f"MixedForm(deg={self.degree}, 0)"
        names = {0: "dt", 1: "e1", 2: "e2", 3: "e3"}
        parts = []
        for key, c in self.terms():
            mono = "^".join(names[i] for i in key) or "1"
            parts.append(f"({c.value:+.6g}){mono}")
        return f"MixedForm(deg={self.degree}, {' '.join(parts)})"


def wedge(a: MixedForm, b: MixedForm) -> MixedForm:
    if a.degree + b.degree > 4:
        raise DegreeError("wedge degree exceeds dimension 4")
    out: dict = {}
    for ka, ca in a.coeffs.items():
        for kb, cb in b.coeffs.items():
            merged = _merge_keys(ka, kb)
            if merged is None:
                continue
            sign, key = merged
            out[key] = out.get(key, Scalar(0.0)) + ca * cb * sign
    return MixedForm(a.degree + b.degree, out)


def ext_d(a: MixedForm, structure_constant: float = STRUCTURE_CONSTANT) -> MixedForm:
    """Exterior derivative: dt ^ (coefficient t-derivative) + structure terms."""
    if a.degree >= 4:
        return MixedForm.zero(4) if a.degree == 4 else MixedForm.zero(a.degree + 1)
    out = MixedForm.zero(a.degree + 1)
    for key, c in a.coeffs.items():
        # d(coefficient) ^ e_key
        if DT not in key and c.dt != 0.0:
            out = out + MixedForm(a.degree + 1, {(DT,) + key: Scalar(c.dt)})
        # coefficient * d(e_key), Leibniz over the factors
        for pos, idx in enumerate(key):
            if idx == DT:
                continue
            j, k = _CYCLIC[idx]
            rest = key[:pos] + key[pos + 1 :]
            leib_sign = -1.0 if pos % 2 else 1.0
            merged = _merge_keys((j, k), rest)
            if merged is None:
                continue
            sign, new_key = merged
            coeff = c * (structure_constant * leib_sign * sign)
            out = out + MixedForm(a.degree + 1, {new_key: coeff})
    return out


@dataclass(frozen=True)
class DiagonalMetric:
    """Metric dt^2 + sum_i f_i^2 eta_i^2 with an orientation flag.

    ``reversed`` orientation declares -dt^eta1^eta2^eta3 (and -eta1^eta2^eta3
    on slices) to be positively oriented; it negates every Hodge star.
    """

    f: tuple
    orientation: str = "standard"

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(as_scalar(x) for x in self.f))
        if self.orientation not in ("standard", "reversed"):
            raise ValueError(f"unknown orientation {self.orientation!r}")

    @property
    def sign(self) -> float:
        return 1.0 if self.orientation == "standard" else -1.0

    def scale(self, idx: int) -> Scalar:
        if idx == DT:
            return Scalar(1.0)
        s = self.f[idx - 1]
        if s.value == 0.0:
            raise SingularMetricError(f"f_{idx} vanishes at evaluation point")
        return s

    def metric_matrix(self):
        import numpy as np

        return np.diag([1.0] + [s.value ** 2 for s in self.f])

    def volume4(self) -> MixedForm:
        c = self.scale(1) * self.scale(2) * self.scale(3) * self.sign
        return MixedForm(4, {(0, 1, 2, 3): c})

    def volume3(self) -> MixedForm:
        c = self.scale(1) * self.scale(2) * self.scale(3) * self.sign
        return MixedForm(3, {(1, 2, 3): c})


def _star(a: MixedForm, metric: DiagonalMetric, axes: tuple) -> MixedForm:
    n = len(axes)
    out: dict = {}
    for key, c in a.coeffs.items():
        comp = tuple(i for i in axes if i not in key)
        sign = _perm_sign(key + comp)
        num = Scalar(1.0)
        den = Scalar(1.0)
        for i in comp:
            num = num * metric.scale(i)
        for i in key:
            den = den * metric.scale(i)
        coeff = c * num / den * (sign * metric.sign)
        out[comp] = out.get(comp, Scalar(0.0)) + coeff
    return MixedForm(n - a.degree, out)


def hodge_star(a: MixedForm, metric: DiagonalMetric) -> MixedForm:
    """4d Hodge star for dt^2 + sum f_i^2 eta_i^2."""
    for key in a.coeffs:
        for i in key:
            metric.scale(i)  # raises on singular factors
    return _star(a, metric, _AXES4)


def hodge_star3(a: MixedForm, metric: DiagonalMetric) -> MixedForm:
    """Hodge star of the slice metric sum f_i^2 eta_i^2 on the 3-sphere."""
    if not a.is_slice_form():
        raise DegreeError("slice star applied to a form containing dt")
    return _star(a, metric, _AXES3)


def inner_product(a: MixedForm, b: MixedForm, metric: DiagonalMetric) -> Scalar:
    """Pointwise inner product, normalised by <a,b> vol = a ^ *b."""
    if a.degree != b.degree:
        raise DegreeError("inner product requires equal degrees")
    out = Scalar(0.0)
    for key, ca in a.coeffs.items():
        cb = b.coeffs.get(key)
        if cb is None:
            continue
        den = Scalar(1.0)
        for i in key:
            den = den * metric.scale(i) ** 2
        out = out + ca * cb / den
    return out


def codifferential(a: MixedForm, metric: DiagonalMetric) -> MixedForm:
    """Codifferential on the 4-manifold; equals -*d* in every degree."""
    return -hodge_star(ext_d(hodge_star(a, metric)), metric)


def ext_d_slice(a: MixedForm, structure_constant: float = STRUCTURE_CONSTANT) -> MixedForm:
    """Per-slice exterior derivative: structure terms only, t frozen."""
    if not a.is_slice_form():
        raise DegreeError("slice derivative applied to a form containing dt")
    out = MixedForm.zero(a.degree + 1)
    for key, c in a.coeffs.items():
        for pos, idx in enumerate(key):
            j, k = _CYCLIC[idx]
            rest = key[:pos] + key[pos + 1 :]
            leib_sign = -1.0 if pos % 2 else 1.0
            merged = _merge_keys((j, k), rest)
            if merged is None:
                continue
            sign, new_key = merged
            out = out + MixedForm(a.degree + 1, {new_key: c * (structure_constant * leib_sign * sign)})
    return out


def codifferential3(a: MixedForm, metric: DiagonalMetric) -> MixedForm:
    """Slice codifferential; (-1)^p *d* on p-forms in dimension 3."""
    sign = -1.0 if a.degree % 2 else 1.0
    return hodge_star3(ext_d_slice(hodge_star3(a, metric)), metric) * sign


def contract(v, a: MixedForm) -> MixedForm:
    """Interior product with the frame vector sum_i v_i X_i, X_i dual to the coframe."""
    if a.degree < 1:
        raise DegreeError("cannot contract a 0-form")
    v = tuple(as_scalar(x) for x in v)
    out: dict = {}
    for key, c in a.coeffs.items():
        for pos, idx in enumerate(key):
            comp = v[idx]
            if comp.value == 0.0 and comp.dt == 0.0:
                continue
            sign = -1.0 if pos % 2 else 1.0
            new_key = key[:pos] + key[pos + 1 :]
            out[new_key] = out.get(new_key, Scalar(0.0)) + c * comp * sign
    return MixedForm(a.degree - 1, out)


def all_monomials(degree: int, axes=_AXES4):
    return [tuple(c) for c in combinations(axes, degree)]
