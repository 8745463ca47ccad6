"""Collar form of the Dirac operator d* + d_+ and its Green's identity.

Sections near a slice are pairs: a 1-form a = f d(rho) + b with rho the
distance to the slice (so a = -f dt + b with outward normal nu = d/dt), and
a pair (phi, theta) with theta self-dual, identified with (phi, c) through
theta = dt ^ c + *_Y c.  On invariant data over a diagonal metric
dt^2 + sum f_i(t)^2 eta_i^2 the operator D = d* + d_+, with the 2-form
output read through c = i_nu (1 + *) d a, takes the collar form

    D (f, b) = ( (nu + H) f + d*_Y b ,  nu(b) + d_Y f + *_Y d_Y b )

where nu differentiates the plain coframe components and H = sum f_i'/f_i
is the mean curvature of the slice.  The formal adjoint, with the same
identifications, is

    D*(phi, c) = ( -nu(phi) + d*_Y c ,
                   -f_i^2 d/dt (c_i / f_i^2) - H c_i + (d_Y phi + *_Y d_Y c)_i ),

i.e. the normal derivative acts on the components of the 2-form *_Y c
rather than on the coframe components of c; both formulas are fixed by
residual tests against the direct exterior-calculus computation, not
assumed.  With these operators,

    (D u, v) - (u, D* v) = int_Y (f phi + <b, c>) dmu_Y

holds exactly on a cone closing smoothly at t = 0 (inner boundary term
vanishes); <. , .> is the slice metric pairing and the Haar measure is
normalised to 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forms import (
    DT,
    DiagonalMetric,
    MixedForm,
    Scalar,
    as_scalar,
    codifferential,
    codifferential3,
    contract,
    ext_d,
    ext_d_slice,
    hodge_star,
    hodge_star3,
)


@dataclass(frozen=True)
class InvariantSection:
    """Invariant pair (f, b = sum b_i eta_i) with t-derivative channels."""

    f: Scalar
    b: tuple  # three Scalars

    def __post_init__(self):
        object.__setattr__(self, "f", as_scalar(self.f))
        object.__setattr__(self, "b", tuple(as_scalar(x) for x in self.b))


def mean_curvature_of_path(metric: DiagonalMetric) -> float:
    """H = sum f_i'/f_i for the outward normal d/dt of the slice."""
    return sum(s.dt / s.value for s in metric.f)


def slice_dy(section: InvariantSection, metric: DiagonalMetric):
    """Per-slice boundary operator (d*_Y b, d_Y f + *_Y d_Y b) on invariant data."""
    b_form = MixedForm(1, {(i + 1,): section.b[i] for i in range(3)})
    dstar_b = codifferential3(b_form, metric)
    f_out = dstar_b.coefficient() if dstar_b.degree == 0 else Scalar(0.0)
    # invariant functions have d_Y f = 0
    curl_b = hodge_star3(ext_d_slice(b_form), metric)
    return f_out, tuple(curl_b.coefficient(i + 1) for i in range(3))


def collar_dirac(section: InvariantSection, metric: DiagonalMetric):
    """Collar-form D(f, b); value-channel components (function, eta-components)."""
    H = mean_curvature_of_path(metric)
    dy_f, dy_b = slice_dy(section, metric)
    fun = section.f.dt + H * section.f.value + dy_f.value
    out_b = np.array([section.b[i].dt + dy_b[i].value for i in range(3)])
    return fun, out_b


def collar_dirac_adjoint(section: InvariantSection, metric: DiagonalMetric):
    """Collar-form D*(phi, c); see module docstring for the normal-derivative law."""
    H = mean_curvature_of_path(metric)
    dy_f, dy_b = slice_dy(section, metric)
    fun = -section.f.dt + dy_f.value
    out_b = []
    for i in range(3):
        fi = metric.f[i]
        c_i = section.b[i]
        weighted = c_i.dt - 2.0 * (fi.dt / fi.value) * c_i.value  # f^2 d/dt (c/f^2)
        out_b.append(-weighted - H * c_i.value + dy_b[i].value)
    return fun, np.array(out_b)


def direct_dirac(section: InvariantSection, metric: DiagonalMetric):
    """D(f, b) from the 4-dimensional exterior calculus (the ground truth)."""
    a = MixedForm(1, {(DT,): -section.f})
    a = a + MixedForm(1, {(i + 1,): section.b[i] for i in range(3)})
    fun = codifferential(a, metric).coefficient()
    da = ext_d(a)
    theta = da + hodge_star(da, metric)
    c = contract((Scalar(1.0), Scalar(0.0), Scalar(0.0), Scalar(0.0)), theta)
    return fun.value, np.array([c.coefficient(i + 1).value for i in range(3)])


def direct_dirac_adjoint(section: InvariantSection, metric: DiagonalMetric):
    """D*(phi, c) = d phi + delta theta for theta = dt ^ c + *_Y c.

    Returned in collar components: (d rho coefficient, eta-components).
    """
    theta = MixedForm.zero(2)
    for i in range(3):
        theta = theta + MixedForm(2, {(DT, i + 1): section.b[i]})
    c_form = MixedForm(1, {(i + 1,): section.b[i] for i in range(3)})
    theta = theta + hodge_star3(c_form, metric)
    out = ext_d(MixedForm(0, {(): section.f})) + codifferential(theta, metric)
    return -out.coefficient(DT).value, np.array([out.coefficient(i + 1).value for i in range(3)])


def collar_dirac_check(section: InvariantSection, metric: DiagonalMetric) -> float:
    """Max discrepancy between the collar formulas and the direct operators."""
    f1, b1 = collar_dirac(section, metric)
    f2, b2 = direct_dirac(section, metric)
    res = max(abs(f1 - f2), float(np.abs(b1 - b2).max()))
    g1, c1 = collar_dirac_adjoint(section, metric)
    g2, c2 = direct_dirac_adjoint(section, metric)
    return max(res, abs(g1 - g2), float(np.abs(c1 - c2).max()))


# ---------------------------------------------------------------------------
# Green's identity by radial quadrature
# ---------------------------------------------------------------------------

def _pairing(u_fun, u_b, v_fun, v_b, metric: DiagonalMetric) -> float:
    """f phi + <b, c> with the slice metric pairing on eta-components."""
    out = u_fun * v_fun
    for i in range(3):
        out += u_b[i] * v_b[i] / metric.f[i].value ** 2
    return out


def green_identity_residual(u_coeffs, v_coeffs, metric_path, t_max: float,
                            n_nodes: int = 64) -> float:
    """| (Du, v) - (u, D*v) - int_Y <u,v> dmu_Y | on a cone over the 3-sphere.

    ``u_coeffs``/``v_coeffs`` are 4-tuples of callables t -> (value, dvalue)
    for (f, b_1, b_2, b_3); ``metric_path`` maps t to a DiagonalMetric with
    derivative channels.  L^2 pairings integrate the pointwise pairing
    against the slice volume f_1 f_2 f_3 (Haar measure 1).
    """
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    ts = 0.5 * t_max * (nodes + 1.0)
    ws = 0.5 * t_max * weights

    total = 0.0
    for t, w in zip(ts, ws):
        metric = metric_path(t)
        u = _section_at(u_coeffs, t)
        v = _section_at(v_coeffs, t)
        Du_f, Du_b = collar_dirac(u, metric)
        Dv_f, Dv_b = collar_dirac_adjoint(v, metric)
        area = np.prod([s.value for s in metric.f])
        lhs = _pairing(Du_f, Du_b, v.f.value, [x.value for x in v.b], metric)
        rhs = _pairing(u.f.value, [x.value for x in u.b], Dv_f, Dv_b, metric)
        total += w * area * (lhs - rhs)

    metric_T = metric_path(t_max)
    uT = _section_at(u_coeffs, t_max)
    vT = _section_at(v_coeffs, t_max)
    area_T = np.prod([s.value for s in metric_T.f])
    boundary = area_T * _pairing(uT.f.value, [x.value for x in uT.b],
                                 vT.f.value, [x.value for x in vT.b], metric_T)
    return abs(total - boundary)


def _section_at(coeffs, t: float) -> InvariantSection:
    vals = [coeffs[k](t) for k in range(4)]
    return InvariantSection(Scalar(*vals[0]), tuple(Scalar(*v) for v in vals[1:]))


def flat_cone_metric(t: float) -> DiagonalMetric:
    s = Scalar(t, 1.0)
    return DiagonalMetric((s, s, s), "standard")
