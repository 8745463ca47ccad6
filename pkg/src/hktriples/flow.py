"""Boundary framings of the 2-form bundle on the 3-sphere and their evolution.

A diagonal framing gamma_i = g_i eta_j ^ eta_k determines an induced metric
(the unique one making the framing orthonormal), a second-fundamental-form
matrix (gamma_i, d* gamma_j) whose half-trace is the mean curvature of the
slice in any 4-manifold the framing bounds, and an evolution

    d(gamma_t)/dt = d *_t gamma_t

whose solutions sweep out closed self-dual triples dt ^ *gamma + gamma on a
cylinder.  In coefficients the evolution reads

    fixed frame:     dg_i/dt = s * 2 f_i
    rotating frame:  dg_i/dt = s * (2 f_i - 2 (f_j + f_k))

with f_i = sqrt(g_j g_k / g_i) and s = +1 for the standard orientation, -1
for the reversed one.  The rotating right-hand side is not an independent
assumption: differentiating g_i = f_j f_k along the rotating profile system
must reproduce it, and a test checks both routes agree.

Inward integration runs the flow in the direction that initially shrinks
g_1 g_2 g_3 (the squared slice volume); outward is the opposite.  Terminal
behaviour is classified from the trajectory tail: a smooth point when all
three scale factors collapse at equal linear rates, a bolt when exactly one
collapses linearly while the other two stay bounded away from zero.  The
classification thresholds are heuristic; raw limits and fitted exponents are
always exposed in the diagnostics so callers can re-classify.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .forms import DiagonalMetric, MixedForm, Scalar, ext_d, hodge_star3, inner_product
from .triples import TripleField, exterior_derivative, rotating_correction

SMOOTH_RATIO_TOL = 1e-3
EXPONENT_FIT_TOL = 0.1
TAIL_SAMPLES = 50
DEFAULT_F_FLOOR = 1e-6
FLOW_RTOL = 1e-10
FLOW_ATOL = 1e-14


@dataclass(frozen=True)
class FramingState:
    """Diagonal closed framing gamma_i = g_i eta_j ^ eta_k (general matrix optional)."""

    g: tuple
    mode: str = "fixed_frame"
    orientation: str = "standard"
    matrix: Optional[tuple] = None  # rows of a general invertible coefficient matrix

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(float(x) for x in self.g))
        if self.mode not in ("fixed_frame", "rotating_frame"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.orientation not in ("standard", "reversed"):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if self.matrix is None:
            if any(x == 0.0 for x in self.g):
                raise ValueError("diagonal framing requires g_i != 0")
        else:
            M = np.asarray(self.matrix, dtype=float)
            if abs(np.linalg.det(M)) < 1e-14:
                raise ValueError("general framing requires det M != 0")

    def coefficient_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return np.asarray(self.matrix, dtype=float)
        return np.diag(self.g)

    def scale_factors(self) -> np.ndarray:
        """f_i = sqrt(g_j g_k / g_i); requires a diagonal framing with g_i > 0."""
        if self.matrix is not None:
            raise ValueError("scale factors are defined for diagonal framings")
        g = np.asarray(self.g)
        if np.any(g <= 0):
            raise ValueError("scale factors require g_i > 0")
        return np.array([math.sqrt(g[1] * g[2] / g[0]),
                         math.sqrt(g[2] * g[0] / g[1]),
                         math.sqrt(g[0] * g[1] / g[2])])

    def forms(self):
        M = self.coefficient_matrix()
        base = [MixedForm.basis(2, 3), MixedForm.basis(3, 1), MixedForm.basis(1, 2)]
        out = []
        for i in range(3):
            acc = MixedForm.zero(2)
            for j in range(3):
                if M[i, j] != 0.0:
                    acc = acc + base[j] * M[i, j]
            out.append(acc)
        return tuple(out)


def induced_metric(framing: FramingState):
    """Metric making the framing orthonormal, plus its volume form.

    Identifying 2-forms with vector densities, the framing determines vector
    fields whose orthonormality fixes the metric: H = |det M| (M^T M)^{-1}
    in the invariant coframe.  The volume form is |det M|^{1/2} times the
    coframe volume, signed by the orientation flag.
    """
    M = framing.coefficient_matrix()
    det = np.linalg.det(M)
    if abs(det) < 1e-14:
        raise ValueError("degenerate framing")
    H = abs(det) * np.linalg.inv(M.T @ M)
    sign = 1.0 if framing.orientation == "standard" else -1.0
    vol = MixedForm(3, {(1, 2, 3): Scalar(sign * math.sqrt(abs(det)))})
    return H, vol


def _slice_metric(framing: FramingState) -> DiagonalMetric:
    return DiagonalMetric(tuple(framing.scale_factors()), framing.orientation)


def _mode_d_slice(forms, mode: str):
    """Slice exterior derivative of an R^3-valued form, conjugation-aware."""
    d = [ext_d(f) for f in forms]
    if mode == "fixed_frame":
        return d
    corr = rotating_correction(forms)
    return [d[k] + corr[k] for k in range(3)]


def second_fundamental_matrix(framing: FramingState) -> np.ndarray:
    """S_ij = (gamma_i, d * gamma_j) in the induced metric.

    The derivative is conjugation-aware in rotating mode, so the matrix is
    that of the geometric framing rather than of the bare coefficients.
    Only the trace carries an asserted geometric meaning (twice the mean
    curvature); the full matrix is exposed as raw data.
    """
    metric = _slice_metric(framing)
    gam = framing.forms()
    star_gam = [hodge_star3(f, metric) for f in gam]
    d_star = _mode_d_slice(star_gam, framing.mode)
    S = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            S[i, j] = inner_product(gam[i], d_star[j], metric).value
    return S


def mean_curvature(framing: FramingState) -> float:
    return 0.5 * float(np.trace(second_fundamental_matrix(framing)))


def flow_rhs(g, mode: str, orientation: str = "standard") -> np.ndarray:
    """Coefficient evolution of the framing flow (derivative in flow time)."""
    g = np.asarray(g, dtype=float)
    if np.any(g <= 0):
        raise ValueError("flow requires g_i > 0")
    sigma = 1.0 if orientation == "standard" else -1.0
    f = FramingState(tuple(g), mode, orientation).scale_factors()
    if mode == "fixed_frame":
        return sigma * 2.0 * f
    return np.array([sigma * (2.0 * f[i] - 2.0 * (f[(i + 1) % 3] + f[(i + 2) % 3]))
                     for i in range(3)])


def _safe_scale_factors(g) -> np.ndarray:
    """Scale factors with overshoot clamped: trial steps of the integrator may
    poke past a zero crossing, where raw g_j g_k / g_i is undefined."""
    g = np.asarray(g, dtype=float)
    scale = max(float(np.nanmax(np.abs(g))), 1e-30)
    out = np.empty(3)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        num = g[j] * g[k]
        num = num if np.isfinite(num) and num > 0.0 else 0.0
        den = g[i] if np.isfinite(g[i]) else scale
        out[i] = math.sqrt(num / max(den, 1e-12 * scale))
    return out


def _f_rates(g, dg) -> np.ndarray:
    """d f_i / d tau by the chain rule through f_i = sqrt(g_j g_k / g_i)."""
    f = _safe_scale_factors(g)
    out = np.empty(3)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        out[i] = 0.5 * f[i] * (dg[j] / g[j] + dg[k] / g[k] - dg[i] / g[i])
    return out


@dataclass(frozen=True)
class TerminalClass:
    kind: str  # smooth_point | bolt | incomplete_blowup | span_reached
    bolt_index: Optional[int] = None  # 1-based, matching f_1, f_2, f_3
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"kind": self.kind, "bolt_index": self.bolt_index,
                "diagnostics": {k: _jsonable(v) for k, v in self.diagnostics.items()}}


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [float(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    return v


@dataclass
class FlowTrajectory:
    tau: np.ndarray
    g: np.ndarray       # (n, 3)
    dgdtau: np.ndarray  # (n, 3), includes the direction sign
    f: np.ndarray       # (n, 3) derived scale factors
    mode: str
    orientation: str
    direction: str
    direction_sign: float  # d(flow time)/d tau
    status: int            # scipy status
    event_time: Optional[float]
    sol: object = field(repr=False, default=None)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "g1", "g2", "g3", "f1", "f2", "f3", "dg1", "dg2", "dg3"])
            for i in range(len(self.tau)):
                row = [self.tau[i], *self.g[i], *self.f[i], *self.dgdtau[i]]
                w.writerow([format(float(x), ".17g") for x in row])


def flow_integrate(g0: FramingState, direction: str = "inward", span: float = 10.0,
                   rtol: float = FLOW_RTOL, atol: float = FLOW_ATOL, max_step: float = 0.1,
                   f_floor: float = DEFAULT_F_FLOOR, n_samples: int = 400):
    """Evolve a diagonal framing; returns (FlowTrajectory, TerminalClass).

    The run stops when any derived scale factor f_i reaches ``f_floor``
    (dense-output bisection); the terminal classification is fitted on the
    trajectory tail.
    """
    if direction not in ("inward", "outward"):
        raise ValueError("direction must be 'inward' or 'outward'")
    mode, orientation = g0.mode, g0.orientation
    g_start = np.asarray(g0.g, dtype=float)

    v0 = flow_rhs(g_start, mode, orientation)
    growth = float(np.sum(v0 / g_start))  # d/dt log(g1 g2 g3)
    if growth == 0.0:
        raise ValueError("flow direction undetermined: volume is stationary")
    want = -1.0 if direction == "inward" else 1.0
    dir_sign = want * math.copysign(1.0, growth)
    sigma = 1.0 if orientation == "standard" else -1.0

    def rhs(tau, y):
        f = _safe_scale_factors(y)
        if mode == "fixed_frame":
            out = sigma * 2.0 * f
        else:
            out = np.array([sigma * (2.0 * f[i] - 2.0 * (f[(i + 1) % 3] + f[(i + 2) % 3]))
                            for i in range(3)])
        return dir_sign * out

    events = []
    for i in range(3):
        def ev(tau, y, i=i):
            return _safe_scale_factors(y)[i] - f_floor
        ev.terminal = True
        ev.direction = -1
        events.append(ev)

    sol = solve_ivp(rhs, (0.0, span), g_start, method="DOP853", rtol=rtol, atol=atol,
                    max_step=max_step, dense_output=True, events=events)

    event_time = None
    if sol.status == 1:
        event_time = min(te[0] for te in sol.t_events if len(te))
        tau_end = event_time
    else:
        tau_end = sol.t[-1]

    # uniform samples plus a refined tail for the terminal exponent fit
    ts = np.linspace(0.0, tau_end, n_samples)
    if event_time is not None and tau_end > 0:
        tail = tau_end - tau_end * np.geomspace(1e-2, 1e-4, TAIL_SAMPLES)
        ts = np.unique(np.concatenate([ts, tail[tail > 0]]))
    gs = np.asarray(sol.sol(ts)).T
    fs = np.array([_safe_scale_factors(gr) for gr in gs])
    dgs = np.array([rhs(t, gr) for t, gr in zip(ts, gs)])

    traj = FlowTrajectory(ts, gs, dgs, fs, mode, orientation, direction, dir_sign,
                          sol.status, event_time, sol.sol)
    return traj, classify_terminal(traj, f_floor=f_floor)


def classify_terminal(traj: FlowTrajectory, f_floor: float = DEFAULT_F_FLOOR) -> TerminalClass:
    """Deterministic classification of the trajectory tail; see module docstring."""
    if traj.status == 0:
        return TerminalClass("span_reached", None, {"f_final": traj.f[-1]})
    if traj.status < 0 or traj.event_time is None:
        return TerminalClass("incomplete_blowup", None,
                             {"f_final": traj.f[-1], "status": traj.status,
                              "note": "step underflow with no zero crossing"})

    f_end = traj.f[-1]
    df_end = _f_rates(traj.g[-1], traj.dgdtau[-1])
    rates = -df_end
    collapsing = [i for i in range(3) if f_end[i] < 1e3 * f_floor]

    # linear extrapolation of the first crossing past the stopping floor
    remaining = [f_end[i] / rates[i] for i in range(3) if rates[i] > 0]
    tau_star = traj.tau[-1] + (min(remaining) if remaining else 0.0)

    limits = np.array([max(f_end[j] - rates[j] * (tau_star - traj.tau[-1]), 0.0)
                       for j in range(3)])
    diag = {"f_final": f_end, "g_final": traj.g[-1], "rates": rates,
            "tau_star": tau_star, "limits": limits}

    if len(collapsing) == 3:
        ratios = np.array([rates[i] / rates[j] for i in range(3) for j in range(3) if i < j])
        diag["rate_ratios"] = ratios
        if np.all(np.abs(ratios - 1.0) < SMOOTH_RATIO_TOL):
            return TerminalClass("smooth_point", None, diag)
        return TerminalClass("incomplete_blowup", None, diag)

    if len(collapsing) == 1:
        i = collapsing[0]
        exponent = _fit_exponent(traj, i, tau_star)
        diag["exponent"] = exponent
        others_positive = all(limits[j] > 1e3 * f_floor for j in range(3) if j != i)
        if abs(exponent - 1.0) < EXPONENT_FIT_TOL and others_positive:
            return TerminalClass("bolt", i + 1, diag)
        return TerminalClass("incomplete_blowup", None, diag)

    return TerminalClass("incomplete_blowup", None, diag)


def _fit_exponent(traj: FlowTrajectory, i: int, tau_star: float) -> float:
    """Slope of log f_i against log(remaining span) over the trajectory tail."""
    taus = traj.tau[-TAIL_SAMPLES:]
    fs = traj.f[-TAIL_SAMPLES:, i]
    rem = tau_star - taus
    keep = (rem > 0) & (fs > 0)
    if keep.sum() < 5:
        return math.nan
    p = np.polyfit(np.log(rem[keep]), np.log(fs[keep]), 1)
    return float(p[0])


def reconstruct_triple(g, dgdtau, tau_sign: float, mode: str, orientation: str) -> TripleField:
    """The cylinder triple dt ^ *gamma + gamma with exact derivative channels.

    ``tau_sign`` converts the stored d/d tau channel to flow time d/dt for
    trajectories run in the reversed direction.
    """
    g = np.asarray(g, dtype=float)
    dg = np.asarray(dgdtau, dtype=float) * tau_sign
    gs = [Scalar(g[i], dg[i]) for i in range(3)]
    f = [((gs[(i + 1) % 3] * gs[(i + 2) % 3]) / gs[i]).sqrt() for i in range(3)]
    sigma = 1.0 if orientation == "standard" else -1.0
    forms = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        forms.append(MixedForm(2, {(0, i + 1): f[i] * sigma})
                     + MixedForm.basis(j + 1, k + 1) * gs[i])
    frame_mode = "fixed" if mode == "fixed_frame" else "rotating"
    return TripleField(tuple(forms), orientation, frame_mode)


def flow_closedness_residual(traj: FlowTrajectory) -> float:
    """max |d omega| of the reconstructed cylinder triple along the trajectory."""
    res = 0.0
    for i in range(len(traj.tau)):
        trip = reconstruct_triple(traj.g[i], traj.dgdtau[i], traj.direction_sign,
                                  traj.mode, traj.orientation)
        res = max(res, max(f.max_abs() for f in exterior_derivative(trip)))
    return res
