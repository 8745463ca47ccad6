"""Invariant ODE reductions and their closed-form solution catalog.

Closedness of the diagonal ansatz

    omega_1 = f_1 dt^eta_1 + f_2 f_3 eta_2^eta_3   (and cyclic)

is equivalent to the fixed-frame system

    df_1/dt = (f_2^2 + f_3^2 - f_1^2) / (f_2 f_3)   (and cyclic),

and, when the group action rotates the triple, to the rotating-frame system
with the extra -2 f_j f_k terms.  The catalog stores the classical closed
forms (flat cone, the T*S^2 family with bolt parameter c, and the mass-m
family on R^4 with cubic volume growth) as functions of the radial
coordinate r, together with dt/dr.  The sign of dt/dr is not hard-coded: it
is fixed at construction by minimising the ODE residual, so each entry
records the time direction as a computed fact.

Numerical integration wraps scipy's adaptive Runge-Kutta (DOP853) with dense
output; zero crossings of any f_i terminate the run via event detection.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad, solve_ivp

from .forms import DT, MixedForm, Scalar
from .triples import TripleField, exterior_derivative, q_matrix

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_MAX_STEP = 0.1
ZERO_CROSSING_FLOOR = 1e-12


class SingularProfileError(ValueError):
    """ODE right-hand side evaluated where some product f_j f_k vanishes."""


def ode_rhs_fixed(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    f1, f2, f3 = f
    if f2 * f3 == 0.0 or f3 * f1 == 0.0 or f1 * f2 == 0.0:
        raise SingularProfileError("fixed-frame rhs undefined where f_j f_k = 0")
    return np.array([
        (f2 ** 2 + f3 ** 2 - f1 ** 2) / (f2 * f3),
        (f3 ** 2 + f1 ** 2 - f2 ** 2) / (f3 * f1),
        (f1 ** 2 + f2 ** 2 - f3 ** 2) / (f1 * f2),
    ])


def ode_rhs_rotating(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    f1, f2, f3 = f
    if f2 * f3 == 0.0 or f3 * f1 == 0.0 or f1 * f2 == 0.0:
        raise SingularProfileError("rotating-frame rhs undefined where f_j f_k = 0")
    return np.array([
        (f2 ** 2 + f3 ** 2 - f1 ** 2 - 2 * f2 * f3) / (f2 * f3),
        (f3 ** 2 + f1 ** 2 - f2 ** 2 - 2 * f3 * f1) / (f3 * f1),
        (f1 ** 2 + f2 ** 2 - f3 ** 2 - 2 * f1 * f2) / (f1 * f2),
    ])


def ode_rhs(f, mode: str) -> np.ndarray:
    if mode == "fixed_frame":
        return ode_rhs_fixed(f)
    if mode == "rotating_frame":
        return ode_rhs_rotating(f)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class ProfileState:
    f: tuple
    t: float
    mode: str = "fixed_frame"

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(float(x) for x in self.f))
        if self.mode not in ("fixed_frame", "rotating_frame"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def rhs(self) -> np.ndarray:
        return ode_rhs(self.f, self.mode)


# ---------------------------------------------------------------------------
# closed-form catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    family: str
    params: dict
    mode: str
    r_min: float
    r_max: float  # math.inf for unbounded domains
    _f: Callable = field(repr=False)
    _dfdr: Callable = field(repr=False)
    _abs_dtdr: Callable = field(repr=False)
    time_sign: float = field(default=1.0)

    def f(self, r: float) -> np.ndarray:
        self._check(r)
        return self._f(r)

    def dfdr(self, r: float) -> np.ndarray:
        self._check(r)
        return self._dfdr(r)

    def dtdr(self, r: float) -> float:
        self._check(r)
        return self.time_sign * self._abs_dtdr(r)

    def dfdt(self, r: float) -> np.ndarray:
        return self.dfdr(r) / self.dtdr(r)

    def _check(self, r: float):
        if self.r_min == -math.inf:
            if r == 0.0:
                raise ValueError("flat profile is singular at r = 0")
            return
        if not (self.r_min < r):
            raise ValueError(f"radius {r} outside domain ({self.r_min}, {self.r_max})")

    def state_at(self, r: float, t: float = 0.0) -> ProfileState:
        return ProfileState(tuple(self.f(r)), t, self.mode)

    def time_grid(self, r_values, r0: Optional[float] = None) -> np.ndarray:
        """t(r) with t(r0) = 0, by quadrature of dt/dr."""
        r_values = np.asarray(r_values, dtype=float)
        if r0 is None:
            r0 = r_values[0]
        out = np.empty_like(r_values)
        for i, r in enumerate(r_values):
            out[i] = quad(self.dtdr, r0, r, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
        return out

    def ode_residual(self, r_values) -> float:
        res = 0.0
        for r in np.atleast_1d(r_values):
            res = max(res, np.abs(self.dfdt(r) - ode_rhs(self.f(r), self.mode)).max())
        return res

    def triple_at(self, r: float) -> TripleField:
        return profile_triple(self.f(r), self.dfdt(r), self.mode)


def _fix_time_sign(entry_kwargs, probe_radii) -> float:
    """Pick the dt/dr sign minimising the ODE residual at the probes."""
    best = None
    for sign in (1.0, -1.0):
        e = CatalogEntry(**entry_kwargs, time_sign=sign)
        res = e.ode_residual(probe_radii)
        if best is None or res < best[1]:
            best = (sign, res)
    return best[0]


def catalog(family: str, c: float = None, m: float = None) -> CatalogEntry:
    """Closed-form profiles: flat_fixed, flat_rotating, eguchi_hanson(c), taub_nut(m)."""
    family = family.replace("-", "_")
    if family == "flat_fixed":
        kwargs = dict(
            family=family, params={}, mode="fixed_frame", r_min=-math.inf, r_max=math.inf,
            _f=lambda r: np.array([r, r, r]),
            _dfdr=lambda r: np.ones(3),
            _abs_dtdr=lambda r: 1.0,
        )
        probes = [0.5, 1.0, 2.0]
    elif family == "flat_rotating":
        kwargs = dict(
            family=family, params={}, mode="rotating_frame", r_min=-math.inf, r_max=math.inf,
            _f=lambda r: np.array([r, r, r]),
            _dfdr=lambda r: np.ones(3),
            _abs_dtdr=lambda r: 1.0,
        )
        probes = [0.5, 1.0, 2.0]
    elif family == "eguchi_hanson":
        if c is None or c <= 0:
            raise ValueError("eguchi_hanson requires c > 0")
        c4 = c ** 4

        def f(r):
            w = 1.0 - c4 / r ** 4
            return np.array([r * math.sqrt(w), r, r])

        def dfdr(r):
            w = 1.0 - c4 / r ** 4
            return np.array([math.sqrt(w) + 2.0 * c4 / (r ** 4 * math.sqrt(w)), 1.0, 1.0])

        kwargs = dict(
            family=family, params={"c": c}, mode="fixed_frame", r_min=c, r_max=math.inf,
            _f=f, _dfdr=dfdr,
            _abs_dtdr=lambda r: 1.0 / math.sqrt(1.0 - c4 / r ** 4),
        )
        probes = [1.1 * c, 1.5 * c, 3.0 * c]
    elif family == "taub_nut":
        if m is None or m <= 0:
            raise ValueError("taub_nut requires m > 0")

        def f(r):
            return np.array([
                2.0 * m * math.sqrt((r - m) / (r + m)),
                math.sqrt(r ** 2 - m ** 2),
                math.sqrt(r ** 2 - m ** 2),
            ])

        def dfdr(r):
            d1 = 2.0 * m ** 2 / ((r + m) ** 1.5 * math.sqrt(r - m))
            d2 = r / math.sqrt(r ** 2 - m ** 2)
            return np.array([d1, d2, d2])

        kwargs = dict(
            family=family, params={"m": m}, mode="rotating_frame", r_min=m, r_max=math.inf,
            _f=f, _dfdr=dfdr,
            _abs_dtdr=lambda r: 0.5 * math.sqrt((r + m) / (r - m)),
        )
        probes = [1.2 * m, 2.0 * m, 4.0 * m]
    else:
        raise ValueError(f"unknown catalog family {family!r}")

    sign = _fix_time_sign(kwargs, probes)
    return CatalogEntry(**kwargs, time_sign=sign)


# ---------------------------------------------------------------------------
# triples from profiles
# ---------------------------------------------------------------------------

def profile_triple(f, dfdt=None, mode: str = "fixed_frame") -> TripleField:
    """The diagonal ansatz triple with exact derivative channels."""
    if dfdt is None:
        dfdt = ode_rhs(f, mode)
    s = [Scalar(float(f[i]), float(dfdt[i])) for i in range(3)]
    frame_mode = "fixed" if mode == "fixed_frame" else "rotating"
    forms = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        forms.append(
            MixedForm(2, {(DT, i + 1): s[i]})
            + MixedForm.basis(j + 1, k + 1) * (s[j] * s[k])
        )
    return TripleField(tuple(forms), orientation="standard", frame_mode=frame_mode)


def triple_from_profile(state_or_f, dfdt=None, mode: str = None) -> TripleField:
    if isinstance(state_or_f, ProfileState):
        return profile_triple(state_or_f.f, state_or_f.rhs(), state_or_f.mode)
    return profile_triple(state_or_f, dfdt, mode or "fixed_frame")


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TerminalStatus:
    kind: str  # reached_span | f_component_zero | step_underflow
    component: Optional[int] = None  # 1-based, matching f_1, f_2, f_3
    message: str = ""

    def to_dict(self):
        return {"kind": self.kind, "component": self.component, "message": self.message}


@dataclass
class Trajectory:
    t: np.ndarray
    f: np.ndarray      # shape (n, 3)
    dfdt: np.ndarray   # shape (n, 3)
    terminal: TerminalStatus
    mode: str
    sol: object = field(repr=False, default=None)  # scipy dense output

    def interpolate(self, t_values) -> np.ndarray:
        return np.asarray(self.sol(np.atleast_1d(t_values))).T

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "f1", "f2", "f3", "df1", "df2", "df3"])
            for i in range(len(self.t)):
                w.writerow([_fmt(self.t[i])] + [_fmt(x) for x in self.f[i]] + [_fmt(x) for x in self.dfdt[i]])

    def to_json(self, path=None):
        payload = {
            "mode": self.mode,
            "terminal": self.terminal.to_dict(),
            "samples": [
                {"t": self.t[i], "f": list(self.f[i]), "dfdt": list(self.dfdt[i])}
                for i in range(len(self.t))
            ],
        }
        if path is None:
            return payload
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def integrate(start: ProfileState, t_span, rtol: float = DEFAULT_RTOL,
              atol: float = DEFAULT_ATOL, max_step: float = DEFAULT_MAX_STEP,
              n_samples: int = 200, zero_floor: float = ZERO_CROSSING_FLOOR) -> Trajectory:
    """Adaptive integration of the profile ODEs with zero-crossing events.

    The run stops when any |f_i| falls to ``zero_floor`` (bisection on the
    dense output); simultaneous crossings report the smallest component
    index.  Step-size underflow is reported in the terminal status rather
    than raised.
    """
    mode = start.mode

    def rhs(t, y):
        return ode_rhs(y, mode)

    events = []
    for i in range(3):
        def ev(t, y, i=i):
            return abs(y[i]) - zero_floor
        ev.terminal = True
        ev.direction = -1
        events.append(ev)

    t0 = start.t
    t1 = float(np.atleast_1d(t_span)[-1])
    sol = solve_ivp(rhs, (t0, t1), np.asarray(start.f, dtype=float), method="DOP853",
                    rtol=rtol, atol=atol, max_step=max_step,
                    dense_output=True, events=events)
    if sol.status == 1:
        hit = [(te[0], i) for i, te in enumerate(sol.t_events) if len(te)]
        # earliest crossing; ties resolved to the smallest component index
        t_hit = min(h[0] for h in hit) if t1 >= t0 else max(h[0] for h in hit)
        comps = sorted(i for te, i in hit if abs(te - t_hit) <= 1e-12 * max(1.0, abs(t_hit)))
        terminal = TerminalStatus("f_component_zero", comps[0] + 1,
                                  f"f_{comps[0] + 1} reached |f| < {zero_floor:g}")
        t_end = t_hit
    elif sol.status == 0:
        terminal = TerminalStatus("reached_span", None, "")
        t_end = t1
    else:
        terminal = TerminalStatus("step_underflow", None, sol.message)
        t_end = sol.t[-1]

    ts = np.linspace(t0, t_end, n_samples)
    fs = np.asarray(sol.sol(ts)).T
    dfs = np.array([ode_rhs(fr, mode) for fr in fs])
    return Trajectory(ts, fs, dfs, terminal, mode, sol.sol)


def hk_residual(traj, mode: str = None):
    """(max |Q|, max |d omega|) pointwise along a trajectory or state list.

    The exterior derivative is mode-aware: in rotating mode it includes the
    conjugation correction, so the residual vanishes exactly on solutions of
    the rotating-frame system.
    """
    if isinstance(traj, Trajectory):
        mode = mode or traj.mode
        states = [(traj.f[i], traj.dfdt[i]) for i in range(len(traj.t))]
    else:
        states = traj
    max_q = 0.0
    max_d = 0.0
    for f, dfdt in states:
        trip = profile_triple(f, dfdt, mode)
        max_q = max(max_q, np.abs(q_matrix(trip)).max())
        max_d = max(max_d, max(g.max_abs() for g in exterior_derivative(trip)))
    return max_q, max_d


def catalog_states(entry: CatalogEntry, r_values):
    """(f, df/dt) pairs with closed-form derivative channels, for hk_residual."""
    return [(entry.f(r), entry.dfdt(r)) for r in np.atleast_1d(r_values)]
