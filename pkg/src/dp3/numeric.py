"""Series evaluation and numerical integration in the original variables.

The equation is

    tau u u'' = tau u'^2 - u u' + u (-8 eps u^2 + 2 a b) + b^2 tau,   a = kappa i / 2,

and the vanishing solution family is u = i kappa b tau (1 + c1t tau + sum_{m>=2} ct_m tau^m).
Integration starts slightly off the singular point tau = 0 from the series.
"""

from __future__ import annotations

import cmath
import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .cache import CoeffCache
from .coeffs import compute_cm, numeric_coefficients
from .series import ComplexSeries, SeriesDivisionError


class RouteMismatchError(ArithmeticError):
    """The two independent evaluations of the series coefficients disagree."""


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolutionParams:
    kappa: int
    eps: int
    b: float
    c1t: complex

    def __post_init__(self):
        if self.kappa not in (1, -1):
            raise ValueError("kappa must be +1 or -1")
        if self.eps not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        if not self.eps * self.b > 0:
            raise ValueError("need eps * b > 0")

    @property
    def a(self) -> complex:
        return self.kappa * 0.5j

    @property
    def eps_b(self) -> float:
        return self.eps * self.b

    @property
    def cubic(self) -> complex:
        """Weight of the triple sum in the recurrence for ct_m."""
        return -8j * self.kappa * self.eps * self.b

    @property
    def prefactor(self) -> complex:
        """-b/(2a) = i kappa b."""
        return -self.b / (2 * self.a)

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "eps": self.eps, "b": self.b,
                "c1t": [self.c1t.real, self.c1t.imag] if isinstance(self.c1t, complex)
                else [float(self.c1t), 0.0]}


# ---------------------------------------------------------------------------
# series


_EXACT = CoeffCache()


def exact_cache(M: int) -> CoeffCache:
    """Process-wide in-memory table of the exact c_m, extended on demand."""
    if _EXACT.max_m < M:
        compute_cm(max(M, 2), _EXACT, validate="none")
    return _EXACT


def rescaling_factor(params: SolutionParams) -> complex:
    """alpha with alpha^2 = C/4; then ct_m = alpha^m c_m(c1t/alpha)."""
    return cmath.sqrt(params.cubic / 4)


def tilde_coefficients(params: SolutionParams, M: int, rtol: float = 1e-12) -> list[complex]:
    """ct_0 .. ct_M, computed by the complex recurrence and by rescaling the exact c_m.

    Raises RouteMismatchError when the routes differ by more than ``rtol``
    relative to the size of the terms being summed.
    """
    direct = numeric_coefficients(params.c1t, M, cubic=params.cubic)
    alpha = rescaling_factor(params)
    x = complex(params.c1t) / alpha
    cache = exact_cache(M)
    for m in range(M + 1):
        poly = cache.poly(m)
        via = alpha ** m * poly(x)
        scale = abs(alpha) ** m * poly.evaluate_abs(x)
        if abs(via - direct[m]) > rtol * max(scale, abs(direct[m]), 1e-300):
            raise RouteMismatchError(
                f"ct_{m}: recurrence gives {direct[m]!r}, rescaled table gives {via!r}")
    return direct


def series_u(params: SolutionParams, order: int) -> ComplexSeries:
    """u(tau) + O(tau^order)."""
    if order < 2:
        raise ValueError("order must be at least 2")
    ct = tilde_coefficients(params, order - 2)
    return ComplexSeries([0j] + [params.prefactor * c for c in ct], prec=order)


def ode_residual_series(u: ComplexSeries, a: complex, b: float, eps: int) -> ComplexSeries:
    """tau u u'' - tau u'^2 + u u' - u(-8 eps u^2 + 2ab) - b^2 tau, as a series."""
    tau = ComplexSeries.z(u.prec + 2)
    du = u.derivative()
    ddu = du.derivative()
    return tau * u * ddu - tau * du * du + u * du - u * (u * u * (-8 * eps) + 2 * a * b) - tau * (b * b)


def ode_residual_scale(u: ComplexSeries, a: complex, b: float) -> ComplexSeries:
    """The residual expression with every coefficient and sign made positive.

    Its k-th coefficient bounds the sum of magnitudes that cancel in the k-th
    residual coefficient, so it is the natural rounding scale.
    """
    m = ComplexSeries([complex(abs(x)) for x in u.coefficients()], prec=u.prec)
    tau = ComplexSeries.z(u.prec + 2)
    dm = m.derivative()
    ddm = dm.derivative()
    return (tau * m * ddm + tau * dm * dm + m * dm + m * (m * m * 8 + abs(2 * a * b))
            + tau * (b * b))


# ---------------------------------------------------------------------------
# Backlund transformation on series


@dataclass
class BacklundCheck:
    coefficients: list  # uhat_0 .. uhat_2 from series arithmetic
    expected: list  # from the closed expansion in ct_1..ct_3
    mismatch: float
    ode_residual: float  # transformed series in the a = -i/2 equation, relative
    checked_order: int
    ode_residual_abs: float = 0.0


def backlund_series(u: ComplexSeries, params: SolutionParams) -> ComplexSeries:
    """uhat = eps b tau (i u' + b) / (8 u^2), by series arithmetic."""
    tol = 1e-13 * max(1.0, abs(params.b))
    num = (u.derivative() * 1j + params.b).drop_below(1, tol)  # (i u' + b)/tau
    unit = u.drop_below(1, tol)  # u/tau
    return num / (unit * unit) * (params.eps_b / 8)


def backlund_series_check(params: SolutionParams, order: int = 24) -> BacklundCheck:
    if params.kappa != 1:
        raise ValueError("the Backlund transformation is applied to kappa = +1 solutions")
    if order < 3:
        raise ValueError("order must be at least 3")
    u = series_u(params, order + 3)
    uh = backlund_series(u, params)
    if uh.prec < 3:
        raise SeriesDivisionError("transformed series lost too much precision")
    ct = tilde_coefficients(params, 3)
    c1, c2, c3 = ct[1], ct[2], ct[3]
    e = params.eps
    expected = [e * c1 / 4, e * (3 * c2 / 8 - c1 * c1 / 2),
                e * (c3 / 2 + 3 * c1 ** 3 / 4 - 5 * c1 * c2 / 4)]
    got = [uh[k] for k in range(3)]
    mismatch = max(abs(x - y) for x, y in zip(got, expected))
    res = ode_residual_series(uh, -0.5j, params.b, params.eps)
    scale = ode_residual_scale(uh, -0.5j, params.b)
    known = min(res.prec, uh.prec - 1)
    ks = range(res.val, known)
    ode = max((abs(res[k]) / max(abs(scale[k]), 1e-300) for k in ks), default=0.0)
    ode_abs = max((abs(res[k]) for k in ks), default=0.0)
    return BacklundCheck(got, expected, mismatch, ode, known, ode_abs)


# ---------------------------------------------------------------------------
# integration


@dataclass
class PoleMarker:
    lo: float
    hi: float
    indication: str


@dataclass
class Trajectory:
    params: SolutionParams
    tau: np.ndarray
    u: np.ndarray
    du: np.ndarray
    poles: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.tau)

    @property
    def samples(self) -> list[tuple[float, complex, complex]]:
        return list(zip(self.tau.tolist(), self.u.tolist(), self.du.tolist()))

    @property
    def pole_free(self) -> bool:
        return not self.poles


def _rhs(params: SolutionParams):
    a, b, eps = params.a, params.b, params.eps

    def f(t, y):
        u = complex(y[0], y[1])
        v = complex(y[2], y[3])
        w = v * v / u - v / t + (-8 * eps * u * u + 2 * a * b) / t + b * b / u
        return [v.real, v.imag, w.real, w.imag]

    return f


def seed_state(params: SolutionParams, tau0: float, order: int = 40) -> tuple[complex, complex]:
    s = series_u(params, order)
    return s(tau0), s.derivative()(tau0)


BIG = 1e8
SMALL = 1e-10


def integrate_state(params: SolutionParams, t0: float, state: tuple[complex, complex], t1: float,
                    tol: float = 1e-10, t_eval=None, big: float = BIG, small: float = SMALL):
    """Integrate (u, u') from t0 to t1 (either direction); return the scipy solution."""
    u0, v0 = state

    def blowup(t, y):
        return math.hypot(y[0], y[1]) - big

    def vanish(t, y):
        return math.hypot(y[0], y[1]) - small

    blowup.terminal = vanish.terminal = True
    return solve_ivp(_rhs(params), (t0, t1), [u0.real, u0.imag, v0.real, v0.imag],
                     method="DOP853", rtol=tol, atol=tol, t_eval=t_eval,
                     events=(blowup, vanish), dense_output=False)


def _marker(t: float, y, kind: str) -> PoleMarker:
    u = complex(y[0], y[1])
    v = complex(y[2], y[3])
    reach = 2 * abs(u / v) if v != 0 else 0.0
    if kind == "blowup":
        return PoleMarker(t, t + reach, "|u| -> infinity")
    return PoleMarker(t, t + reach, "u -> 0 (singular value of the equation)")


def integrate(params: SolutionParams, tau0: float = 1e-3, tau_end: float = 10.0, tol: float = 1e-10,
              seed_order: int = 40, samples: int | Sequence[float] = 501,
              big: float = BIG, small: float = SMALL) -> Trajectory:
    """Series-seeded integration over [tau0, tau_end] sampled on an output grid.

    The run stops at the first pole signature (|u| > big or |u| < small) and
    records a marker starting where integration stopped; nothing is continued
    past a pole.
    """
    if not 0 < tau0 < tau_end:
        raise ValueError("need 0 < tau0 < tau_end")
    grid = (np.linspace(tau0, tau_end, samples) if isinstance(samples, int)
            else np.asarray(samples, dtype=float))
    if np.any(np.diff(grid) <= 0) or grid[0] < tau0 or grid[-1] > tau_end:
        raise ValueError("output grid must increase within [tau0, tau_end]")
    state = seed_state(params, tau0, seed_order)
    sol = integrate_state(params, tau0, state, tau_end, tol, t_eval=grid, big=big, small=small)
    poles = []
    for kind, ev_t, ev_y in zip(("blowup", "vanish"), sol.t_events, sol.y_events):
        if len(ev_t):
            poles.append(_marker(float(ev_t[0]), ev_y[0], kind))
    if sol.status == -1:
        y = sol.y[:, -1] if sol.y.size else None
        last = float(sol.t[-1]) if sol.t.size else tau0
        u = abs(complex(y[0], y[1])) if y is not None else float("nan")
        if y is not None and (u > 1e4 or u < 1e-6):
            poles.append(_marker(last, y, "blowup" if u > 1 else "vanish"))
        else:
            raise IntegrationError(f"integration failure near tau = {last}: {sol.message}")
    keep = sol.t < poles[0].lo if poles else slice(None)
    tau, y = sol.t[keep], sol.y[:, keep]
    meta = {"tau0": tau0, "tau_end": tau_end, "tol": tol, "seed_order": seed_order,
            "method": "DOP853", "nfev": int(sol.nfev)}
    return Trajectory(params, tau, y[0] + 1j * y[1], y[2] + 1j * y[3], poles, meta)


def ode_residual_samples(traj: Trajectory) -> np.ndarray:
    """Residual of the equation at interior samples, with u'' from central differences."""
    t, u, du = traj.tau, traj.u, traj.du
    if len(t) < 3:
        return np.zeros(0)
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    # second-order first-derivative stencil applied to the sampled u'
    ddu = (du[2:] * h1 ** 2 - du[:-2] * h2 ** 2 + du[1:-1] * (h2 ** 2 - h1 ** 2)) / (h1 * h2 * (h1 + h2))
    p = traj.params
    tm, um, dm = t[1:-1], u[1:-1], du[1:-1]
    return tm * um * ddu - tm * dm ** 2 + um * dm - um * (-8 * p.eps * um ** 2 + 2 * p.a * p.b) - p.b ** 2 * tm


# ---------------------------------------------------------------------------
# the change of variables to the Garnier form


def garnier_transform(traj: Trajectory, a_hat: float) -> list[tuple[float, complex]]:
    """(t, xi) = (tau^2, 8 tau u / a_hat^3) for every sample; needs eps = +1."""
    if a_hat == 0:
        raise ValueError("a_hat must be nonzero")
    if traj.params.eps != 1:
        raise ValueError("the change of variables is stated for eps = +1")
    return garnier_points(traj.tau, traj.u, a_hat)


def garnier_points(tau, u, a_hat: float) -> list[tuple[float, complex]]:
    if a_hat == 0:
        raise ValueError("a_hat must be nonzero")
    k = 8 / a_hat ** 3
    return [(float(t) ** 2, k * float(t) * complex(x)) for t, x in zip(tau, u)]


# ---------------------------------------------------------------------------
# CSV and manifest


CSV_HEADER = ["tau", "re_u", "im_u", "re_du", "im_du"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for t, u, v in zip(traj.tau, traj.u, traj.du):
        w.writerow([_fmt(t), _fmt(u.real), _fmt(u.imag), _fmt(v.real), _fmt(v.imag)])
    for p in traj.poles:
        buf.write(f"# pole near tau in [{_fmt(p.lo)}, {_fmt(p.hi)}]: {p.indication}\n")
    return buf.getvalue()


def emit_csv(traj: Trajectory, path) -> None:
    path = Path(path)
    try:
        path.write_text(format_csv(traj))
    except OSError as exc:
        raise OSError(f"cannot write trajectory CSV {path}: {exc}") from exc


def read_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    """(tau, u, du, comment lines) from a file written by :func:`emit_csv`."""
    rows, comments = [], []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for line in fh:
            if line.startswith("#"):
                comments.append(line.rstrip("\n"))
            elif line.strip():
                rows.append([float(x) for x in line.split(",")])
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    return arr[:, 0], arr[:, 1] + 1j * arr[:, 2], arr[:, 3] + 1j * arr[:, 4], comments


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(runs: list[tuple[Trajectory, Path]], path) -> dict:
    """JSON manifest for a batch of emitted trajectories."""
    entries = []
    for traj, csv_path in runs:
        entries.append({
            "csv": str(csv_path),
            "sha256": sha256_file(csv_path),
            "params": traj.params.to_dict(),
            "tolerances": {"rtol": traj.meta.get("tol"), "atol": traj.meta.get("tol")},
            "meta": traj.meta,
            "samples": len(traj),
            "poles": [asdict(p) for p in traj.poles],
        })
    doc = {"runs": entries}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")
    return doc
