"""Hybrid closed-loop simulation of the two-link arm.

The plant is integrated with fixed-step RK4; discrete controls are held over
each sampling interval. Continuous-time baselines are re-evaluated at every
integration sub-step and held between sub-steps.
"""

import csv
from dataclasses import dataclass, field, fields

import numpy as np

from . import baselines, matlib, observer, ude
from .discretize import manipulator_system, zoh_discretize
from .errors import DivergenceError, IntegrationError
from .manipulator import (
    ACTUAL,
    REFERENCE_A,
    REFERENCE_B,
    UNCERTAIN,
    external_disturbance,
    forward_dynamics,
    nominal_input_matrix,
    nominal_mu,
    reference_inputs,
    total_disturbance,
)

CONTROLLERS = ("dt-ude", "ct-ude", "smc", "pd-gravity")


def rk4_step(f, x, t, h):
    """Classical fourth-order Runge–Kutta step for ``ẋ = f(x, t)``."""
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    k1 = f(x, t)
    k2 = f(x + 0.5 * h * k1, t + 0.5 * h)
    k3 = f(x + 0.5 * h * k2, t + 0.5 * h)
    k4 = f(x + h * k3, t + h)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise IntegrationError(f"non-finite derivative at t={t:.6g}", t=t)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _zero_disturbance(x, t):
    return np.zeros(2)


@dataclass(frozen=True)
class Scenario:
    params_actual: object = ACTUAL
    params_uncertain: object = UNCERTAIN
    nominal: str = "actual"
    Am: np.ndarray = field(default_factory=lambda: REFERENCE_A.copy())
    Bm: np.ndarray = field(default_factory=lambda: REFERENCE_B.copy())
    ref_inputs: object = reference_inputs
    d_ext: object = external_disturbance
    Ts: float = 0.01
    substeps: int = 10
    duration: float = 20.0
    x0: np.ndarray = field(default_factory=lambda: np.zeros(4))
    xm0: np.ndarray = field(default_factory=lambda: np.zeros(4))
    xhat0: np.ndarray = field(default_factory=lambda: np.zeros(4))
    controller: str = "dt-ude"
    tau: float = 0.01
    allow_unstable_tau: bool = False
    observer_scale: float = 0.1
    reference_hold: bool = True
    smc_bounds: tuple = (15.0, 10.0)
    smc_epsilon: float = 0.1
    smc_kd: float = 7.0
    pd_kp: float = 1.0
    pd_kd: float = 0.1
    divergence_limit: float = 1e6

    def __post_init__(self):
        if not self.Ts > 0:
            raise ValueError(f"Ts must be positive, got {self.Ts}")
        if int(self.substeps) < 1:
            raise ValueError(f"substeps must be >= 1, got {self.substeps}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}; valid: {', '.join(CONTROLLERS)}")
        if self.nominal not in ("actual", "uncertain"):
            raise ValueError(f"nominal must be 'actual' or 'uncertain', got {self.nominal!r}")

    @property
    def nominal_params(self):
        return self.params_actual if self.nominal == "actual" else self.params_uncertain

    @property
    def steps(self):
        return int(round(self.duration / self.Ts))

    def disturbance(self, x, t):
        return _zero_disturbance(x, t) if self.d_ext is None else np.asarray(self.d_ext(x, t), dtype=float)

    def system(self):
        return manipulator_system(self.nominal_params, self.Ts, self.Am, self.Bm)


def design_dt_ude(sc, sys=None):
    """Controller and observer configurations for a scenario."""
    sys = sc.system() if sys is None else sys
    kd = ude.design_kd(sys)
    ucfg = ude.UdeConfig(sys=sys, Kd=kd, tau=sc.tau, allow_unstable_tau=sc.allow_unstable_tau)
    beta = observer.design_beta(sys, scale=sc.observer_scale)
    ocfg = observer.ObserverConfig(sys=sys, beta=beta, controller_radius=matlib.spectral_radius(ucfg.Fc))
    return ucfg, ocfg


CSV_COLUMNS = (
    ["t"]
    + [f"x{i}" for i in range(1, 5)]
    + [f"xm{i}" for i in range(1, 5)]
    + [f"xhat{i}" for i in range(1, 5)]
    + ["u1", "u2"]
    + [f"Ld{i}" for i in range(1, 5)]
    + [f"Ldhat{i}" for i in range(1, 5)]
    + [f"e{i}" for i in range(1, 5)]
)


@dataclass
class SimTrace:
    """Per-sample record of a run. Row k is time k·Ts.

    ``Ld[k]`` is the lumped disturbance acting over [k, k+1), so its last row
    is NaN. Controllers without an observer log ``xhat = x``.
    """

    controller: str
    Ts: float
    t: np.ndarray
    x: np.ndarray
    xm: np.ndarray
    xhat: np.ndarray
    y: np.ndarray
    yhat: np.ndarray
    u: np.ndarray
    u_peak: np.ndarray
    u_d: np.ndarray
    dhat: np.ndarray
    Ld: np.ndarray
    Ldhat: np.ndarray
    d_true: np.ndarray
    form_gap: np.ndarray

    @property
    def e(self):
        return self.x - self.xm

    @property
    def e_se(self):
        return self.x - self.xhat

    @property
    def ehat(self):
        return self.xhat - self.xm

    def __len__(self):
        return len(self.t)

    def rows(self):
        return np.column_stack([self.t, self.x, self.xm, self.xhat, self.u, self.Ld, self.Ldhat, self.e])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])

    def equals(self, other):
        """Bit-for-bit equality of every array field."""
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray):
                if a.shape != b.shape or a.tobytes() != b.tobytes():
                    return False
            elif a != b:
                return False
        return True


class _Recorder:
    def __init__(self):
        self.cols = {k: [] for k in ("t", "x", "xm", "xhat", "u", "u_peak", "u_d", "dhat", "ldhat", "form_gap")}

    def add(self, **kw):
        for k, v in kw.items():
            self.cols[k].append(np.array(v, dtype=float, copy=True))

    def close_peak(self, peak):
        self.cols["u_peak"][-1] = np.maximum(self.cols["u_peak"][-1], peak)

    def finish(self, sc, sys):
        n = len(self.cols["t"])
        c = {k: np.array(v) for k, v in self.cols.items()}
        x, xm, u = c["x"], c["xm"], c["u"]
        e = x - xm
        ld = np.full((n, 4), np.nan)
        if n > 1:
            ld[:-1] = e[1:] - e[:-1] @ sys.Fn.T - u[:-1] @ sys.Gn.T
        mu = nominal_mu(sc.nominal_params)
        d_true = np.full((n, 2), np.nan)
        for k in range(n):
            if np.all(np.isfinite(x[k])) and np.all(np.isfinite(u[k])):
                d_true[k] = total_disturbance(sc.params_actual, mu, x[k], u[k], sc.disturbance(x[k], c["t"][k]))
        return SimTrace(
            controller=sc.controller,
            Ts=sc.Ts,
            t=c["t"],
            x=x,
            xm=xm,
            xhat=c["xhat"],
            y=x @ sys.C.T,
            yhat=c["xhat"] @ sys.C.T,
            u=u,
            u_peak=c["u_peak"],
            u_d=c["u_d"].reshape(n, 2),
            dhat=c["dhat"].reshape(n, 4),
            Ld=ld,
            Ldhat=c["ldhat"].reshape(n, 4),
            d_true=d_true,
            form_gap=c["form_gap"],
        )


def run_closed_loop(sc):
    """Simulate one scenario and return its :class:`SimTrace`.

    Raises :class:`DivergenceError` (carrying the partial trace) once a state
    norm exceeds ``sc.divergence_limit``.
    """
    sys = sc.system()
    ts, n_sub = sc.Ts, int(sc.substeps)
    h = ts / n_sub
    pa = sc.params_actual
    nan2, nan4 = np.full(2, np.nan), np.full(4, np.nan)

    def plant(x, t, u):
        return forward_dynamics(pa, x, u, sc.disturbance(x, t))

    fh, gh = zoh_discretize(sc.Am, sc.Bm, h)

    def ref_rhs(xm, t):
        return sc.Am @ xm + sc.Bm @ sc.ref_inputs(t)

    x = np.array(sc.x0, dtype=float)
    xm = np.array(sc.xm0, dtype=float)

    kind = sc.controller
    ct = None
    if kind == "dt-ude":
        ucfg, ocfg = design_dt_ude(sc, sys)
        ust = ude.UdeState.initial(2)
        ost = observer.ObserverState.initial(sc.xhat0)
        check_tol = 1e-10 if sc.reference_hold else None
    else:
        a, b = nominal_input_matrix(sc.nominal_params)
        k_ct = baselines.design_continuous_gain(a, b, sc.Am)
        if kind == "ct-ude":
            ct = baselines.CtUdeConfig(K=k_ct, A=a, B=b, tau=sc.tau)
            b_pinv = ct.B_pinv
        elif kind == "smc":
            smc = baselines.SmcConfig(
                K=k_ct,
                D_bounds=np.asarray(sc.smc_bounds, dtype=float),
                epsilon=sc.smc_epsilon,
                KD_slide=sc.smc_kd,
                uncertain_params=sc.params_uncertain,
            )
        else:
            pd = baselines.PdConfig(KP=sc.pd_kp, KD=sc.pd_kd, params_for_gravity=sc.params_uncertain)

    def continuous_u(x, xm, r, t):
        nonlocal ct
        if kind == "ct-ude":
            u, ct = baselines.ct_ude_control(ct, x - xm, h, b_pinv)
            return u
        if kind == "smc":
            return baselines.smc_control(smc, x, xm, baselines.reference_acceleration(sc.Am, sc.Bm, xm, r))
        return baselines.pd_gravity_control(pd, x, xm)

    rec = _Recorder()
    limit = sc.divergence_limit
    n_steps = sc.steps
    for k in range(n_steps + 1):
        t = k * ts
        r_k = np.asarray(sc.ref_inputs(t), dtype=float)
        y = sys.C @ x
        if kind == "dt-ude":
            xhat_k = ost.xhat
            u, ust, ost, diag = observer.controller_observer_step(ucfg, ust, ocfg, ost, xm, r_k, y, k, check_tol)
            rec.add(t=t, x=x, xm=xm, xhat=xhat_k, u=u, u_peak=np.abs(u), u_d=diag["u_d"], dhat=diag["dhat"],
                    ldhat=diag["ldhat"], form_gap=diag["form_gap"])
        else:
            u = continuous_u(x, xm, r_k, t)
            rec.add(t=t, x=x, xm=xm, xhat=x, u=u, u_peak=np.abs(u), u_d=nan2, dhat=nan4, ldhat=nan4, form_gap=0.0)
        if k == n_steps:
            break
        peak = np.abs(u)
        for s in range(n_sub):
            tt = t + s * h
            if kind != "dt-ude" and s > 0:
                r_s = r_k if sc.reference_hold else np.asarray(sc.ref_inputs(tt), dtype=float)
                u = continuous_u(x, xm, r_s, tt)
                peak = np.maximum(peak, np.abs(u))
            try:
                x = rk4_step(lambda xx, ttt: plant(xx, ttt, u), x, tt, h)
            except (ArithmeticError, ValueError) as exc:
                rec.close_peak(peak)
                raise DivergenceError(f"{kind}: integration failed at t={tt:.4f}: {exc}", t=tt,
                                      trace=rec.finish(sc, sys)) from exc
            if not (np.all(np.isfinite(x)) and np.linalg.norm(x) <= limit):
                rec.close_peak(peak)
                raise DivergenceError(f"{kind}: plant state norm exceeded {limit:g} at t={tt + h:.4f}",
                                      t=tt + h, trace=rec.finish(sc, sys))
            if sc.reference_hold:
                xm = fh @ xm + gh @ r_k
            else:
                xm = rk4_step(ref_rhs, xm, tt, h)
        rec.close_peak(peak)
        if kind == "dt-ude" and not (np.all(np.isfinite(ost.xhat)) and np.linalg.norm(ost.xhat) <= limit):
            raise DivergenceError(
                f"{kind}: observer state norm exceeded {limit:g} at t={t + ts:.4f}", t=t + ts,
                trace=rec.finish(sc, sys)
            )
    return rec.finish(sc, sys)


@dataclass(frozen=True)
class Metrics:
    ise: np.ndarray
    control_energy: float
    peak_tau: np.ndarray
    rms_dest_final: float
    final_rms_error: np.ndarray
    final_max_error: np.ndarray

    def as_dict(self):
        return {
            "ise1": float(self.ise[0]),
            "ise2": float(self.ise[1]),
            "control_energy": float(self.control_energy),
            "peak_tau1": float(self.peak_tau[0]),
            "peak_tau2": float(self.peak_tau[1]),
            "rms_dest_final": float(self.rms_dest_final),
            "final_rms_err1": float(self.final_rms_error[0]),
            "final_rms_err2": float(self.final_rms_error[1]),
            "final_max_err1": float(self.final_max_error[0]),
            "final_max_err2": float(self.final_max_error[1]),
        }


def _tail(n, frac):
    return slice(n - max(1, int(round(frac * n))), n)


def compute_metrics(tr, final_fraction=0.2, final_window=1.0):
    """Integral and peak measures of a trace.

    Integrals use the left rectangle rule over the sampling intervals. Final
    errors are taken over the last ``final_window`` seconds (RMS) and the last
    ``final_fraction`` of the run (max and disturbance-estimate RMS).
    """
    n = len(tr)
    if n == 0:
        raise ValueError("cannot compute metrics of an empty trace")
    ts = tr.Ts
    pos = tr.e[:, [0, 2]]
    body = slice(0, max(n - 1, 1))
    ise = np.sum(pos[body] ** 2, axis=0) * ts
    energy = float(np.sum(tr.u[body] ** 2) * ts)
    peak = np.max(tr.u_peak, axis=0)
    tail = _tail(n, final_fraction)
    dest = np.linalg.norm(tr.Ld[tail] - tr.Ldhat[tail], axis=1)
    dest = dest[np.isfinite(dest)]
    rms_dest = float(np.sqrt(np.mean(dest**2))) if dest.size else float("nan")
    win = slice(max(0, n - int(round(final_window / ts))), n)
    return Metrics(
        ise=ise,
        control_energy=energy,
        peak_tau=peak,
        rms_dest_final=rms_dest,
        final_rms_error=np.sqrt(np.mean(pos[win] ** 2, axis=0)),
        final_max_error=np.max(np.abs(pos[tail]), axis=0),
    )


def _as_sequence(v, k):
    return np.asarray(v(k) if callable(v) else v, dtype=float)


def run_linear_ude(ucfg, ld, steps, e0=None, divergence_limit=1e6):
    """Full-state UDE loop on the discrete error model ``e(k+1) = Fn·e + Gn·u + L_d(k)``.

    ``ld`` is a constant vector or a function of k. Returns a dict of arrays
    ``e, u, u_d, ld, ldhat, ld_err`` with one row per step.
    """
    sys = ucfg.sys
    e = np.zeros(sys.n) if e0 is None else np.array(e0, dtype=float)
    st = ude.UdeState.initial(sys.p)
    out = {k: [] for k in ("e", "u", "u_d", "ld", "ldhat", "ld_err")}
    for k in range(steps):
        u, st, ud = ude.control_step(ucfg, st, e, k)
        l_k = _as_sequence(ld, k)
        lh = ude.lumped_disturbance_estimate(ucfg, ud)
        for name, v in (("e", e), ("u", u), ("u_d", ud), ("ld", l_k), ("ldhat", lh), ("ld_err", l_k - lh)):
            out[name].append(v)
        worst = max(np.linalg.norm(e), np.linalg.norm(ud), np.linalg.norm(l_k - lh))
        if not np.isfinite(worst) or worst > divergence_limit:
            res = {k2: np.array(v) for k2, v in out.items()}
            raise DivergenceError(f"linear UDE loop exceeded {divergence_limit:g} at step {k}", t=k, trace=res)
        e = sys.Fn @ e + sys.Gn @ u + l_k
    return {k: np.array(v) for k, v in out.items()}


def run_linear_observer(ucfg, ocfg, dd, steps, x0=None, xhat0=None, xm0=None, r=None, check_tol=1e-10):
    """Output-feedback loop on a discrete linear plant with disturbance ``dd``.

    Plant ``x(k+1) = Fn·x + Gn·u + D_d(k)``, reference
    ``x_m(k+1) = Fm·x_m + Gm·r(k)``. Returns a :class:`SimTrace`.
    """
    sys = ucfg.sys
    n = sys.n
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    xm = np.zeros(n) if xm0 is None else np.array(xm0, dtype=float)
    ust = ude.UdeState.initial(sys.p)
    ost = observer.ObserverState.initial(np.zeros(n) if xhat0 is None else xhat0)
    cols = {k: [] for k in ("t", "x", "xm", "xhat", "u", "u_d", "dhat", "ldhat", "gap")}
    for k in range(steps + 1):
        r_k = np.zeros(sys.p) if r is None else _as_sequence(r, k)
        xhat_k = ost.xhat
        u, ust, ost, diag = observer.controller_observer_step(ucfg, ust, ocfg, ost, xm, r_k, sys.C @ x, k, check_tol)
        for name, v in (("t", k * sys.Ts), ("x", x), ("xm", xm), ("xhat", xhat_k), ("u", u), ("u_d", diag["u_d"]),
                        ("dhat", diag["dhat"]), ("ldhat", diag["ldhat"]), ("gap", diag["form_gap"])):
            cols[name].append(np.array(v, dtype=float, copy=True))
        x = sys.Fn @ x + sys.Gn @ u + _as_sequence(dd, k)
        xm = sys.Fm @ xm + sys.Gm @ r_k
    c = {k: np.array(v) for k, v in cols.items()}
    e = c["x"] - c["xm"]
    ld = np.full_like(e, np.nan)
    ld[:-1] = e[1:] - e[:-1] @ sys.Fn.T - c["u"][:-1] @ sys.Gn.T
    return SimTrace(
        controller="dt-ude",
        Ts=sys.Ts,
        t=c["t"],
        x=c["x"],
        xm=c["xm"],
        xhat=c["xhat"],
        y=c["x"] @ sys.C.T,
        yhat=c["xhat"] @ sys.C.T,
        u=c["u"],
        u_peak=np.abs(c["u"]),
        u_d=c["u_d"],
        dhat=c["dhat"],
        Ld=ld,
        Ldhat=c["ldhat"],
        d_true=np.full((len(c["t"]), 2), np.nan),
        form_gap=c["gap"],
    )
