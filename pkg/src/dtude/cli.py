"""Command-line front end: ``dtude simulate|compare|stability|design-gains``.

Configuration is a flat ``key=value`` text file (``#`` starts a comment);
``--set key=value`` overrides single entries. Every key defaults to the
two-link benchmark setup, so an empty file is a valid configuration.
"""

import argparse
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import matlib, simkern, stability
from .errors import ConfigError, DivergenceError, DtudeError, StabilityError
from .manipulator import ACTUAL, JOINT_BLOCKS, UNCERTAIN, ManipulatorParams, nominal_mu
from .svgplot import line_chart

EXIT_OK, EXIT_CONFIG, EXIT_STABILITY, EXIT_DIVERGED = 0, 2, 3, 4


def _float(v):
    return float(v)


def _int(v):
    return int(v)


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _vec4(v):
    parts = [float(p) for p in v.replace(" ", "").split(",") if p]
    if len(parts) != 4:
        raise ValueError(f"expected 4 comma-separated numbers, got {len(parts)}")
    return tuple(parts)


def _controller(v):
    v = v.strip()
    if v not in simkern.CONTROLLERS:
        raise ValueError(f"unknown controller {v!r}; valid names: {', '.join(simkern.CONTROLLERS)}")
    return v


def _controllers(v):
    return tuple(_controller(c) for c in v.split(",") if c.strip())


def _choice(*allowed):
    def parse(v):
        v = v.strip()
        if v not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}, got {v!r}")
        return v

    return parse


# key -> (parser, default)
KEYS = {
    "plant.m1": (_float, ACTUAL.m1),
    "plant.m2": (_float, ACTUAL.m2),
    "plant.l1": (_float, ACTUAL.l1),
    "plant.l2": (_float, ACTUAL.l2),
    "plant.g": (_float, ACTUAL.g),
    "uncertain.m1": (_float, UNCERTAIN.m1),
    "uncertain.m2": (_float, UNCERTAIN.m2),
    "uncertain.l1": (_float, UNCERTAIN.l1),
    "uncertain.l2": (_float, UNCERTAIN.l2),
    "ude.tau": (_float, 0.01),
    "ude.nominal": (_choice("actual", "uncertain"), "actual"),
    "ude.allow_unstable_tau": (_bool, False),
    "observer.scale": (_float, 0.1),
    "sim.Ts": (_float, 0.01),
    "sim.substeps": (_int, 10),
    "sim.duration": (_float, 20.0),
    "sim.reference": (_choice("hold", "continuous"), "hold"),
    "sim.disturbance": (_bool, True),
    "sim.divergence_limit": (_float, 1e6),
    "ic.x0": (_vec4, (0.0, 0.0, 0.0, 0.0)),
    "ic.xm0": (_vec4, (0.0, 0.0, 0.0, 0.0)),
    "ic.xhat0": (_vec4, (0.0, 0.0, 0.0, 0.0)),
    "controller": (_controller, "dt-ude"),
    "compare.controllers": (_controllers, simkern.CONTROLLERS),
    "smc.d1": (_float, 15.0),
    "smc.d2": (_float, 10.0),
    "smc.epsilon": (_float, 0.1),
    "smc.kd": (_float, 7.0),
    "pd.kp": (_float, 1.0),
    "pd.kd": (_float, 0.1),
    "seed": (_int, 0),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in KEYS.items()})
    out_dir: str = "."
    svg: bool = False

    def __getitem__(self, key):
        return self.values[key]

    def scenario(self, controller=None):
        v = self.values
        return simkern.Scenario(
            params_actual=ManipulatorParams(v["plant.m1"], v["plant.m2"], v["plant.l1"], v["plant.l2"], v["plant.g"]),
            params_uncertain=ManipulatorParams(
                v["uncertain.m1"], v["uncertain.m2"], v["uncertain.l1"], v["uncertain.l2"], v["plant.g"]
            ),
            nominal=v["ude.nominal"],
            d_ext=simkern.external_disturbance if v["sim.disturbance"] else None,
            Ts=v["sim.Ts"],
            substeps=v["sim.substeps"],
            duration=v["sim.duration"],
            x0=np.array(v["ic.x0"]),
            xm0=np.array(v["ic.xm0"]),
            xhat0=np.array(v["ic.xhat0"]),
            controller=controller or v["controller"],
            tau=v["ude.tau"],
            allow_unstable_tau=v["ude.allow_unstable_tau"],
            observer_scale=v["observer.scale"],
            reference_hold=v["sim.reference"] == "hold",
            smc_bounds=(v["smc.d1"], v["smc.d2"]),
            smc_epsilon=v["smc.epsilon"],
            smc_kd=v["smc.kd"],
            pd_kp=v["pd.kp"],
            pd_kd=v["pd.kd"],
            divergence_limit=v["sim.divergence_limit"],
        )


def _assign(values, key, raw, line):
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}", key=key, line=line)
    parser, _ = KEYS[key]
    try:
        values[key] = parser(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}", key=key, line=line) from exc


def _split(text, line):
    if "=" not in text:
        raise ConfigError(f"expected key=value, got {text!r}", line=line)
    key, raw = text.split("=", 1)
    return key.strip(), raw.strip()


def parse_config(path=None, overrides=()):
    """Build a :class:`RunConfig` from an optional file plus ``key=value`` overrides."""
    cfg = RunConfig()
    if path is not None:
        try:
            with open(path) as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
        for i, text in enumerate(lines, start=1):
            text = text.split("#", 1)[0].strip()
            if text:
                _assign(cfg.values, *_split(text, i), i)
    for text in overrides:
        key, raw = _split(text, None)
        _assign(cfg.values, key, raw, None)
    return cfg


def _write_metrics_txt(path, rows):
    keys = list(next(iter(rows.values())).keys()) if rows else []
    with open(path, "w") as fh:
        fh.write(f"{'controller':<12s}" + "".join(f"{k:>16s}" for k in keys) + "\n")
        for name, m in rows.items():
            fh.write(f"{name:<12s}" + "".join(f"{m[k]:>16.6g}" for k in keys) + "\n")


def _write_metrics_csv(path, rows):
    keys = list(next(iter(rows.values())).keys()) if rows else []
    with open(path, "w") as fh:
        fh.write(",".join(["controller"] + keys) + "\n")
        for name, m in rows.items():
            fh.write(",".join([name] + [repr(float(m[k])) for k in keys]) + "\n")


def write_figures(trace, out_dir, prefix=""):
    """One SVG per panel: positions, velocities, torques and disturbance estimates."""
    t = trace.t
    panels = {
        "theta1": ({"theta1": trace.x[:, 0], "theta1 ref": trace.xm[:, 0], "theta1 est": trace.xhat[:, 0]}, "rad"),
        "theta2": ({"theta2": trace.x[:, 2], "theta2 ref": trace.xm[:, 2], "theta2 est": trace.xhat[:, 2]}, "rad"),
        "dtheta1": ({"dtheta1": trace.x[:, 1], "ref": trace.xm[:, 1], "est": trace.xhat[:, 1]}, "rad/s"),
        "dtheta2": ({"dtheta2": trace.x[:, 3], "ref": trace.xm[:, 3], "est": trace.xhat[:, 3]}, "rad/s"),
        "tau1": ({"tau1": trace.u[:, 0]}, "N m"),
        "tau2": ({"tau2": trace.u[:, 1]}, "N m"),
        "Ld2": ({"Ld2": trace.Ld[:, 1], "estimate": trace.Ldhat[:, 1]}, "lumped disturbance"),
        "Ld4": ({"Ld4": trace.Ld[:, 3], "estimate": trace.Ldhat[:, 3]}, "lumped disturbance"),
    }
    paths = []
    for name, (series, ylabel) in panels.items():
        p = os.path.join(out_dir, f"{prefix}{name}.svg")
        line_chart(p, t, series, title=f"{trace.controller}: {name}", ylabel=ylabel)
        paths.append(p)
    return paths


def cmd_simulate(cfg, out=sys.stdout):
    sc = cfg.scenario()
    try:
        trace = simkern.run_closed_loop(sc)
    except DivergenceError as exc:
        if exc.trace is not None:
            exc.trace.to_csv(os.path.join(cfg.out_dir, "trace.csv"))
        print(f"DIVERGED: {exc}", file=out)
        return EXIT_DIVERGED
    trace.to_csv(os.path.join(cfg.out_dir, "trace.csv"))
    m = simkern.compute_metrics(trace).as_dict()
    _write_metrics_txt(os.path.join(cfg.out_dir, "metrics.txt"), {sc.controller: m})
    if cfg.svg:
        write_figures(trace, cfg.out_dir)
    print(f"{sc.controller}: {len(trace)} samples written to {cfg.out_dir}", file=out)
    return EXIT_OK


def cmd_compare(cfg, controllers=None, out=sys.stdout):
    controllers = tuple(controllers) if controllers else cfg["compare.controllers"]
    rows, status = {}, EXIT_OK
    for name in controllers:
        try:
            trace = simkern.run_closed_loop(cfg.scenario(name))
        except DivergenceError as exc:
            print(f"{name}: DIVERGED ({exc})", file=out)
            rows[name] = None
            status = EXIT_DIVERGED
            continue
        trace.to_csv(os.path.join(cfg.out_dir, f"trace_{name}.csv"))
        rows[name] = simkern.compute_metrics(trace).as_dict()
        if cfg.svg:
            write_figures(trace, cfg.out_dir, prefix=f"{name}_")
    keys = next((list(r) for r in rows.values() if r is not None), None)
    if keys is not None:
        rows = {n: (r if r is not None else dict.fromkeys(keys, float("nan"))) for n, r in rows.items()}
        _write_metrics_txt(os.path.join(cfg.out_dir, "metrics.txt"), rows)
        _write_metrics_csv(os.path.join(cfg.out_dir, "metrics.csv"), rows)
        with open(os.path.join(cfg.out_dir, "metrics.txt")) as fh:
            out.write(fh.read())
    return status


def stability_report(cfg, eta_norm=None):
    """Text report of the closed-loop conditions and the convergence ball."""
    sc = cfg.scenario("dt-ude")
    ucfg, ocfg = simkern.design_dt_ude(sc)
    ed = stability.assemble(ucfg.sys, ucfg.Kd, ocfg.beta, sc.tau)
    report = stability.check_conditions(ed, sc.Ts, sc.tau)
    lines = [report.format()]
    coupling, th2 = stability.estimator_coupling_radius(
        sc.params_actual, nominal_mu(sc.nominal_params), sc.Ts, sc.tau
    )
    lines.append(f"estimator input-coupling radius {coupling:.6f} (worst theta2 = {th2:.3f} rad)"
                 + ("" if coupling < 1 else "  WARNING: disturbance estimate loop is unstable"))
    if not report.all_pass:
        return "\n".join(lines), report, None
    if eta_norm is None:
        try:
            trace = simkern.run_closed_loop(sc)
            xi = stability.error_state(trace)
            ld = trace.Ld[np.all(np.isfinite(trace.Ld), axis=1)]
            eta_norm = float(np.max(np.linalg.norm(np.diff(ld, axis=0), axis=1)))
            lines.append(f"eta_norm (max |Delta L_d| over run)  {eta_norm:.6g}")
        except DivergenceError as exc:
            lines.append(f"simulation diverged ({exc}); eta_norm unavailable")
            eta_norm = None
            xi = None
    else:
        xi = None
    cert = None
    if eta_norm is not None:
        cert = stability.convergence_radius(ed, eta_norm)
        lines += [
            f"Lyapunov residual ||A'PA - P + I||_F  {cert.residual:.3e}",
            f"p_max                               {cert.p_max:.6g}",
            f"||A|| (spectral norm)               {cert.norm_A:.6g}",
            f"R                                   {cert.R:.6g}",
        ]
        if xi is not None:
            bad, outside = stability.lyapunov_violations(cert.P, xi, cert.R)
            lines.append(f"samples outside R: {outside}, with V non-decreasing: {bad}")
    return "\n".join(lines), report, cert


def cmd_stability(cfg, eta_norm=None, out=sys.stdout):
    text, report, _ = stability_report(cfg, eta_norm)
    with open(os.path.join(cfg.out_dir, "stability.txt"), "w") as fh:
        fh.write(text + "\n")
    print(text, file=out)
    return EXIT_OK if report.all_pass else EXIT_STABILITY


def cmd_design_gains(cfg, out=sys.stdout):
    sc = cfg.scenario("dt-ude")
    sys_ = sc.system()
    ucfg, ocfg = simkern.design_dt_ude(sc, sys_)
    tk = matlib.block_eigenvalues(sys_.Fm, JOINT_BLOCKS)
    np.set_printoptions(precision=6, suppress=True)
    print(f"Ts = {sc.Ts}, nominal model = {sc.nominal}", file=out)
    print(f"controller targets (eig Fm per joint): {[np.round(t.real, 6).tolist() for t in tk]}", file=out)
    print(f"Kd =\n{ucfg.Kd}", file=out)
    print(f"eig(Fn - Gn Kd) = {np.sort(matlib.eigenvalues(ucfg.Fc).real)}", file=out)
    print(f"observer targets: {[np.round(sc.observer_scale * t.real, 6).tolist() for t in tk]}", file=out)
    print(f"beta =\n{ocfg.beta}", file=out)
    print(f"eig(Fn - beta C) = {np.sort(matlib.eigenvalues(ocfg.Fo).real)}", file=out)
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key=value configuration file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], help="override one key")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument("--svg", action="store_true", help="also write SVG line charts")

    p = argparse.ArgumentParser(prog="dtude", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one controller and write trace.csv")
    cmp_ = sub.add_parser("compare", parents=[common], help="run several controllers on one scenario")
    cmp_.add_argument("controllers", nargs="*", help=f"subset of {', '.join(simkern.CONTROLLERS)}")
    st = sub.add_parser("stability", parents=[common], help="closed-loop conditions and convergence radius")
    st.add_argument("--eta", type=float, default=None, help="bound on the disturbance increment (skips the run)")
    sub.add_parser("design-gains", parents=[common], help="print controller and observer gains")
    return p


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, args.set)
        for c in getattr(args, "controllers", None) or ():
            _controller(c)
        cfg = replace(cfg, out_dir=args.out, svg=args.svg)
        os.makedirs(cfg.out_dir, exist_ok=True)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "compare":
            return cmd_compare(cfg, args.controllers, out)
        if args.command == "stability":
            return cmd_stability(cfg, args.eta, out)
        return cmd_design_gains(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StabilityError as exc:
        print(f"stability precondition failed: {exc}", file=sys.stderr)
        return EXIT_STABILITY
    except DivergenceError as exc:
        print(f"DIVERGED: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValueError, DtudeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
