"""Command-line front end.

Subcommands: ``project``, ``ic``, ``risk-curves``, ``test-design``, ``simulate``.
A short summary goes to standard output; the machine-readable record
(JSON or CSV) goes to ``--output`` or, if absent, follows the summary.
Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

import argparse
import io
import json
import math
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from . import influence, montecarlo, risk, testing
from .errors import NumericalError, ValidationError
from .model import (exponential_scale_model, load_discrete_model, normal_location_model,
                    product_normal_model)
from .projection import BallKind, NeighborhoodBall, project_ball

BUILTIN_MODELS = ("normal-location", "exponential-scale", "product-normal-K")


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: str
    ball: str = "v"
    radius: float = 0.1
    r0: float = 0.0
    r1: float = 0.0
    beta: float = 1.0
    tau: float = 1.0
    alpha: float = 0.05
    n: int = montecarlo.DEFAULT_N
    reps: int = montecarlo.DEFAULT_REPS
    seed: int = 0
    output: str = None

    def validate(self):
        for name in ("radius", "r0", "r1", "beta", "tau"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"--{name} must be a finite number >= 0 (got {v})")
        if not 0 < self.alpha < 1:
            raise ValidationError(f"--alpha must lie strictly between 0 and 1 (got {self.alpha})")
        if self.n < 1 or self.reps < 2:
            raise ValidationError("--n must be >= 1 and --reps >= 2")
        BallKind.parse(self.ball)
        return self


def load_model(spec):
    """Builtin model by name or discrete model from a CSV path."""
    if spec == "normal-location":
        return normal_location_model()
    if spec == "exponential-scale":
        return exponential_scale_model()
    m = re.fullmatch(r"product-normal-(\d+)", spec)
    if m:
        return product_normal_model(int(m.group(1)))
    if os.path.exists(spec):
        return load_discrete_model(spec)
    raise ValidationError(f"unknown model {spec!r}; use one of {', '.join(BUILTIN_MODELS)} or a CSV path")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, BallKind):
        return o.value
    raise TypeError(type(o))


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _emit(cfg, text):
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(cfg, record):
    _emit(cfg, json.dumps(record, indent=2, sort_keys=True, default=_json_default) + "\n")


def cmd_project(cfg):
    model = load_model(cfg.model)
    ball = NeighborhoodBall(cfg.ball, cfg.radius)
    res = project_ball(model, ball)
    for j, c in enumerate(res.coords):
        if c.degenerate:
            if ball.kind is BallKind.HELLINGER:
                raise ValidationError(
                    f"Hellinger radius condition violated for coordinate {j + 1}: 8r^2 >= I_jj, residual vanishes")
            raise ValidationError(f"coordinate {j + 1}: {c.reason}")
    coords = []
    for c in res.coords:
        d = {"type": type(c).__name__}
        for key in ("gamma", "lower", "upper", "shift"):
            if hasattr(c, key):
                d[key] = _num(getattr(c, key))
        coords.append(d)
    print(f"projection onto {ball.kind.name.lower()} ball, r={ball.radius:g}, model {model.name}")
    for j, d in enumerate(coords):
        print(f"  coordinate {j + 1}: " + ", ".join(f"{k}={v}" for k, v in d.items()))
    _emit_json(cfg, {"model": model.name, "ball": ball.kind.value, "radius": ball.radius,
                     "coordinates": coords, "diagnostics": res.diagnostics})


def cmd_ic(cfg, kind):
    model = load_model(cfg.model)
    if kind == "canonical":
        ic = influence.canonical_ic(model)
    elif kind == "semiparametric":
        ic = influence.semiparametric_ic(model, (cfg.ball, cfg.radius))
    elif kind == "robust-tv":
        ic = influence.robust_ic_tv(model, cfg.beta, cfg.radius)
    elif kind == "hampel":
        ic = influence.robust_ic_hampel(model, cfg.beta, cfg.radius)
    else:
        raise ValidationError(f"unknown IC kind {kind!r}")
    mean_dev, cons_dev = influence.check_ic(ic, model)
    rep = risk.mse(ic, model, cfg.ball, cfg.beta, cfg.radius)
    print(f"{kind} IC ({ic.form}) for {model.name}: |E psi|={mean_dev:.2e}, "
          f"|E psi Lambda' - I|={cons_dev:.2e}, MSE_{rep.kind.value}={rep.mse:.10g}")
    rec = ic.to_record()
    rec["risk"] = {"ball": rep.kind.value, "beta": rep.beta, "r": rep.r,
                   "variance": _num(rep.variance), "bias": _num(rep.bias), "mse": _num(rep.mse)}
    _emit_json(cfg, rec)


def cmd_risk_curves(cfg, grid_text):
    model = load_model(cfg.model)
    grid = risk.parse_grid(grid_text) if grid_text else risk.default_grid(model)
    pts = risk.risk_curves(model, grid)
    best = min(pts, key=lambda p: p.beta)
    print(f"{len(pts)} radii; beta minimal ({best.beta:.6g}) at r={best.r:.6g}; "
          f"relMSE at r={pts[-1].r:g}: {pts[-1].relMSE:.6g}")
    buf = io.StringIO()
    risk.write_curves_csv(pts, buf)
    _emit(cfg, buf.getvalue())


def _spec(cfg):
    return testing.HypothesisSpec(cfg.ball, cfg.r0, cfg.r1, cfg.tau, cfg.alpha)


def cmd_test_design(cfg):
    model = load_model(cfg.model)
    design = testing.maxmin_test(model, _spec(cfg))
    print(f"maxmin test ({design.spec.kind.name.lower()}): threshold={design.threshold:.10g}, "
          f"power={design.power:.10g}")
    _emit_json(cfg, design.to_record())


def cmd_simulate(cfg):
    model = load_model(cfg.model)
    design = testing.maxmin_test(model, _spec(cfg))
    size, power = montecarlo.empirical_test(design, model, n=cfg.n, reps=cfg.reps, seed=cfg.seed)
    print(f"n={cfg.n}, reps={cfg.reps}, seed={cfg.seed}: size {size.estimate:.4f} "
          f"(target {size.target:.4f}), power {power.estimate:.4f} (target {power.target:.4f})")
    buf = io.StringIO()
    montecarlo.write_results_csv([size, power], buf)
    _emit(cfg, buf.getvalue())


def build_parser():
    p = argparse.ArgumentParser(prog="robsemi", description="Robust semiparametric influence curves and tests.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--model", default="normal-location",
                        help="builtin model name or CSV with header point,prob,score_1..score_k")
        sp.add_argument("--output", "-o", help="write the machine-readable record here")

    sp = sub.add_parser("project", help="project the scores onto a tangent ball")
    common(sp)
    sp.add_argument("--ball", default="v", help="h, v or c")
    sp.add_argument("--radius", type=float, default=0.1)

    sp = sub.add_parser("ic", help="construct an influence curve")
    common(sp)
    sp.add_argument("--kind", default="semiparametric",
                    choices=("canonical", "semiparametric", "robust-tv", "hampel"))
    sp.add_argument("--ball", default="v")
    sp.add_argument("--radius", type=float, default=0.1)
    sp.add_argument("--beta", type=float, default=1.0)

    sp = sub.add_parser("risk-curves", help="beta(r), R(r) and relMSE(r) as CSV")
    common(sp)
    sp.add_argument("--grid", help="a:b:N linear grid (default: 200 log-spaced radii)")

    for name, helptext in (("test-design", "maxmin asymptotic test"),
                           ("simulate", "Monte Carlo size and power of a maxmin test")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--ball", default="v")
        sp.add_argument("--r0", type=float, default=0.1)
        sp.add_argument("--r1", type=float, default=0.05)
        sp.add_argument("--tau", type=float, default=1.0)
        sp.add_argument("--alpha", type=float, default=0.05)
        if name == "simulate":
            sp.add_argument("--n", type=int, default=montecarlo.DEFAULT_N)
            sp.add_argument("--reps", type=int, default=montecarlo.DEFAULT_REPS)
            sp.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    try:
        cfg = RunConfig(**fields).validate()
        if args.command == "project":
            cmd_project(cfg)
        elif args.command == "ic":
            cmd_ic(cfg, args.kind)
        elif args.command == "risk-curves":
            cmd_risk_curves(cfg, args.grid)
        elif args.command == "test-design":
            cmd_test_design(cfg)
        else:
            cmd_simulate(cfg)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
