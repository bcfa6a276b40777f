"""Batch experiment runner and command-line entry points.

Subcommands: curves, distributions, tune, validate, synth, serve.  Output is
CSV (curves, distributions, synth) or JSON (tune, validate).  Every CSV
carries a metadata comment line with the config hash and seed, and identical
(config, seed) pairs produce byte-identical output.

Exit codes: 0 success, 2 configuration error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field, asdict

import numpy as np

from . import boundaries as bnd
from . import erm, threshold, validate
from ._rng import stream
from .errors import ConfigurationError, GradualReleaseError
from .mechanisms import SensitivityBudget, open_session, step

# Per-point loss caps that make the RAT utility cap/n-sensitive regardless
# of the iterate; clipping only lowers the mean loss, so clipped checks can
# stop no later than public ones.
LOSS_CAP = {"logistic": 1.0, "ridge": 0.5}
ABOVE_THRESHOLD_EPS = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "logistic"  # "logistic" | "ridge"
    source: str = "synthetic"  # "synthetic" | path to CSV
    n: int = 2000
    d: int = 10
    mechanisms: tuple[str, ...] = ("brownian", "laplace")
    eps_min: float = 0.05
    eps_max: float = 2.0
    eps_factor: float = 1.25
    tune_target: float = 0.3
    boundary_kind: str = "mixture"
    delta: float = 1e-6
    reg_lambda: float = erm.DEFAULT_REG_LAMBDA
    stop_threshold: float | None = None  # defaults to 0.41 / 0.025 per task
    checker: str = "public"  # "public" | "above_threshold" | "reduced_above_threshold"
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.task not in ("logistic", "ridge"):
            raise ConfigurationError(f"task must be logistic or ridge, got {self.task!r}")
        for m in self.mechanisms:
            if m not in ("brownian", "laplace"):
                raise ConfigurationError(f"unknown mechanism {m!r} in mechanisms")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if not (0 < self.eps_min <= self.eps_max and self.eps_factor > 1):
            raise ConfigurationError(
                "schedule requires 0 < eps_min <= eps_max and eps_factor > 1"
            )
        if self.checker not in ("public", "above_threshold", "reduced_above_threshold"):
            raise ConfigurationError(f"unknown checker {self.checker!r}")

    @property
    def threshold_value(self) -> float:
        if self.stop_threshold is not None:
            return self.stop_threshold
        return 0.41 if self.task == "logistic" else 0.025

    def schedule(self) -> list[float]:
        eps, out = self.eps_min, []
        while eps < self.eps_max * (1 - 1e-12):
            out.append(eps)
            eps *= self.eps_factor
        out.append(self.eps_max)
        return out

    def hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        if "mechanisms" in raw:
            raw = {**raw, "mechanisms": tuple(raw["mechanisms"])}
        return cls(**raw)


@dataclass
class TaskContext:
    """Dataset plus everything needed to release and score iterates."""

    config: ExperimentConfig
    dataset: erm.Dataset
    center: np.ndarray
    budget: SensitivityBudget
    boundary: bnd.PrivacyBoundary
    nonprivate_loss: float = field(init=False)

    def __post_init__(self):
        self.nonprivate_loss = self.loss(self.center)

    def loss(self, release: np.ndarray) -> float:
        cfg = self.config
        if cfg.task == "logistic":
            return erm.logistic_loss(release, self.dataset, cfg.reg_lambda)
        beta = erm.ridge_solve(release, self.dataset.n, cfg.reg_lambda)
        return erm.ridge_loss(beta, self.dataset, cfg.reg_lambda)

    def clipped_utility(self, release: np.ndarray) -> float:
        """Negated clipped regularized loss; sensitivity is utility_delta."""
        cfg = self.config
        cap = LOSS_CAP[cfg.task]
        if cfg.task == "logistic":
            beta = release
            per_point = np.logaddexp(0.0, -self.dataset.y * (self.dataset.X @ beta))
        else:
            beta = erm.ridge_solve(release, self.dataset.n, cfg.reg_lambda)
            per_point = (self.dataset.X @ beta - self.dataset.y) ** 2 / 2.0
        clipped = float(np.mean(np.minimum(per_point, cap)))
        return -(clipped + cfg.reg_lambda * float(beta @ beta) / 2.0)

    @property
    def utility_delta(self) -> float:
        return LOSS_CAP[self.config.task] / self.dataset.n


def build_task(config: ExperimentConfig) -> TaskContext:
    if config.source == "synthetic":
        dataset = erm.synth_generate(config.task, config.n, config.d, config.seed)
    else:
        task_kind = "binary" if config.task == "logistic" else "real"
        dataset = erm.normalize(erm.load_csv(config.source, task=task_kind))
        if config.n < dataset.n:
            dataset = erm.subsample(dataset, config.n, config.seed)
    spec = erm.TaskSpec(
        loss="logistic" if config.task == "logistic" else "squared",
        reg_lambda=config.reg_lambda,
        n=dataset.n,
        d=dataset.d,
    )
    if config.task == "logistic":
        center = erm.logistic_fit(dataset, config.reg_lambda)
    else:
        center = erm.ridge_suffstats(dataset)
    budget = SensitivityBudget(l2=spec.l2_sensitivity, l1=spec.l1_sensitivity)
    boundary = bnd.tune_boundary(
        config.boundary_kind, spec.l2_sensitivity, config.delta, config.tune_target
    )
    return TaskContext(config=config, dataset=dataset, center=center, budget=budget, boundary=boundary)


def _open_mechanism(ctx: TaskContext, mechanism: str, rng: np.random.Generator):
    if mechanism == "brownian":
        return open_session(
            "brownian", ctx.center, ctx.budget, rng, boundary=ctx.boundary
        )
    eta = ctx.budget.l1 / (2 * ctx.config.eps_max)  # headroom below the schedule floor
    return open_session("laplace", ctx.center, ctx.budget, rng, eta=eta)


def run_curves(config: ExperimentConfig) -> list[dict]:
    """Mean loss (with 95% CI) per (mechanism, schedule epsilon)."""
    ctx = build_task(config)
    schedule = config.schedule()
    rows = []
    for mechanism in config.mechanisms:
        losses = np.empty((config.trials, len(schedule)))
        for trial in range(config.trials):
            rng = stream(config.seed, trial, _mech_id(mechanism))
            session = _open_mechanism(ctx, mechanism, rng)
            for j, eps in enumerate(schedule):
                iterate, _ = step(session, target_eps=eps)
                losses[trial, j] = ctx.loss(iterate)
        mean = losses.mean(axis=0)
        sd = losses.std(axis=0, ddof=1) if config.trials > 1 else np.zeros(len(schedule))
        half = 1.96 * sd / math.sqrt(config.trials)
        for j, eps in enumerate(schedule):
            rows.append(
                {
                    "mechanism": mechanism,
                    "eps": eps,
                    "mean_loss": mean[j],
                    "ci_low": mean[j] - half[j],
                    "ci_high": mean[j] + half[j],
                    "trials": config.trials,
                }
            )
    return rows


def run_distribution_trial(
    ctx: TaskContext, mechanism: str, checker: str, trial: int
) -> dict:
    """One stopped run: walk the schedule until the checker fires."""
    config = ctx.config
    schedule = config.schedule()
    rng = stream(config.seed, trial, _mech_id(mechanism), _checker_id(checker))
    session = _open_mechanism(ctx, mechanism, rng)
    rat = None
    if checker == "above_threshold":
        rat = threshold.rat_open(
            ABOVE_THRESHOLD_EPS, -config.threshold_value, ctx.utility_delta, rng
        )
    elif checker == "reduced_above_threshold":
        rat = threshold.rat_open(
            config.eps_max, -config.threshold_value, ctx.utility_delta, rng
        )
    for round_idx, eps in enumerate(schedule, start=1):
        iterate, receipt = step(session, target_eps=eps)
        if checker == "public":
            stopped = ctx.loss(iterate) <= config.threshold_value
            total = receipt.expost_eps
        else:
            utility = ctx.clipped_utility(iterate)
            rat_eps = ABOVE_THRESHOLD_EPS if checker == "above_threshold" else eps
            stopped = threshold.rat_step(rat, utility, rat_eps) == 1
            total = receipt.expost_eps + rat_eps if stopped else None
        if stopped:
            return {
                "mechanism": mechanism,
                "checker": checker,
                "trial": trial,
                "stopped": 1,
                "stopped_round": round_idx,
                "stopped_eps": total,
            }
    return {
        "mechanism": mechanism,
        "checker": checker,
        "trial": trial,
        "stopped": 0,
        "stopped_round": len(schedule),
        "stopped_eps": float("nan"),
    }


def run_distributions(config: ExperimentConfig) -> list[dict]:
    ctx = build_task(config)
    rows = []
    for mechanism in config.mechanisms:
        for trial in range(config.trials):
            rows.append(run_distribution_trial(ctx, mechanism, config.checker, trial))
    return rows


def _mech_id(mechanism: str) -> int:
    return {"brownian": 1, "laplace": 2, "skellam": 3}[mechanism]


def _checker_id(checker: str) -> int:
    return {"public": 1, "above_threshold": 2, "reduced_above_threshold": 3}[checker]


def default_validation_suite(seed: int = 0) -> list[dict]:
    """A fast, seeded battery of the toolkit's statistical checks."""
    report = []

    for kind in ("linear", "mixture"):
        boundary = bnd.tune_boundary(kind, 1.0, 0.05, 0.5)
        grid = np.logspace(1.5, -1.5, 30)
        est = validate.mc_boundary_crossing(boundary, 1.0, grid, trials=5000, seed=seed)
        bound = 0.05 + 3 * est.se
        report.append(
            {
                "check": f"boundary_crossing_{kind}",
                "params": {"delta": 0.05, "grid": 30, "trials": est.trials},
                "estimate": est.estimate,
                "se": est.se,
                "bound": bound,
                "pass": est.estimate <= bound,
            }
        )
        t0 = 25.0
        closed = validate.single_time_crossing_prob(boundary, 1.0, t0)
        single = validate.mc_boundary_crossing(
            boundary, 1.0, np.array([t0]), trials=20000, seed=seed + 1
        )
        tol = 3 * max(single.se, 1e-4)
        report.append(
            {
                "check": f"single_time_tail_{kind}",
                "params": {"t": t0, "trials": single.trials},
                "estimate": single.estimate,
                "se": single.se,
                "bound": closed,
                "pass": abs(single.estimate - closed) <= tol,
            }
        )

    from .stochastic import LaplacePath

    rng = stream(seed, 99)
    samples = np.array(
        [LaplacePath(1, 0.1, 1.0, rng).value(1.0)[0] for _ in range(20000)]
    )
    _, p = validate.ks_test(samples, lambda x: _laplace_cdf(x, 1.0))
    report.append(
        {
            "check": "laplace_marginal_ks",
            "params": {"eta": 0.1, "t": 1.0, "samples": len(samples)},
            "estimate": p,
            "se": 0.0,
            "bound": 1e-3,
            "pass": p > 1e-3,
        }
    )

    est = validate.line_crossing_check(1.0, 1.0, horizon=20.0, grid_step=1e-2, trials=4000, seed=seed)
    target = math.exp(-2.0)
    report.append(
        {
            "check": "line_crossing",
            "params": {"a": 1.0, "b": 1.0, "horizon": 20.0, "step": 1e-2, "trials": est.trials},
            "estimate": est.estimate,
            "se": est.se,
            "bound": target,
            "pass": target - 3 * est.se - 0.02 <= est.estimate <= target,
        }
    )
    return report


def _laplace_cdf(x, scale):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.5 * np.exp(x / scale), 1 - 0.5 * np.exp(-x / scale))


def _write_csv(path, rows: list[dict], config_hash: str, seed: int) -> None:
    fieldnames = list(rows[0].keys())
    lines = [f"# config_hash={config_hash} seed={seed}", ",".join(fieldnames)]
    for row in sorted(rows, key=lambda r: tuple(str(r[k]) for k in fieldnames)):
        lines.append(",".join(_fmt(row[k]) for k in fieldnames))
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradual-release",
        description="Noise-reduction mechanisms with ex-post privacy accounting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", help="JSON file with ExperimentConfig fields")
        p.add_argument("--task", choices=["logistic", "ridge"])
        p.add_argument("--source")
        p.add_argument("--n", type=int)
        p.add_argument("--d", type=int)
        p.add_argument("--mechanisms", nargs="+")
        p.add_argument("--eps-min", dest="eps_min", type=float)
        p.add_argument("--eps-max", dest="eps_max", type=float)
        p.add_argument("--eps-factor", dest="eps_factor", type=float)
        p.add_argument("--tune-target", dest="tune_target", type=float)
        p.add_argument("--boundary-kind", dest="boundary_kind", choices=["linear", "mixture"])
        p.add_argument("--delta", type=float)
        p.add_argument("--reg-lambda", dest="reg_lambda", type=float)
        p.add_argument("--stop-threshold", dest="stop_threshold", type=float)
        p.add_argument("--checker", choices=["public", "above_threshold", "reduced_above_threshold"])
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default="-")

    for name in ("curves", "distributions"):
        add_config_flags(sub.add_parser(name))

    tune = sub.add_parser("tune")
    tune.add_argument("--kind", choices=["linear", "mixture"], default="linear")
    tune.add_argument("--sensitivity", type=float, default=1.0)
    tune.add_argument("--delta", type=float, default=1e-6)
    tune.add_argument("--target-eps", dest="target_eps", type=float, default=0.3)

    val = sub.add_parser("validate")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--out", default="-")

    synth = sub.add_parser("synth")
    synth.add_argument("--task", choices=["logistic", "ridge"], default="logistic")
    synth.add_argument("--n", type=int, default=2000)
    synth.add_argument("--d", type=int, default=10)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", default="-")

    serve = sub.add_parser("serve")
    serve.add_argument("--port", type=int, default=8787)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--static-dir", dest="static_dir", default=None)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    raw: dict = {}
    if args.config:
        with open(args.config) as fh:
            raw.update(json.load(fh))
    for key in ExperimentConfig.__dataclass_fields__:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    return ExperimentConfig.from_dict(raw)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigurationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GradualReleaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "curves":
        config = _config_from_args(args)
        _write_csv(args.out, run_curves(config), config.hash(), config.seed)
        return 0
    if args.command == "distributions":
        config = _config_from_args(args)
        _write_csv(args.out, run_distributions(config), config.hash(), config.seed)
        return 0
    if args.command == "tune":
        boundary = bnd.tune_boundary(args.kind, args.sensitivity, args.delta, args.target_eps)
        out = boundary.to_dict()
        out["target_eps"] = args.target_eps
        out["required_time"] = bnd.invert_boundary(boundary, args.target_eps)
        print(json.dumps(out, indent=2, sort_keys=True))
        return 0
    if args.command == "validate":
        report = default_validation_suite(args.seed)
        text = json.dumps(report, indent=2)
        if args.out == "-":
            print(text)
        else:
            with open(args.out, "w") as fh:
                fh.write(text)
        return 0 if all(entry["pass"] for entry in report) else 3
    if args.command == "synth":
        dataset = erm.synth_generate(args.task, args.n, args.d, args.seed)
        csv_text = erm.dataset_to_csv(dataset)
        if args.out == "-":
            sys.stdout.write(csv_text)
        else:
            with open(args.out, "w") as fh:
                fh.write(csv_text)
        return 0
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        app = create_app(static_dir=args.static_dir)
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return 0
    raise ConfigurationError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
