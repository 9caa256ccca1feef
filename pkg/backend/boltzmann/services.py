import itertools
import logging
import uuid
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from django.conf import settings
from django.db import DatabaseError
from django.utils import timezone
from tqdm import tqdm

from .spectral import codec, dynamics, validation
from .spectral.config import RunConfig
from .spectral.dataset import Corpus, generate_corpus
from .spectral.exceptions import ConfigError, NumericalError, SpectralError
from .spectral.grid import VelocityGrid, analyze, configure_fft
from .spectral.kernel import build_separable_quadrature, kernel_document
from .spectral.specnet import (
    SpecNetParams,
    checkpoint_document,
    load_checkpoint,
    train,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3


# ==============================
# COLLISION OPERATOR PROVIDERS
# ==============================


class CollisionOperatorBase(ABC):
    """Builds a collision operator for a grid from a resolved run configuration"""

    name = "base"

    def __init__(self, config: Optional[RunConfig] = None, checkpoint: Optional[str] = None):
        self.config = config or RunConfig()
        self.checkpoint = checkpoint

    @abstractmethod
    def _build(self, grid: VelocityGrid) -> dynamics.CollisionOperator:
        pass

    def build(self, grid: Optional[VelocityGrid] = None) -> dynamics.CollisionOperator:
        grid = grid or self.config.velocity_grid()
        operator = self._build(grid)
        logger.info(f"Built '{self.name}' collision operator on N={grid.N}, d={grid.d}")
        return operator

    def smoke_test(self, N: int = 8) -> dict:
        """Q of a unit Maxwellian on a tiny grid: it must be finite and massless"""
        grid = self.config.velocity_grid(N)
        f = analyze(dynamics.maxwellian_values(grid, 1.0, np.zeros(grid.d), 1.0), grid)
        q = self.build(grid)(f)
        return {
            "operator": self.name,
            "N": N,
            "finite": q.is_finite(),
            "q_norm": q.norm(),
            "q_mass": q.mass,
        }


class FastCollisionOperator(CollisionOperatorBase):
    name = "fast"

    def _build(self, grid):
        kernel = build_separable_quadrature(
            self.config.kernel_spec(), grid, self.config.quadrature_rule(grid.N)
        )
        return dynamics.FastOperator(kernel)


class DirectCollisionOperator(CollisionOperatorBase):
    name = "direct"

    def _build(self, grid):
        return dynamics.DirectOperator(self.config.kernel_spec(), grid)


class SpecNetCollisionOperator(CollisionOperatorBase):
    name = "specnet"

    def _build(self, grid):
        path = self.checkpoint or self.config.simulate.checkpoint
        if path:
            params, _, _ = load_checkpoint(codec.read_document(path, "checkpoint"))
        elif self.config.command == "simulate":
            raise ConfigError("The specnet operator needs --checkpoint")
        else:
            # untrained parameters, enough for smoke tests and timings
            s = self.config.specnet
            params = SpecNetParams.initialize(grid.d, min(s.n_trun, grid.N // 2), s.M, seed=self.config.seed)
        params.require_grid(grid)
        return dynamics.SpecNetOperator(params)


class CollisionOperatorFactory:
    """Factory for collision operator providers"""

    PROVIDERS = {
        "fast": FastCollisionOperator,
        "direct": DirectCollisionOperator,
        "specnet": SpecNetCollisionOperator,
    }

    @classmethod
    def create_operator(cls, provider: str = "fast", **kwargs) -> CollisionOperatorBase:
        if provider not in cls.PROVIDERS:
            raise ConfigError(
                f"Unsupported collision operator: {provider}. Available: {', '.join(cls.PROVIDERS)}"
            )
        return cls.PROVIDERS[provider](**kwargs)

    @classmethod
    def get_available_providers(cls) -> List[str]:
        return list(cls.PROVIDERS.keys())


def get_default_collision_operator_name() -> str:
    return getattr(settings, "DEFAULT_COLLISION_OPERATOR", "fast")


def get_default_collision_operator(config: Optional[RunConfig] = None) -> CollisionOperatorBase:
    return CollisionOperatorFactory.create_operator(get_default_collision_operator_name(), config=config)


# ==============================
# RUN ORCHESTRATION
# ==============================


@dataclass
class RunContext:
    config: RunConfig
    run_id: str
    out_dir: Path
    encoding: str
    progress: bool = True
    outputs: list = field(default_factory=list)

    def path(self, name: str) -> Path:
        target = self.out_dir / name
        target.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(str(target.relative_to(self.out_dir)))
        return target

    def write(self, name: str, document: dict) -> Path:
        return codec.write_document(self.path(name), document)


@dataclass
class RunOutcome:
    exit_code: int
    message: str
    result: dict = field(default_factory=dict)
    manifest: Optional[dict] = None
    run_id: Optional[str] = None
    out_dir: Optional[str] = None


def new_run_id(command: str) -> str:
    return f"{command.replace('_', '-')}-{timezone.now():%Y%m%d-%H%M%S}-{uuid.uuid4().hex[:6]}"


def prepare_run(config: RunConfig) -> RunContext:
    run_id = config.io.run_id or new_run_id(config.command)
    out_dir = Path(config.io.out_dir) if config.io.out_dir else Path(settings.SPECNET_OUT_DIR) / run_id
    out_dir.mkdir(parents=True, exist_ok=True)
    config.io.run_id = run_id
    config.io.out_dir = str(out_dir)
    config.io.encoding = config.io.encoding or settings.SPECNET_FLOAT_ENCODING
    threads = config.threads or settings.SPECNET_THREADS
    configure_fft(threads)
    return RunContext(
        config=config,
        run_id=run_id,
        out_dir=out_dir,
        encoding=config.io.encoding,
        progress=config.io.progress,
    )


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, (SpectralError, OSError)):
        return EXIT_CONFIG
    raise exc


def build_manifest(ctx: RunContext, result: dict, exit_code: int) -> dict:
    return codec.make_document(
        "manifest",
        command=ctx.config.command,
        run_id=ctx.run_id,
        config=ctx.config.dump(),
        outputs=sorted(set(ctx.outputs)),
        result=result,
        exit_code=exit_code,
        environment=validation.environment(),
        created_at=timezone.now().isoformat(),
    )


def load_corpus(path) -> Corpus:
    if not path:
        raise ConfigError("No corpus given; pass --corpus")
    return Corpus.from_document(codec.read_document(path, "corpus"))


def run_gen_data(ctx: RunContext) -> tuple:
    config = ctx.config
    grid = config.velocity_grid()
    counts = config.data.counts
    with tqdm(total=sum(counts), desc="samples", disable=not ctx.progress) as bar:
        corpus = generate_corpus(
            counts,
            grid,
            config.kernel_spec(),
            seed=config.seed,
            rule=config.quadrature_rule(),
            on_sample=lambda i: bar.update(1),
        )
    ctx.write("corpus.json", corpus.to_document(ctx.encoding))
    if config.io.dump_kernel:
        kernel = build_separable_quadrature(config.kernel_spec(), grid, config.quadrature_rule())
        ctx.write("kernel.json", kernel_document(kernel, ctx.encoding))
    dc = max(abs(s.q_target.coeffs.flat[0]) for s in corpus.samples)
    result = {
        "n_samples": len(corpus),
        "counts": list(counts),
        "mass_error": corpus.mass_report(),
        "max_target_dc": float(dc),
    }
    return EXIT_OK, f"Generated {len(corpus)} samples", result


def _initial_params(config: RunConfig, corpus: Corpus, n_trun: int, M: int) -> SpecNetParams:
    if config.specnet.init == "quadrature":
        kernel = build_separable_quadrature(config.kernel_spec(), corpus.grid, config.quadrature_rule(corpus.grid.N))
        return SpecNetParams.from_kernel(kernel, n_trun, terms=M)
    return SpecNetParams.initialize(corpus.grid.d, n_trun, M, seed=config.seed)


def _train_once(ctx: RunContext, corpus: Corpus, n_trun: int, M: int, lr: float, prefix: str = "") -> dict:
    config = ctx.config
    options = config.train_options()
    options.lr = lr
    state = None
    start_epoch = 0
    if config.specnet.resume:
        params, state, document = load_checkpoint(codec.read_document(config.specnet.resume, "checkpoint"))
        start_epoch = int(document["epoch"])
        logger.info(f"Resuming from {config.specnet.resume} at epoch {start_epoch}")
    else:
        params = _initial_params(config, corpus, n_trun, M)

    def save(p, s, epoch, loss_value, name="checkpoint.json"):
        ctx.write(
            f"{prefix}{name}",
            checkpoint_document(
                p,
                s,
                epoch=epoch,
                loss_value=loss_value,
                seed=config.seed,
                kernel=corpus.kernel.describe(),
                grid=corpus.grid.describe(),
                encoding=ctx.encoding,
            ),
        )

    with tqdm(total=max(options.epochs - start_epoch, 0), desc=f"train {prefix or ''}".strip(), disable=not ctx.progress) as bar:

        def on_epoch(epoch, loss_value):
            bar.update(1)
            if epoch % 100 == 0:
                bar.set_postfix(loss=f"{loss_value:.3e}")

        try:
            params, report, state = train(
                corpus,
                params,
                options,
                state=state,
                start_epoch=start_epoch,
                on_checkpoint=save,
                on_epoch=on_epoch,
            )
        except NumericalError as exc:
            partial = exc.partial or {}
            if "params" in partial:
                last = partial["report"].final_loss if "report" in partial else None
                save(partial["params"], partial["state"], partial["epoch"], last, "checkpoint_last_good.json")
            raise

    save(params, state, start_epoch + report.epochs_run, report.final_loss)
    frame = report.to_frame()
    frame.to_csv(ctx.path(f"{prefix}loss.csv"), index=False, float_format="%.17g")
    if config.io.plot:
        from .plots import plot_loss

        plot_loss(frame, ctx.path(f"{prefix}loss.png"), title=f"N_trun={params.n_trun}, M={params.M}, lr={lr}")
    return {
        "n_trun": params.n_trun,
        "M": params.M,
        "lr": lr,
        "n_real_params": params.n_real_params,
        **report.summary(),
    }


def run_train(ctx: RunContext) -> tuple:
    config = ctx.config
    corpus = load_corpus(config.specnet.corpus)
    corpus.require_grid(config.velocity_grid())
    s = config.specnet

    if not s.sweep:
        summary = _train_once(ctx, corpus, s.n_trun, s.M, s.lr)
        code = EXIT_OK if summary["stop_reason"] == "tolerance" else EXIT_VALIDATION
        message = f"Training stopped ({summary['stop_reason']}) after {summary['epochs_run']} epochs, loss {summary['final_loss']:.4e}"
        return code, message, summary

    unknown = set(s.sweep) - {"n_trun", "M", "lr"}
    if unknown:
        raise ConfigError(f"Cannot sweep over {sorted(unknown)}; allowed: n_trun, M, lr")
    axes = {
        "n_trun": s.sweep.get("n_trun", [s.n_trun]),
        "M": s.sweep.get("M", [s.M]),
        "lr": s.sweep.get("lr", [s.lr]),
    }
    rows = []
    for n_trun, M, lr in itertools.product(axes["n_trun"], axes["M"], axes["lr"]):
        prefix = f"sweep/n{n_trun}_m{M}_lr{lr:g}/"
        rows.append(_train_once(ctx, corpus, int(n_trun), int(M), float(lr), prefix))
    table = pd.DataFrame(rows)
    table.to_csv(ctx.path("ablation.csv"), index=False, float_format="%.17g")
    reached = int((table["stop_reason"] == "tolerance").sum())
    code = EXIT_OK if reached == len(table) else EXIT_VALIDATION
    return code, f"Sweep of {len(table)} runs, {reached} reached tolerance", {"runs": rows}


def initial_state(config: RunConfig, grid: VelocityGrid):
    initial = config.simulate.initial
    if initial.kind == "bkw":
        if grid.d != 2:
            raise ConfigError("The BKW initial condition is two-dimensional")
        return dynamics.bkw_field(0.0, grid, initial.sigma)
    centers = [list(c)[: grid.d] + [0.0] * (grid.d - len(c)) for c in initial.centers]
    if initial.kind == "maxwellian":
        values = dynamics.maxwellian_values(grid, 1.0, centers[0], initial.widths[0] ** 2)
        values /= np.sum(values) * grid.cell_volume
        return analyze(values, grid)
    return analyze(dynamics.gaussian_mixture(grid, centers, initial.widths), grid)


def run_simulate(ctx: RunContext) -> tuple:
    config = ctx.config
    sim = config.simulate
    grid = config.velocity_grid()
    f0 = initial_state(config, grid)
    operator = CollisionOperatorFactory.create_operator(sim.operator, config=config).build(grid)
    keep_states = ctx.config.io.dump_fields or sim.reference == "fast"

    reference = None
    if sim.reference == "bkw":
        if grid.d != 2:
            raise ConfigError("The BKW reference is two-dimensional")
        sigma = sim.initial.sigma
        reference = lambda t: dynamics.bkw_field(t, grid, sigma)  # noqa: E731

    def integrate(op, label, ref=None):
        n_steps = dynamics.step_count(sim.dt, sim.t_final, sim.cadence or dynamics.default_cadence(grid.N))
        with tqdm(total=n_steps, desc=label, disable=not ctx.progress) as bar:
            return dynamics.solve(
                f0,
                op,
                sim.dt,
                sim.t_final,
                cadence=sim.cadence,
                scheme=sim.scheme,
                keep_states=keep_states,
                reference=ref,
                track_q_norm=sim.track_q_norm,
                on_step=lambda step, total: bar.update(1),
            )

    try:
        trajectory = integrate(operator, sim.operator, reference)
    except NumericalError as exc:
        if isinstance(exc.partial, dynamics.Trajectory) and len(exc.partial):
            exc.partial.write_csv(ctx.path("trajectory_partial.csv"))
        raise

    if sim.reference == "fast":
        fast = FastCollisionOperator(config=config).build(grid)
        trajectory.attach_reference(integrate(fast, "reference"))

    trajectory.write_csv(ctx.path("trajectory.csv"))
    if ctx.config.io.dump_fields:
        for name, document in trajectory.snapshot_documents(ctx.run_id, ctx.encoding):
            ctx.write(f"fields/{name}", document)
    frame = trajectory.to_frame()
    if ctx.config.io.plot:
        from .plots import plot_moments

        plot_moments(frame, ctx.path("moments.png"), title=f"{sim.operator}, N={grid.N}")

    first, last = trajectory.moments[0], trajectory.moments[-1]
    result = {
        "operator": trajectory.operator,
        "steps": trajectory.steps[-1],
        "t_final": trajectory.times[-1],
        "mass_drift": abs(last.rho - first.rho) / abs(first.rho),
        "ke_initial": first.ke,
        "ke_final": last.ke,
        "entropy_final": last.entropy,
        "wall_time": trajectory.wall_time,
    }
    if trajectory.errors:
        result["max_error_vs_reference"] = float(np.max(trajectory.errors))
        result["final_error_vs_reference"] = float(trajectory.errors[-1])
    return EXIT_OK, f"Simulated {result['steps']} steps to t={result['t_final']:.4g}", result


def _checkpoint_params(path):
    if not path:
        raise ConfigError("This validation suite needs --checkpoint")
    params, _, document = load_checkpoint(codec.read_document(path, "checkpoint"))
    return params, document


def _suite_kwargs(config: RunConfig, suite: str) -> dict:
    v = config.validate_
    spec = config.kernel_spec()
    d, S, seed = config.grid.d, config.grid.S, config.seed
    if suite == "oracle":
        grid = VelocityGrid(d=d, N=v.oracle_N, S=S)
        return {"grid": grid, "spec": spec, "rule": config.quadrature_rule(grid.N), "seed": seed}
    if suite == "decay":
        return {"spec": spec, "K_list": v.K_list, "S": S, "seed": seed}
    if suite == "perturbation":
        return {"spec": spec, "seed": seed}
    if suite == "gradients":
        return {"spec": spec, "grid": VelocityGrid(d=d, N=v.oracle_N, S=S), "seed": seed}
    if suite == "bench":
        b = config.bench
        if b.checkpoint or v.checkpoint:
            params, _ = _checkpoint_params(b.checkpoint or v.checkpoint)
        else:
            params = SpecNetParams.initialize(d, config.specnet.n_trun, config.specnet.M, seed=seed)
        return {
            "params": params,
            "N_list": b.N_list,
            "spec": spec,
            "S": S,
            "repetitions": b.repetitions,
            "n_sigma": config.quadrature.n_sigma,
            "seed": seed,
            "workers": settings.SPECNET_BENCH_THREADS,
            "operators": tuple(b.operators),
        }
    params, document = _checkpoint_params(v.checkpoint)
    N_list = [N for N in v.N_list if N >= 2 * params.n_trun]
    if suite == "consistency":
        return {
            "params": params,
            "grids": [VelocityGrid(d=d, N=N, S=S) for N in N_list],
            "spec": spec,
            "train_loss": float(document["loss"]),
            "seed": seed,
            "n_sigma": config.quadrature.n_sigma,
        }
    return {
        "params": params,
        "N_train": int(document.get("grid", {}).get("N", config.grid.N)),
        "N_list": N_list,
        "spec": spec,
        "S": S,
        "n_samples": v.n_samples,
        "seed": seed,
        "n_sigma": config.quadrature.n_sigma,
    }


def write_report(ctx: RunContext, report: validation.ValidationReport, stem: str = "report"):
    ctx.write(f"{stem}.json", report.to_document())
    report.to_frame().to_csv(ctx.path(f"{stem}.csv"), index=False, float_format="%.17g")
    for name, table in report.tables.items():
        table.to_csv(ctx.path(f"{stem}_{name}.csv"), index=False, float_format="%.17g")


def run_validate(ctx: RunContext) -> tuple:
    suite = ctx.config.validate_.suite
    report = validation.SUITES[suite](**_suite_kwargs(ctx.config, suite))
    write_report(ctx, report)
    result = {
        "suite": suite,
        "passed": report.passed,
        "cases": len(report.cases),
        "failures": [c.case for c in report.failures],
    }
    if report.passed:
        return EXIT_OK, f"Suite '{suite}': all {len(report.cases)} cases passed", result
    return EXIT_VALIDATION, f"Suite '{suite}': {len(report.failures)} of {len(report.cases)} cases failed", result


def run_bench(ctx: RunContext) -> tuple:
    report = validation.bench_scaling(**_suite_kwargs(ctx.config, "bench"))
    write_report(ctx, report, "bench")
    table = report.tables["timings"]
    table.to_csv(ctx.path("timings.csv"), index=False, float_format="%.17g")
    for case in report.failures:
        logger.warning(f"Benchmark check '{case.case}' outside its bound ({case.value:.3g} vs {case.bound:.3g})")
    result = {
        "N_list": [int(n) for n in table["N"]],
        "crossover_N": report.environment.get("crossover_N"),
        "checks_passed": report.passed,
    }
    return EXIT_OK, f"Timed {len(table)} grid sizes", result


RUNNERS = {
    "gen_data": run_gen_data,
    "train": run_train,
    "simulate": run_simulate,
    "validate": run_validate,
    "bench": run_bench,
}


def record_run(ctx: RunContext, run=None):
    """Create or update the Run row; a missing database only costs the record"""
    from .models import Run

    try:
        if run is None:
            run, _ = Run.objects.get_or_create(
                run_id=ctx.run_id,
                defaults={"command": ctx.config.command},
            )
        run.command = ctx.config.command
        run.config = ctx.config.dump()
        run.out_dir = str(ctx.out_dir)
        run.mark_processing()
        return run
    except DatabaseError as e:
        logger.warning(f"Run {ctx.run_id} not recorded in the database: {str(e)}")
        return None


def finish_run(run, outcome: RunOutcome):
    if run is None:
        return
    try:
        run.mark_finished(
            outcome.exit_code,
            result=codec.jsonable(outcome.result),
            manifest=codec.jsonable(outcome.manifest),
        )
    except DatabaseError as e:
        logger.warning(f"Could not update run {run.run_id}: {str(e)}")


def execute_run(config: RunConfig, run=None) -> RunOutcome:
    """
    Run one command end to end: prepare the output directory, execute,
    write manifest.json and record the outcome. Known failures become exit
    codes; anything else propagates.
    """
    ctx = prepare_run(config)
    run = record_run(ctx, run)
    logger.info(f"Starting {config.command} run {ctx.run_id} in {ctx.out_dir}")
    try:
        code, message, result = RUNNERS[config.command](ctx)
    except Exception as exc:
        code = exit_code_for(exc)
        message = str(exc)
        result = {"error": type(exc).__name__, "message": message}
        logger.error(f"Run {ctx.run_id} failed ({code}): {message}")
    manifest = build_manifest(ctx, result, code)
    codec.write_document(ctx.out_dir / "manifest.json", manifest)
    outcome = RunOutcome(code, message, result, manifest, ctx.run_id, str(ctx.out_dir))
    finish_run(run, outcome)
    return outcome
