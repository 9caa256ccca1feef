"""
Standing verification suites. Each suite builds its own grids and kernels,
never raises for a failed check and returns a ValidationReport whose cases
carry the measured value, the bound it was held to and enough provenance to
rerun that case alone.
"""

import logging
import platform
import statistics
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
import scipy
import scipy.integrate
import scipy.special

from . import codec
from .dataset import draw_sample_values
from .exceptions import ContractError
from .grid import (
    SpectralField,
    VelocityGrid,
    analyze,
    configure_fft,
    embed_modes,
    get_fft_backend,
)
from .kernel import (
    DIRECT_SIZE_LIMIT,
    KernelSpec,
    QuadratureRule,
    build_separable_quadrature,
    eta_xi,
    g_hat_closed_form,
    g_hat_integral,
    q_direct,
    q_fast,
    radial_profile_integral,
    sphere_area,
)
from .specnet import SpecNetParams, batch_gradients, forward_coeffs

logger = logging.getLogger(__name__)

ORACLE_LADDER = ((8, 4), (16, 8), (32, 16))
DECAY_RAY_K = (8, 16, 32, 64)
DECAY_SLOPE_WINDOW = (-0.7, -0.3)
DECAY_SAMPLES_3D = 20000
PERTURBATION_DELTAS = (1e-6, 1e-5, 1e-4, 1e-3)
PERTURBATION_SLOPE_WINDOW = (0.9, 1.1)
GRADIENT_STEP = 1e-6
GRADIENT_TOL = 1e-5
VARIANCE_BOUND = 0.2
HELD_OUT_OFFSET = 1_000_000


@dataclass
class ValidationCase:
    case: str
    metric: str
    value: float
    bound: float
    passed: bool
    provenance: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    suite: str
    cases: list = field(default_factory=list)
    environment: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(case.passed for case in self.cases)

    @property
    def failures(self) -> list:
        return [case for case in self.cases if not case.passed]

    def add(self, case: str, metric: str, value, bound, passed: bool, **provenance):
        value = float(value) if value is not None else float("nan")
        self.cases.append(ValidationCase(case, metric, value, float(bound), bool(passed), provenance))
        level = logging.INFO if passed else logging.WARNING
        logger.log(level, f"[{self.suite}] {case}: {metric}={value:.4e} (bound {bound:.4e}) {'ok' if passed else 'FAILED'}")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"suite": self.suite, "case": c.case, "metric": c.metric, "value": c.value, "bound": c.bound, "pass": c.passed}
                for c in self.cases
            ],
            columns=["suite", "case", "metric", "value", "bound", "pass"],
        )

    def to_document(self) -> dict:
        def clean(x):
            return None if isinstance(x, float) and not np.isfinite(x) else x

        cases = []
        for c in self.cases:
            row = asdict(c)
            row["value"] = clean(row["value"])
            cases.append(row)
        return codec.make_document(
            "validation_report",
            suite=self.suite,
            passed=self.passed,
            environment=self.environment,
            cases=cases,
            tables={name: frame.to_dict(orient="records") for name, frame in self.tables.items()},
        )


def environment(**extra) -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "machine": platform.machine(),
        "fft_workers": get_fft_backend().workers,
        **extra,
    }


def random_band_limited(grid: VelocityGrid, seed: int, band: int = None) -> SpectralField:
    """Real random field whose modes vanish outside |k|_inf < band"""
    band = band or max(1, grid.N // 4)
    rng = np.random.default_rng(seed)
    coeffs = analyze(rng.standard_normal(grid.shape), grid).coeffs
    keep = np.all(np.abs(grid.modes) < band, axis=0)
    return SpectralField(grid, np.where(keep, coeffs, 0.0))


def _relative(a, b) -> float:
    ref = np.linalg.norm(np.ravel(b))
    return float(np.linalg.norm(np.ravel(a) - np.ravel(b)) / ref) if ref > 0 else float("inf")


def _probe_pairs(grid: VelocityGrid, count: int, seed: int, reach: int = None):
    """Random mode pairs in the stored range, or with |l|_inf, |m|_inf <= reach"""
    rng = np.random.default_rng([seed, 7])
    half = grid.N // 2
    lo, hi = (-half, half) if reach is None else (-min(reach, half), min(reach, half - 1) + 1)
    l = rng.integers(lo, hi, size=(count, grid.d))
    m = rng.integers(lo, hi, size=(count, grid.d))
    return l, m


def check_oracle_equivalence(grid: VelocityGrid = None, spec: KernelSpec = None, rule: QuadratureRule = None, *, seed: int = 0, ladder=ORACLE_LADDER, n_probes: int = 6, reach: int = None, tol: float = 1e-8) -> ValidationReport:
    grid = grid or VelocityGrid(d=2, N=8, S=3.0)
    spec = spec or KernelSpec(d=grid.d)
    if grid.size > DIRECT_SIZE_LIMIT:
        raise ContractError(f"Oracle suite needs N^d <= {DIRECT_SIZE_LIMIT}, got {grid.size}")
    rule = rule or QuadratureRule.build(grid.d, grid.S, n_r=grid.N)
    report = ValidationReport("oracle", environment=environment(grid=grid.describe(), kernel=spec.describe(), seed=seed))

    kernel = build_separable_quadrature(spec, grid, rule)
    f = random_band_limited(grid, seed)
    fft_path = q_fast(f, kernel).coeffs
    literal = q_direct(f, spec, grid, kernel=kernel, wrap=True).coeffs
    report.add("fft_vs_double_sum", "relative_error", _relative(fft_path, literal), tol, _relative(fft_path, literal) <= tol, seed=seed, rule=rule.label)

    l, m = _probe_pairs(grid, n_probes, seed, reach)
    truth = np.array([g_hat_integral(li, mi, spec, grid, tol=1e-10) for li, mi in zip(l, m)])
    l_pos, m_pos = l % grid.N, m % grid.N
    errors = []
    for n_r, n_sigma in ladder:
        rung = build_separable_quadrature(spec, grid, QuadratureRule.build(grid.d, grid.S, n_r=n_r, n_sigma=n_sigma))
        error = float(np.max(np.abs(rung.g_fast(l_pos, m_pos) - truth)))
        errors.append(error)
        report.add(f"ladder_{n_r}x{n_sigma}", "max_mode_error", error, errors[0], error <= errors[0], pairs=np.stack([l, m], 1).tolist())
    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    report.add("ladder_strictly_decreasing", "last_over_first", errors[-1] / errors[0] if errors[0] else 0.0, 1.0, decreasing, errors=errors)

    nearly = KernelSpec(d=spec.d, alpha=spec.alpha, C=spec.C, e=1.0 - 1e-12)
    exact = KernelSpec(d=spec.d, alpha=spec.alpha, C=spec.C, e=1.0)
    gap = float(np.max(np.abs(g_hat_closed_form(l, m, exact, grid) - g_hat_closed_form(l, m, nearly, grid))))
    report.add("continuity_in_e", "max_abs_difference", gap, 1e-8, gap <= 1e-8)
    return report


def _shell_pairs_2d(K: int):
    """All pairs with max(|l|_inf, |m|_inf) == K, yielded in blocks of fixed l"""
    side = np.arange(-K, K + 1)
    box = np.stack(np.meshgrid(side, side, indexing="ij"), -1).reshape(-1, 2)
    on_shell = np.max(np.abs(box), axis=1) == K
    shell, inner = box[on_shell], box[~on_shell]
    for l in shell:
        yield np.broadcast_to(l, box.shape), box
    for l in inner:
        yield np.broadcast_to(l, shell.shape), shell


def shell_maximum(spec: KernelSpec, grid: VelocityGrid, K: int, *, seed: int = 0) -> float:
    """max |G(l, m)| over the shell max(|l|_inf, |m|_inf) = K"""
    if spec.d == 2:
        keys = []
        for l, m in _shell_pairs_2d(K):
            eta, xi = eta_xi(l, m, spec)
            keys.append(np.round(np.stack([eta, xi], -1), 10))
        unique = np.unique(np.concatenate(keys), axis=0)
    else:
        rng = np.random.default_rng([seed, K])
        l = rng.integers(-K, K + 1, size=(DECAY_SAMPLES_3D, 3))
        m = rng.integers(-K, K + 1, size=(DECAY_SAMPLES_3D, 3))
        axis = rng.integers(0, 3, size=DECAY_SAMPLES_3D)
        sign = rng.choice([-1, 1], size=DECAY_SAMPLES_3D)
        rows = np.arange(DECAY_SAMPLES_3D)
        target = np.where(rng.random(DECAY_SAMPLES_3D) < 0.5, 0, 1)
        l[rows[target == 0], axis[target == 0]] = sign[target == 0] * K
        m[rows[target == 1], axis[target == 1]] = sign[target == 1] * K
        eta, xi = eta_xi(l, m, spec)
        unique = np.unique(np.round(np.stack([eta, xi], -1), 10), axis=0)
    power = spec.d - 1 + spec.alpha
    scale = spec.C * sphere_area(spec.d) ** 2 * grid.R ** (spec.d + spec.alpha)
    values = radial_profile_integral(unique[:, 0], unique[:, 1], power, spec.d)
    return float(scale * np.max(np.abs(values)))


def bessel_envelope(eta: float, power: float) -> float:
    """int_0^1 x^power |J0(eta x)| dx, split at the zeros of J0"""
    n_zeros = int(eta / np.pi) + 2
    zeros = scipy.special.jn_zeros(0, n_zeros) / eta
    points = zeros[zeros < 1.0]
    value, _ = scipy.integrate.quad(
        lambda x: x**power * abs(scipy.special.j0(eta * x)),
        0.0,
        1.0,
        points=points if points.size else None,
        limit=max(50, 4 * points.size + 50),
    )
    return value


def check_kernel_decay(spec: KernelSpec, K_list=(4, 8, 16, 32), *, S: float = 3.0, ray_K=DECAY_RAY_K, seed: int = 0) -> ValidationReport:
    K_list = sorted(K_list)
    grid = VelocityGrid(d=spec.d, N=2 * max(max(K_list), max(ray_K)) + 2, S=S)
    report = ValidationReport("decay", environment=environment(kernel=spec.describe(), S=S, K_list=K_list, seed=seed))

    maxima = [shell_maximum(spec, grid, K, seed=seed) for K in K_list]
    report.tables["shells"] = pd.DataFrame({"K": K_list, "shell_max": maxima})
    for K, value in zip(K_list, maxima):
        report.add(f"shell_K{K}", "shell_max", value, maxima[0], value <= maxima[0], K=K)
    ratio = maxima[-1] / maxima[0] if maxima[0] else 0.0
    report.add("decay_ratio", f"max(K={K_list[-1]}) / max(K={K_list[0]})", ratio, 0.1, ratio <= 0.1)
    monotone = all(b <= a for a, b in zip(maxima, maxima[1:]))
    report.add("shell_monotone", "increases", sum(b > a for a, b in zip(maxima, maxima[1:])), 0, monotone)

    # the ray l = -m, where xi = 0
    rate = -0.5 if spec.d == 2 else -1.0
    etas, envelopes, values = [], [], []
    for K in ray_K:
        l = np.zeros(spec.d)
        l[0] = K
        eta, _ = eta_xi(l, -l, spec)
        etas.append(float(eta))
        values.append(abs(complex(g_hat_closed_form(l, -l, spec, grid))))
        if spec.d == 2:
            envelopes.append(bessel_envelope(float(eta), 1.0 + spec.alpha))
        else:
            envelopes.append(values[-1])
    slope = float(np.polyfit(np.log(etas), np.log(envelopes), 1)[0])
    lo, hi = DECAY_SLOPE_WINDOW if spec.d == 2 else (rate - 0.5, rate + 0.5)
    report.tables["ray"] = pd.DataFrame({"K": list(ray_K), "eta": etas, "abs_G": values, "envelope": envelopes})
    # in 2D |G| oscillates along the ray; the fit is to its Bessel envelope, not to |G|
    if spec.d == 2:
        case, metric = "ray_bessel_envelope_slope", f"loglog_slope(int_0^1 x^{1.0 + spec.alpha:g} |J0(eta x)| dx)"
    else:
        case, metric = "ray_abs_G_slope", "loglog_slope(|G|)"
    report.add(case, metric, slope, hi, lo <= slope <= hi, window=[lo, hi], predicted=rate)
    return report


def _reference_kernel(spec: KernelSpec, grid: VelocityGrid, n_sigma: int = 16):
    return build_separable_quadrature(spec, grid, QuadratureRule.build(grid.d, grid.S, n_r=grid.N, n_sigma=n_sigma))


def _gaussian_state(grid: VelocityGrid, seed: int, index: int = 0, kind: str = "gaussian") -> SpectralField:
    _, values = draw_sample_values(kind, grid, seed, index)
    return analyze(values, grid)


def check_consistency_refinement(params: SpecNetParams, grids, spec: KernelSpec, *, train_loss: float, seed: int = 0, n_sigma: int = 16) -> ValidationReport:
    grids = sorted(grids, key=lambda g: g.N)
    finest = grids[-1]
    for grid in grids:
        params.require_grid(grid)
    report = ValidationReport(
        "consistency",
        environment=environment(grids=[g.N for g in grids], kernel=spec.describe(), N_trun=params.n_trun, M=params.M, seed=seed, train_loss=train_loss),
    )
    floor_bound = 3.0 * train_loss
    reference_kernel = _reference_kernel(spec, finest, n_sigma)

    def state(grid, band=None):
        f = _gaussian_state(grid, seed)
        if band is None:
            return f
        keep = np.all(np.abs(grid.modes) < band, axis=0)
        return SpectralField(grid, np.where(keep, f.coeffs, 0.0))

    def error_curve(p, band=None):
        reference = q_fast(state(finest, band), reference_kernel).coeffs
        errors = []
        for grid in grids:
            q = forward_coeffs(state(grid, band).coeffs, p, grid)
            errors.append(_relative(embed_modes(q, finest.N, grid.d), reference))
        return errors

    errors = error_curve(params)
    report.tables["refinement"] = pd.DataFrame({"N": [g.N for g in grids], "error": errors})
    for a, b, grid in zip(errors, errors[1:], grids[1:]):
        ok = b <= 1.05 * a or b <= floor_bound
        report.add(f"non_increasing_N{grid.N}", "error", b, max(1.05 * a, floor_bound), ok)
    report.add("floor_vs_training_loss", "finest_error", errors[-1], floor_bound, errors[-1] <= floor_bound)

    control = SpecNetParams.initialize(params.d, params.n_trun, params.M, seed=seed + 1)
    control_error = error_curve(control)[-1]
    report.add("random_params_control", "finest_error", control_error, 10.0 * errors[-1], control_error >= 10.0 * errors[-1])

    # f = f_N on every grid of the ladder
    band = max(1, grids[0].N // 4)
    band_errors = error_curve(params, band=band)
    report.tables["band_limited"] = pd.DataFrame({"N": [g.N for g in grids], "error": band_errors})
    report.add("band_limited_input", "finest_error", band_errors[-1], floor_bound, band_errors[-1] <= floor_bound, band=band)
    return report


def check_resolution_invariance(params: SpecNetParams, N_train: int, N_list, spec: KernelSpec, *, S: float = 3.0, n_samples: int = 10, seed: int = 0, n_sigma: int = 16, ratio_bound: float = 3.0, min_N: int = 32) -> ValidationReport:
    grids = [VelocityGrid(d=spec.d, N=N, S=S) for N in sorted(N_list)]
    for grid in grids:
        params.require_grid(grid)
    report = ValidationReport(
        "resolution",
        environment=environment(N_train=N_train, N_list=[g.N for g in grids], kernel=spec.describe(), seed=seed, n_samples=n_samples),
    )
    snapshot = {k: v.copy() for k, v in params.arrays().items()}

    rows = []
    for grid in grids:
        kernel = _reference_kernel(spec, grid, n_sigma)
        errors = []
        for i in range(n_samples):
            kind = ("gaussian", "two_gaussian", "perturbed")[i % 3]
            f = _gaussian_state(grid, seed, HELD_OUT_OFFSET + i, kind)
            errors.append(_relative(forward_coeffs(f.coeffs, params, grid), q_fast(f, kernel).coeffs))
        rows.append({"N": grid.N, "error": float(np.mean(errors)), "max_error": float(np.max(errors)), "in_ratio": grid.N >= min_N})
        report.add(f"N{grid.N}", "mean_relative_error", rows[-1]["error"], float("inf"), np.isfinite(rows[-1]["error"]), excluded=grid.N < min_N)
    table = pd.DataFrame(rows)
    report.tables["resolution"] = table

    counted = table[table["in_ratio"]]["error"]
    ratio = float(counted.max() / counted.min()) if len(counted) and counted.min() > 0 else float("nan")
    report.add("max_over_min", "ratio", ratio, ratio_bound, bool(np.isfinite(ratio) and ratio <= ratio_bound))
    unchanged = all(np.array_equal(snapshot[k], v) for k, v in params.arrays().items())
    report.add("parameters_unchanged", "n_real_params", params.n_real_params, params.n_real_params, unchanged)
    return report


def time_call(fn, repetitions: int = 5):
    """Median and spread of `repetitions` timed calls after one warm-up"""
    fn()
    samples = []
    for _ in range(repetitions):
        started = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - started)
    return statistics.median(samples), statistics.pstdev(samples), samples


def bench_scaling(params: SpecNetParams, N_list, spec: KernelSpec, *, S: float = 3.0, repetitions: int = 5, n_sigma: int = 16, seed: int = 0, workers: int = 1, operators=("fast", "specnet")) -> ValidationReport:
    if repetitions < 5:
        raise ContractError(f"Timings need at least 5 repetitions, got {repetitions}")
    N_list = sorted(N_list)
    previous_workers = get_fft_backend().workers
    configure_fft(workers)
    report = ValidationReport(
        "bench",
        environment=environment(N_list=N_list, kernel=spec.describe(), repetitions=repetitions, workers=workers, seed=seed),
    )
    rows = []
    try:
        for N in N_list:
            grid = VelocityGrid(d=spec.d, N=N, S=S)
            f = _gaussian_state(grid, seed)
            row = {"N": N}
            if "fast" in operators:
                kernel = build_separable_quadrature(spec, grid, QuadratureRule.build(grid.d, S, n_r=N, n_sigma=n_sigma))
                row["fast_median"], row["fast_std"], _ = time_call(lambda: q_fast(f, kernel), repetitions)
            if "specnet" in operators and params is not None:
                row["specnet_median"], row["specnet_std"], _ = time_call(lambda: forward_coeffs(f.coeffs, params, grid), repetitions)
            if "fast_median" in row and "specnet_median" in row:
                row["speedup"] = row["fast_median"] / row["specnet_median"]
            rows.append(row)
            logger.info(f"bench N={N}: {row}")
    finally:
        configure_fft(previous_workers)

    table = pd.DataFrame(rows)
    report.tables["timings"] = table
    for name in ("fast", "specnet"):
        if f"{name}_median" not in table:
            continue
        for _, row in table.iterrows():
            spread = row[f"{name}_std"] / row[f"{name}_median"] if row[f"{name}_median"] > 0 else 0.0
            report.add(f"{name}_variance_N{int(row['N'])}", "std_over_median", spread, VARIANCE_BOUND, spread <= VARIANCE_BOUND)

    if len(table) >= 2 and "specnet_median" in table:
        lo, hi = table.iloc[0], table.iloc[-1]
        growth = (hi["N"] / lo["N"]) ** spec.d * np.log(hi["N"]) / np.log(lo["N"])
        net_ratio = hi["specnet_median"] / lo["specnet_median"]
        report.add("specnet_scaling", f"t(N={int(hi['N'])}) / t(N={int(lo['N'])})", net_ratio, 2.0 * growth, net_ratio <= 2.0 * growth)
        if "fast_median" in table:
            fast_ratio = hi["fast_median"] / lo["fast_median"]
            report.add("quadrature_scaling_exceeds_specnet", "fast_ratio", fast_ratio, net_ratio, fast_ratio > net_ratio)
            report.add("speedup_trend", "last_over_first_speedup", hi["speedup"] / lo["speedup"], 1.0, hi["speedup"] > lo["speedup"])
            faster = table[table["speedup"] > 1.0]
            crossover = int(faster["N"].iloc[0]) if len(faster) else None
            report.environment["crossover_N"] = crossover
    return report


def check_perturbation(spec: KernelSpec, grid: VelocityGrid = None, *, deltas=PERTURBATION_DELTAS, seed: int = 0, n_sigma: int = 8) -> ValidationReport:
    """Output error of quadrature-initialized parameters against injected parameter noise of size delta"""
    grid = grid or VelocityGrid(d=spec.d, N=16 if spec.d == 2 else 8, S=3.0)
    kernel = build_separable_quadrature(spec, grid, QuadratureRule.build(grid.d, grid.S, n_r=grid.N, n_sigma=n_sigma))
    params = SpecNetParams.from_kernel(kernel, grid.N // 2)
    report = ValidationReport("perturbation", environment=environment(grid=grid.describe(), kernel=spec.describe(), deltas=list(deltas), seed=seed))

    f = _gaussian_state(grid, seed)
    base = forward_coeffs(f.coeffs, params, grid)
    report.add("quadrature_init_matches_q_fast", "relative_error", _relative(base, q_fast(f, kernel).coeffs), 1e-10, _relative(base, q_fast(f, kernel).coeffs) <= 1e-10)

    rng = np.random.default_rng([seed, 3])
    directions = {
        name: rng.standard_normal(value.shape) + 1j * rng.standard_normal(value.shape)
        for name, value in params.arrays().items()
    }
    errors = []
    for delta in deltas:
        perturbed = params.replace(**{name: value + delta * directions[name] * np.abs(value).max() for name, value in params.arrays().items()})
        errors.append(_relative(forward_coeffs(f.coeffs, perturbed, grid), base))
    slope = float(np.polyfit(np.log(deltas), np.log(errors), 1)[0])
    report.tables["perturbation"] = pd.DataFrame({"delta": list(deltas), "output_error": errors})
    lo, hi = PERTURBATION_SLOPE_WINDOW
    report.add("linear_response", "loglog_slope", slope, hi, lo <= slope <= hi, window=[lo, hi])
    return report


def check_gradients(spec: KernelSpec = None, grid: VelocityGrid = None, *, n_trun: int = 2, M: int = 2, n_coords: int = 64, h: float = GRADIENT_STEP, tol: float = GRADIENT_TOL, seed: int = 0) -> ValidationReport:
    """Analytic Wirtinger gradients against central differences on sampled real coordinates"""
    grid = grid or VelocityGrid(d=2, N=8, S=3.0)
    spec = spec or KernelSpec(d=grid.d)
    params = SpecNetParams.initialize(grid.d, n_trun, M, seed=seed)
    report = ValidationReport("gradients", environment=environment(grid=grid.describe(), N_trun=n_trun, M=M, h=h, seed=seed))

    f = _gaussian_state(grid, seed).coeffs
    target = q_fast(SpectralField(grid, f), _reference_kernel(spec, grid, 8)).coeffs
    _, grads = batch_gradients(f, target, params, grid)

    def loss_at(p):
        return batch_gradients(f, target, p, grid)[0]

    rng = np.random.default_rng([seed, 11])
    names = list(params.arrays())
    worst = 0.0
    rows = []
    scale = grads.max_abs()
    for _ in range(n_coords):
        name = names[rng.integers(len(names))]
        flat = int(rng.integers(params.arrays()[name].size))
        imag = bool(rng.integers(2))
        step = (1j if imag else 1.0) * h
        values = {}
        for sign in (1.0, -1.0):
            arr = params.arrays()[name].copy()
            arr.flat[flat] += sign * step
            values[sign] = loss_at(params.replace(**{name: arr}))
        numeric = (values[1.0] - values[-1.0]) / (2.0 * h)
        wirtinger = getattr(grads, name).flat[flat]
        analytic = 2.0 * (wirtinger.imag if imag else wirtinger.real)
        error = abs(numeric - analytic) / max(abs(analytic), 1e-3 * scale, 1e-12)
        worst = max(worst, error)
        rows.append({"param": name, "index": flat, "imag": imag, "analytic": analytic, "numeric": numeric, "error": error})
    report.tables["coordinates"] = pd.DataFrame(rows)
    report.add("finite_difference", "max_relative_error", worst, tol, worst <= tol, n_coords=n_coords)
    return report


SUITES = {
    "oracle": check_oracle_equivalence,
    "decay": check_kernel_decay,
    "consistency": check_consistency_refinement,
    "resolution": check_resolution_invariance,
    "bench": bench_scaling,
    "perturbation": check_perturbation,
    "gradients": check_gradients,
}
