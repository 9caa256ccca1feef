"""
Training corpus: Maxwellians, two-Gaussian mixtures and perturbed Gaussians,
normalized to unit mass, with targets from the quadrature fast-spectral
operator.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import codec
from .exceptions import ContractError, FormatError, NumericalError
from .grid import SpectralField, VelocityGrid, analyze
from .kernel import (
    DEFAULT_CACHE_BYTES,
    KernelSpec,
    QuadratureRule,
    apply_separable,
    build_separable_quadrature,
)

logger = logging.getLogger(__name__)

KINDS = ("gaussian", "two_gaussian", "perturbed")
CENTER_RANGE = (-1.0, 1.0)
WIDTH_RANGE = (0.8, 1.2)
COEFF_RANGE = (0.0, 1.0)
NEGATIVITY_TOL = 1e-6
MAX_DRAWS = 100
TARGET_BATCH = 4
SPLIT_STREAM = 1


@dataclass
class SampleSpec:
    kind: str
    centers: list
    widths: list
    coeffs: dict = field(default_factory=dict)
    seed: int = 0
    index: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"Unknown sample kind: {self.kind}")
        lo, hi = WIDTH_RANGE
        for sigma in self.widths:
            if not lo <= sigma <= hi:
                raise ContractError(f"Width {sigma} outside [{lo}, {hi}]")
        lo, hi = CENTER_RANGE
        for center in self.centers:
            if not all(lo <= c <= hi for c in center):
                raise ContractError(f"Center {center} outside [{lo}, {hi}]^d")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SampleSpec":
        return cls(
            kind=data["kind"],
            centers=[list(c) for c in data["centers"]],
            widths=list(data["widths"]),
            coeffs={k: v if np.isscalar(v) else list(v) for k, v in data.get("coeffs", {}).items()},
            seed=data.get("seed", 0),
            index=data.get("index", 0),
        )


@dataclass
class Sample:
    f: SpectralField
    q_target: SpectralField
    spec: SampleSpec
    kernel: dict = field(default_factory=dict)


def gaussian(grid: VelocityGrid, center, sigma) -> np.ndarray:
    center = np.asarray(center, dtype=float).reshape((grid.d,) + (1,) * grid.d)
    r2 = np.sum((grid.points - center) ** 2, axis=0)
    return np.exp(-r2 / (2.0 * sigma**2)) / (2.0 * np.pi * sigma**2) ** (grid.d / 2.0)


def perturbation(grid: VelocityGrid, coeffs: dict) -> np.ndarray:
    """g = c0 + sum_i c_i v_i + sum_{i<=j} c_ij v_i v_j"""
    v = grid.points
    g = np.full(grid.shape, float(coeffs.get("c0", 0.0)))
    for i, c in enumerate(coeffs.get("linear", [])):
        g = g + c * v[i]
    quad = iter(coeffs.get("quadratic", []))
    for i in range(grid.d):
        for j in range(i, grid.d):
            c = next(quad, 0.0)
            g = g + c * v[i] * v[j]
    return g


def mass_of(values, grid: VelocityGrid) -> float:
    """Periodic trapezoid rule, which equals the DC mode times (2T)^d"""
    return float(np.sum(values) * grid.cell_volume)


def normalize_mass(values, grid: VelocityGrid) -> np.ndarray:
    values = np.asarray(values, dtype=float).reshape(grid.shape)
    mass = mass_of(values, grid)
    if not mass > 0:
        raise ContractError(f"Cannot normalize a field with mass {mass}")
    return values / mass


def draw_spec(kind: str, d: int, seed: int, index: int, attempt: int = 0) -> SampleSpec:
    rng = np.random.default_rng([seed, index, 0, attempt])
    n_centers = 2 if kind == "two_gaussian" else 1
    centers = rng.uniform(*CENTER_RANGE, size=(n_centers, d))
    widths = rng.uniform(*WIDTH_RANGE, size=n_centers)
    coeffs = {}
    if kind == "perturbed":
        coeffs = {
            "c0": float(rng.uniform(*COEFF_RANGE)),
            "linear": rng.uniform(*COEFF_RANGE, size=d).tolist(),
            "quadratic": rng.uniform(*COEFF_RANGE, size=d * (d + 1) // 2).tolist(),
        }
    return SampleSpec(
        kind=kind,
        centers=centers.tolist(),
        widths=widths.tolist(),
        coeffs=coeffs,
        seed=seed,
        index=index,
    )


def evaluate_sample(spec: SampleSpec, grid: VelocityGrid) -> np.ndarray:
    """Nodal values of the sample before normalization"""
    if spec.kind == "gaussian":
        return gaussian(grid, spec.centers[0], spec.widths[0])
    if spec.kind == "two_gaussian":
        return 0.5 * (
            gaussian(grid, spec.centers[0], spec.widths[0])
            + gaussian(grid, spec.centers[1], spec.widths[1])
        )
    base = gaussian(grid, spec.centers[0], spec.widths[0])
    return base * (1.0 + perturbation(grid, spec.coeffs))


def admissible(values) -> bool:
    return bool(np.min(values) >= -NEGATIVITY_TOL * np.max(values))


def draw_sample_values(kind: str, grid: VelocityGrid, seed: int, index: int):
    """(spec, unit-mass nodal values), redrawing inadmissible perturbations"""
    for attempt in range(MAX_DRAWS):
        spec = draw_spec(kind, grid.d, seed, index, attempt)
        values = evaluate_sample(spec, grid)
        if not admissible(values):
            logger.debug(f"Sample {index} ({kind}) negative on attempt {attempt}, redrawing")
            continue
        try:
            return spec, normalize_mass(values, grid)
        except ContractError:
            continue
    raise NumericalError(f"No admissible {kind} sample for index {index} after {MAX_DRAWS} draws")


def in_validation(seed: int, index: int, fraction: float) -> bool:
    if fraction <= 0:
        return False
    return bool(np.random.default_rng([seed, index, SPLIT_STREAM]).random() < fraction)


@dataclass
class Corpus:
    grid: VelocityGrid
    kernel: KernelSpec
    samples: list
    seed: int = 0
    counts: tuple = (0, 0, 0)
    rule: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    def split(self, fraction: float):
        """(train, validation); membership depends only on (seed, index)"""
        train, val = [], []
        for sample in self.samples:
            target = val if in_validation(self.seed, sample.spec.index, fraction) else train
            target.append(sample)
        return train, val

    def mass_report(self) -> dict:
        report = {}
        for kind in KINDS:
            errors = [abs(s.f.mass - 1.0) for s in self.samples if s.spec.kind == kind]
            report[kind] = max(errors) if errors else None
        return report

    def describe(self) -> dict:
        return {
            "grid": self.grid.describe(),
            "kernel": self.kernel.describe(),
            "rule": self.rule,
            "seed": self.seed,
            "counts": list(self.counts),
            "n_samples": len(self.samples),
        }

    def to_document(self, encoding: str = "decimal") -> dict:
        records = [
            {
                "spec": sample.spec.to_dict(),
                "f": codec.encode_array(sample.f.coeffs, encoding),
                "q_target": codec.encode_array(sample.q_target.coeffs, encoding),
            }
            for sample in self.samples
        ]
        return codec.make_document("corpus", **self.describe(), samples=records)

    @classmethod
    def from_document(cls, document: dict) -> "Corpus":
        document = codec.check_document(document, "corpus")
        try:
            g = document["grid"]
            grid = VelocityGrid(d=g["d"], N=g["N"], S=g["S"])
            k = document["kernel"]
            kernel = KernelSpec(d=k["d"], alpha=k["alpha"], C=k["C"], e=k["e"])
            samples = [
                Sample(
                    f=SpectralField(grid, codec.decode_array(r["f"])),
                    q_target=SpectralField(grid, codec.decode_array(r["q_target"])),
                    spec=SampleSpec.from_dict(r["spec"]),
                    kernel=kernel.describe(),
                )
                for r in document["samples"]
            ]
        except (KeyError, TypeError, ContractError) as exc:
            raise FormatError(f"Malformed corpus document: {exc}") from exc
        return cls(
            grid=grid,
            kernel=kernel,
            samples=samples,
            seed=document.get("seed", 0),
            counts=tuple(document.get("counts", (0, 0, 0))),
            rule=document.get("rule", {}),
        )

    def require_grid(self, grid: VelocityGrid):
        if grid != self.grid:
            raise ContractError(f"Corpus was generated on {self.grid}, requested {grid}")


def generate_corpus(counts, grid: VelocityGrid, kernel: KernelSpec, seed: int = 0, *, rule: QuadratureRule = None, cache_bytes=DEFAULT_CACHE_BYTES, on_sample=None) -> Corpus:
    """
    Draw `counts = (n_gauss, n_two, n_pert)` samples on `grid` and evaluate
    their targets with a quadrature-built separable kernel.

    Sample i uses its own generator seeded with (seed, i), so the corpus is
    identical however the indices are scheduled.
    """
    counts = tuple(int(c) for c in counts)
    if len(counts) != len(KINDS) or any(c < 0 for c in counts):
        raise ContractError(f"counts must be three non-negative integers, got {counts}")
    if sum(counts) == 0:
        raise ContractError("Refusing to generate an empty corpus")
    if kernel.d != grid.d:
        raise ContractError(f"Kernel d={kernel.d} does not match grid d={grid.d}")

    rule = rule or QuadratureRule.build(grid.d, grid.S, n_r=grid.N)
    if rule.d != grid.d:
        raise ContractError(f"Quadrature rule d={rule.d} does not match grid d={grid.d}")
    operator = build_separable_quadrature(kernel, grid, rule, cache_bytes=cache_bytes)
    logger.info(f"Generating corpus {counts} on N={grid.N}, d={grid.d} with {operator.M_total} kernel terms")

    kinds = [kind for kind, n in zip(KINDS, counts) for _ in range(n)]
    specs, fields = [], []
    for index, kind in enumerate(kinds):
        spec, values = draw_sample_values(kind, grid, seed, index)
        specs.append(spec)
        fields.append(analyze(values, grid).coeffs)

    samples = []
    for start in range(0, len(fields), TARGET_BATCH):
        batch = np.stack(fields[start : start + TARGET_BATCH])
        targets = apply_separable(batch, operator)
        for offset, target in enumerate(targets):
            i = start + offset
            samples.append(
                Sample(
                    f=SpectralField(grid, fields[i]),
                    q_target=SpectralField(grid, target),
                    spec=specs[i],
                    kernel=kernel.describe(),
                )
            )
            if on_sample is not None:
                on_sample(i)

    bad = [s.spec.index for s in samples if not (s.f.is_finite() and s.q_target.is_finite())]
    if bad:
        raise NumericalError(f"Non-finite fields in samples {bad[:10]}")
    return Corpus(
        grid=grid,
        kernel=kernel,
        samples=samples,
        seed=seed,
        counts=counts,
        rule={**rule.label, "N_r": rule.n_r, "N_sigma": rule.n_sigma},
    )
