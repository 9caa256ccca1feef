"""
Velocity-space discretization and the truncated Fourier transforms.

A distribution supported in the ball of radius S is extended periodically to
the box [-T, T)^d with T = (3 + sqrt(2)) / 2 * S. Coefficients are stored as
d-dimensional arrays in FFT-natural order: the entry at array position j
along an axis holds mode k = j for j < N/2 and k = j - N for j >= N/2.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from .exceptions import ContractError, NumericalError

logger = logging.getLogger(__name__)

# T = S / LAMBDA
LAMBDA = 2.0 / (3.0 + math.sqrt(2.0))
BOX_RATIO = (3.0 + math.sqrt(2.0)) / 2.0

SYNTHESIS_RESIDUE_TOL = 1e-10


class FFTBackend:
    """Complex n-dimensional transforms over the trailing `d` axes"""

    def __init__(self, workers=None):
        self.workers = workers

    def forward(self, x, d):
        axes = tuple(range(-d, 0))
        return scipy.fft.fftn(x, axes=axes, norm="forward", workers=self.workers)

    def inverse(self, x, d):
        axes = tuple(range(-d, 0))
        return scipy.fft.ifftn(x, axes=axes, norm="forward", workers=self.workers)


_backend = FFTBackend()


def get_fft_backend() -> FFTBackend:
    return _backend


def configure_fft(workers=None):
    """Set the number of scipy.fft workers used by every transform in the library"""
    _backend.workers = workers
    logger.debug(f"FFT workers set to {workers}")


@dataclass(frozen=True)
class VelocityGrid:
    d: int
    N: int
    S: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ContractError(f"Velocity dimension must be 2 or 3, got {self.d}")
        if self.N < 2 or self.N % 2:
            raise ContractError(f"N must be an even number >= 2, got {self.N}")
        if not self.S > 0:
            raise ContractError(f"Support radius S must be positive, got {self.S}")

    @property
    def T(self) -> float:
        return BOX_RATIO * self.S

    @property
    def R(self) -> float:
        return 2.0 * self.S

    @property
    def shape(self):
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    @property
    def spacing(self) -> float:
        return 2.0 * self.T / self.N

    @property
    def volume(self) -> float:
        return (2.0 * self.T) ** self.d

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    @cached_property
    def nodes_1d(self) -> np.ndarray:
        return -self.T + self.spacing * np.arange(self.N)

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates, shape (d, N, ..., N)"""
        return np.stack(np.meshgrid(*([self.nodes_1d] * self.d), indexing="ij"))

    @cached_property
    def speed_squared(self) -> np.ndarray:
        return np.sum(self.points**2, axis=0)

    @cached_property
    def modes_1d(self) -> np.ndarray:
        return np.rint(scipy.fft.fftfreq(self.N, d=1.0 / self.N)).astype(np.int64)

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode vectors in storage order, shape (d, N, ..., N)"""
        return np.stack(np.meshgrid(*([self.modes_1d] * self.d), indexing="ij"))

    @cached_property
    def mode_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.modes.astype(float) ** 2, axis=0))

    @cached_property
    def parity(self) -> np.ndarray:
        """(-1)^(k_1 + ... + k_d), relating node -T to the FFT origin"""
        return np.where(np.sum(self.modes, axis=0) % 2 == 0, 1.0, -1.0)

    def with_N(self, N: int) -> "VelocityGrid":
        return VelocityGrid(d=self.d, N=N, S=self.S)

    def describe(self) -> dict:
        return {"d": self.d, "N": self.N, "S": self.S, "T": self.T}

    def require_same(self, other: "VelocityGrid", what: str = "field"):
        if other != self:
            raise ContractError(f"Grid mismatch for {what}: {other} vs {self}")


@dataclass(frozen=True)
class ModeIndex:
    """Integer mode vector k in {-N/2, ..., N/2 - 1}^d"""

    k: tuple

    def position(self, N: int) -> tuple:
        half = N // 2
        for ki in self.k:
            if not -half <= ki < half:
                raise ContractError(f"Mode {self.k} outside the band of N={N}")
        return tuple(int(ki) % N for ki in self.k)

    def flat(self, N: int) -> int:
        return int(np.ravel_multi_index(self.position(N), (N,) * len(self.k)))

    @classmethod
    def from_position(cls, position, N: int) -> "ModeIndex":
        half = N // 2
        return cls(tuple(int(p) - N if p >= half else int(p) for p in position))

    @classmethod
    def from_flat(cls, index: int, N: int, d: int) -> "ModeIndex":
        if not 0 <= index < N**d:
            raise ContractError(f"Flat index {index} outside 0..{N**d - 1}")
        return cls.from_position(np.unravel_index(index, (N,) * d), N)

    def __neg__(self):
        return ModeIndex(tuple(-ki for ki in self.k))


def band_positions(n_trun: int, N: int) -> np.ndarray:
    """Storage positions on an N-grid of the modes {-n_trun, ..., n_trun - 1}"""
    if 2 * n_trun > N:
        raise ContractError(f"Band of half-width {n_trun} does not fit in N={N}")
    return np.concatenate([np.arange(n_trun), np.arange(N - n_trun, N)])


def embed_modes(coeffs: np.ndarray, N: int, d: int) -> np.ndarray:
    """
    Zero-pad an FFT-ordered block over the trailing d axes onto an N-grid.

    Mode k keeps its meaning; entries outside the block's band are zero.
    """
    n_small = coeffs.shape[-1]
    if n_small == N:
        return coeffs.copy()
    idx = band_positions(n_small // 2, N)
    out = np.zeros(coeffs.shape[:-d] + (N,) * d, dtype=complex)
    out[(Ellipsis,) + np.ix_(*([idx] * d))] = coeffs
    return out


def restrict_modes(coeffs: np.ndarray, n_trun: int, d: int) -> np.ndarray:
    """Adjoint of `embed_modes`: keep the modes {-n_trun, ..., n_trun - 1}"""
    N = coeffs.shape[-1]
    idx = band_positions(n_trun, N)
    return coeffs[(Ellipsis,) + np.ix_(*([idx] * d))]


def reflect_modes(coeffs: np.ndarray, d: int) -> np.ndarray:
    """x[k] -> x[-k mod N] over the trailing d axes"""
    axes = tuple(range(-d, 0))
    return np.roll(np.flip(coeffs, axis=axes), 1, axis=axes)


def hermitian_part(coeffs: np.ndarray, d: int) -> np.ndarray:
    """Spectrum of the real part of the synthesized field"""
    return 0.5 * (coeffs + np.conj(reflect_modes(coeffs, d)))


@dataclass
class SpectralField:
    grid: VelocityGrid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.size == self.grid.size and self.coeffs.shape != self.grid.shape:
            self.coeffs = self.coeffs.reshape(self.grid.shape)
        if self.coeffs.shape != self.grid.shape:
            raise ContractError(
                f"Coefficient array of shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    @classmethod
    def zeros(cls, grid: VelocityGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @property
    def flat(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    def at(self, mode: ModeIndex) -> complex:
        return complex(self.coeffs[mode.position(self.grid.N)])

    @property
    def mass(self) -> float:
        return float(self.coeffs.flat[0].real * self.grid.volume)

    def norm(self) -> float:
        """L2(D_T) norm through Parseval"""
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2)))

    def values(self, check: bool = True) -> np.ndarray:
        return synthesize(self, check=check)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def _coerce(self, other):
        if isinstance(other, SpectralField):
            self.grid.require_same(other.grid)
            return other.coeffs
        return other

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + self._coerce(other))

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - self._coerce(other))

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpectralField(self.grid, self.coeffs / scalar)


def analyze(values, grid: VelocityGrid) -> SpectralField:
    """Fourier coefficients f_k = (2T)^-d * integral f exp(-i pi/T k.v) dv, discretely"""
    values = np.asarray(values)
    if values.size != grid.size:
        raise ContractError(
            f"Expected {grid.size} nodal values for grid N={grid.N}, d={grid.d}, got {values.size}"
        )
    values = values.reshape(grid.shape)
    coeffs = grid.parity * _backend.forward(values, grid.d)
    return SpectralField(grid, coeffs)


def synthesize_complex(field: SpectralField) -> np.ndarray:
    return _backend.inverse(field.grid.parity * field.coeffs, field.grid.d)


def synthesize(field: SpectralField, check: bool = True) -> np.ndarray:
    """Evaluate the truncated series at the grid nodes and return its real part"""
    values = synthesize_complex(field)
    if check:
        scale = np.max(np.abs(values)) if values.size else 0.0
        residue = np.max(np.abs(values.imag)) if values.size else 0.0
        if residue > SYNTHESIS_RESIDUE_TOL * max(scale, np.finfo(float).tiny):
            raise NumericalError(
                f"Synthesized field is not real: imaginary residue {residue:.3e} vs magnitude {scale:.3e}"
            )
    return values.real.copy()


def spectral_convolve(a, b, grid: VelocityGrid = None) -> np.ndarray:
    """
    Cyclic convolution (a * b)_k = sum_{l + m = k mod N} a_l b_m over the trailing axes.

    Leading axes broadcast, so a batch of convolutions costs one call.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if grid is not None:
        d = grid.d
        if a.shape[-d:] != grid.shape or b.shape[-d:] != grid.shape:
            raise ContractError(
                f"Convolution operands {a.shape}, {b.shape} do not match grid {grid.shape}"
            )
    else:
        if a.shape[-1] != b.shape[-1] or a.ndim != b.ndim:
            raise ContractError(f"Convolution operands {a.shape} and {b.shape} differ")
        d = a.ndim
    if a.shape[-d:] != b.shape[-d:]:
        raise ContractError(f"Convolution operands {a.shape} and {b.shape} differ")
    return _backend.forward(_backend.inverse(a, d) * _backend.inverse(b, d), d)
