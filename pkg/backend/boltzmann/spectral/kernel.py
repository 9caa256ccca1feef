"""
Spectral collision kernels for the variable hard sphere model.

The gain kernel modes are

    G(l, m) = int_{|q| <= 2S} int_{S^{d-1}} C |q|^alpha
              exp(i pi/T q.((1+e)/4 l - (3-e)/4 m))
              exp(-i pi/T |q| w.(1+e)/4 (l+m)) dw dq

and the loss kernel is g(m) = -G(-m, m), so that
Q_k = sum_{l+m=k} (G(l, m) + g(m)) f_l f_m conserves mass for every e.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.special

from . import codec
from .exceptions import ContractError, FormatError, OracleError
from .grid import (
    LAMBDA,
    SpectralField,
    VelocityGrid,
    reflect_modes,
    spectral_convolve,
)

logger = logging.getLogger(__name__)

DIRECT_SIZE_LIMIT = 4096
DEFAULT_CACHE_BYTES = 256 * 1024 * 1024
DEFAULT_CHUNK = 64


def sphere_area(d: int) -> float:
    return 2.0 * math.pi if d == 2 else 4.0 * math.pi


def default_constant(d: int) -> float:
    return 1.0 / sphere_area(d)


@dataclass(frozen=True)
class KernelSpec:
    d: int
    alpha: float = 0.0
    C: float = None
    e: float = 1.0

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ContractError(f"Kernel dimension must be 2 or 3, got {self.d}")
        if not self.alpha > -1:
            raise ContractError(f"VHS exponent must satisfy alpha > -1, got {self.alpha}")
        if not 0.0 <= self.e <= 1.0:
            raise ContractError(f"Restitution coefficient must lie in [0, 1], got {self.e}")
        if self.C is None:
            object.__setattr__(self, "C", default_constant(self.d))
        if not self.C > 0:
            raise ContractError(f"Kernel constant must be positive, got {self.C}")

    @property
    def elastic(self) -> bool:
        return self.e == 1.0

    def describe(self) -> dict:
        return {"d": self.d, "alpha": self.alpha, "C": self.C, "e": self.e}


def bessel_j0(x):
    """Bessel function of the first kind of order 0 (Cephes: series near 0, rational asymptotics beyond)"""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ContractError("bessel_j0 requires finite arguments")
    value = scipy.special.j0(x)
    return float(value) if value.ndim == 0 else value


def sinc(x):
    """sin(x) / x with sinc(0) = 1"""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def angular_factor(d: int, x):
    """int_{S^{d-1}} exp(-i x w.n) dw for a unit vector n"""
    if d == 2:
        return 2.0 * np.pi * scipy.special.j0(x)
    return 4.0 * np.pi * sinc(x)


def _kernel_vectors(l, m, spec: KernelSpec):
    l = np.asarray(l, dtype=float)
    m = np.asarray(m, dtype=float)
    if l.shape != m.shape or l.shape[-1] != spec.d:
        raise ContractError(f"Mode arrays {l.shape} and {m.shape} do not match d={spec.d}")
    e = spec.e
    eta_vec = (1.0 + e) / 2.0 * l - (3.0 - e) / 2.0 * m
    xi_vec = (1.0 + e) / 2.0 * (l + m)
    return eta_vec, xi_vec


def eta_xi(l, m, spec: KernelSpec):
    eta_vec, xi_vec = _kernel_vectors(l, m, spec)
    eta = LAMBDA * np.pi * np.linalg.norm(eta_vec, axis=-1)
    xi = LAMBDA * np.pi * np.linalg.norm(xi_vec, axis=-1)
    return eta, xi


def default_quad_points(eta, xi) -> int:
    top = float(np.max(np.asarray(eta) + np.asarray(xi), initial=0.0))
    return 64 + int(math.ceil(0.75 * top))


def radial_profile_integral(eta, xi, power, d, quad_pts=None, block=8192):
    """
    int_0^1 x^power phi(eta x) phi(xi x) dx by Gauss-Legendre,
    phi = J0 for d = 2 and sinc for d = 3.
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    n = quad_pts or default_quad_points(eta, xi)
    x, w = scipy.special.roots_legendre(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w * x**power
    profile = scipy.special.j0 if d == 2 else sinc

    flat_eta = eta.reshape(-1)
    flat_xi = xi.reshape(-1)
    out = np.empty(flat_eta.shape, dtype=float)
    for start in range(0, flat_eta.size, block):
        stop = start + block
        values = profile(flat_eta[start:stop, None] * x) * profile(flat_xi[start:stop, None] * x)
        out[start:stop] = values @ w
    return out.reshape(eta.shape)


def _closed_form(l, m, spec: KernelSpec, grid: VelocityGrid, quad_pts, d):
    if spec.d != d or grid.d != d:
        raise ContractError(f"Closed form for d={d} called with spec d={spec.d}, grid d={grid.d}")
    eta, xi = eta_xi(l, m, spec)
    power = d - 1 + spec.alpha
    integral = radial_profile_integral(eta, xi, power, d, quad_pts)
    value = spec.C * sphere_area(d) ** 2 * grid.R ** (d + spec.alpha) * integral
    value = value.astype(complex)
    return complex(value.reshape(-1)[0]) if np.ndim(eta) == 0 else value


def g_hat_closed_form_2d(l, m, spec: KernelSpec, grid: VelocityGrid, quad_pts=None):
    """C (2pi)^2 (2S)^(2+alpha) int_0^1 x^(1+alpha) J0(eta x) J0(xi x) dx"""
    return _closed_form(l, m, spec, grid, quad_pts, 2)


def g_hat_closed_form_3d(l, m, spec: KernelSpec, grid: VelocityGrid, quad_pts=None):
    """C (4pi)^2 (2S)^(3+alpha) int_0^1 x^(2+alpha) sinc(eta x) sinc(xi x) dx"""
    return _closed_form(l, m, spec, grid, quad_pts, 3)


def g_hat_closed_form(l, m, spec: KernelSpec, grid: VelocityGrid, quad_pts=None):
    if spec.d == 2:
        return g_hat_closed_form_2d(l, m, spec, grid, quad_pts)
    return g_hat_closed_form_3d(l, m, spec, grid, quad_pts)


def sphere_rule(d: int, n: int):
    """Nodes and weights on S^{d-1}: uniform angles in 2D, Gauss(cos) x uniform azimuth in 3D"""
    if d == 2:
        theta = 2.0 * np.pi * np.arange(n) / n
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        weights = np.full(n, 2.0 * np.pi / n)
        return nodes, weights
    n_polar, n_azimuth = n, 2 * n
    return product_sphere_rule(n_polar, n_azimuth)


def product_sphere_rule(n_polar: int, n_azimuth: int):
    cos_t, w_t = scipy.special.roots_legendre(n_polar)
    sin_t = np.sqrt(1.0 - cos_t**2)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    nodes = np.stack(
        [
            np.outer(sin_t, np.cos(phi)).ravel(),
            np.outer(sin_t, np.sin(phi)).ravel(),
            np.repeat(cos_t, n_azimuth),
        ],
        axis=-1,
    )
    weights = np.repeat(w_t, n_azimuth) * (2.0 * np.pi / n_azimuth)
    return nodes, weights


def g_hat_integral(l, m, spec: KernelSpec, grid: VelocityGrid, tol: float = 1e-8, max_angular: int = 4096):
    """
    Ground-truth kernel mode by nested quadrature of the defining integral.

    Both sphere integrals use angular rules refined until stable to well below
    `tol`; the radial integral is adaptive (scipy.integrate.quad_vec).
    """
    if not tol > 0:
        raise ContractError(f"Oracle tolerance must be positive, got {tol}")
    l = np.asarray(getattr(l, "k", l), dtype=float)
    m = np.asarray(getattr(m, "k", m), dtype=float)
    if l.shape != (spec.d,) or m.shape != (spec.d,):
        raise ContractError(f"Oracle expects single modes of dimension {spec.d}")

    e = spec.e
    q_phase = np.pi / grid.T * ((1.0 + e) / 4.0 * l - (3.0 - e) / 4.0 * m)
    w_phase = np.pi / grid.T * (1.0 + e) / 4.0 * (l + m)
    R = grid.R
    probes = R * np.array([0.25, 0.5, 0.75, 1.0])

    def angular_sums(nodes, weights, r):
        a = (np.exp(1j * np.multiply.outer(r, nodes @ q_phase)) @ weights)
        b = (np.exp(-1j * np.multiply.outer(r, nodes @ w_phase)) @ weights)
        return a * b

    angular_tol = max(1e-3 * tol / max(spec.C * R ** (spec.d + spec.alpha), 1.0), 1e-13)
    n = 8
    nodes, weights = sphere_rule(spec.d, n)
    previous = angular_sums(nodes, weights, probes)
    while True:
        n *= 2
        if n > max_angular:
            raise OracleError(
                f"Angular rule did not converge within {max_angular} nodes for l={l}, m={m}",
                estimate=None,
            )
        nodes, weights = sphere_rule(spec.d, n)
        current = angular_sums(nodes, weights, probes)
        if np.max(np.abs(current - previous)) <= angular_tol:
            break
        previous = current

    power = spec.alpha + spec.d - 1

    def integrand(r):
        value = spec.C * r**power * angular_sums(nodes, weights, np.array([r]))[0]
        return np.array([value.real, value.imag])

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result, error, info = scipy.integrate.quad_vec(
            integrand, 0.0, R, epsabs=tol, epsrel=1e-12, limit=2000, full_output=True
        )
    estimate = complex(result[0], result[1])
    if info.status != 0 or error > tol:
        raise OracleError(
            f"Radial quadrature did not reach tol={tol} (error estimate {error:.3e})",
            estimate=estimate,
        )
    return estimate


@dataclass(eq=False)
class QuadratureRule:
    r_nodes: np.ndarray
    r_weights: np.ndarray
    sigma_nodes: np.ndarray
    sigma_weights: np.ndarray
    label: dict = field(default_factory=dict)

    @classmethod
    def build(cls, d: int, S: float, n_r: int, n_sigma: int = 16, n_polar: int = None) -> "QuadratureRule":
        """Gauss-Legendre radii on [0, 2S]; uniform circle (2D) or Gauss x uniform sphere (3D)"""
        if n_r < 1 or n_sigma < 1:
            raise ContractError(f"Quadrature sizes must be positive, got n_r={n_r}, n_sigma={n_sigma}")
        x, w = scipy.special.roots_legendre(n_r)
        r_nodes = S * (x + 1.0)
        r_weights = S * w
        if d == 2:
            sigma_nodes, sigma_weights = sphere_rule(2, n_sigma)
            label = {"n_r": n_r, "n_sigma": n_sigma}
        else:
            n_polar = n_polar or max(1, n_sigma // 2)
            sigma_nodes, sigma_weights = product_sphere_rule(n_polar, n_sigma)
            label = {"n_r": n_r, "n_sigma": n_sigma, "n_polar": n_polar}
        return cls(r_nodes, r_weights, sigma_nodes, sigma_weights, label)

    @property
    def d(self) -> int:
        return self.sigma_nodes.shape[1]

    @property
    def n_r(self) -> int:
        return self.r_nodes.size

    @property
    def n_sigma(self) -> int:
        return self.sigma_weights.size

    @property
    def n_terms(self) -> int:
        return self.n_r * self.n_sigma


class SeparableKernel:
    """
    Terms (alpha_t, beta_t, gamma_t) of Q_k = sum_t gamma_t(k) ((alpha_t f) * (beta_t f))_k.

    Arrays have shape (M_total, N, ..., N) over the grid's storage order. When
    `folded` is set the last term is the loss fold (alpha = gamma = 1).
    """

    def __init__(self, grid: VelocityGrid, alpha, beta, gamma, meta=None, folded=False):
        self.grid = grid
        self._alpha = np.asarray(alpha, dtype=complex)
        self._beta = np.asarray(beta, dtype=complex)
        self._gamma = np.asarray(gamma, dtype=complex)
        expected = grid.shape
        for name, arr in (("alpha", self._alpha), ("beta", self._beta), ("gamma", self._gamma)):
            if arr.ndim != grid.d + 1 or arr.shape[1:] != expected:
                raise ContractError(f"{name} array of shape {arr.shape} does not match grid {expected}")
        if not self._alpha.shape[0] == self._beta.shape[0] == self._gamma.shape[0]:
            raise ContractError("alpha, beta and gamma must hold the same number of terms")
        self.meta = dict(meta or {})
        self.folded = folded

    @property
    def M_total(self) -> int:
        return self._alpha.shape[0]

    @property
    def n_gain_terms(self) -> int:
        return self.M_total - 1 if self.folded else self.M_total

    def term_block(self, start: int, stop: int):
        return self._alpha[start:stop], self._beta[start:stop], self._gamma[start:stop]

    def blocks(self, chunk: int = DEFAULT_CHUNK, stop: int = None):
        stop = self.M_total if stop is None else stop
        for start in range(0, stop, chunk):
            end = min(start + chunk, stop)
            yield (start, end) + tuple(self.term_block(start, end))

    @property
    def alpha_t(self) -> np.ndarray:
        return self.term_block(0, self.M_total)[0]

    @property
    def beta_t(self) -> np.ndarray:
        return self.term_block(0, self.M_total)[1]

    @property
    def gamma_t(self) -> np.ndarray:
        return self.term_block(0, self.M_total)[2]

    def materialized(self) -> "SeparableKernel":
        alpha, beta, gamma = self.term_block(0, self.M_total)
        return SeparableKernel(self.grid, alpha, beta, gamma, meta=self.meta, folded=self.folded)

    def _pair_sum(self, l_pos, m_pos, stop):
        l_pos = np.asarray(l_pos, dtype=np.int64).reshape(-1, self.grid.d)
        m_pos = np.asarray(m_pos, dtype=np.int64).reshape(-1, self.grid.d)
        k_pos = (l_pos + m_pos) % self.grid.N
        li, mi, ki = tuple(l_pos.T), tuple(m_pos.T), tuple(k_pos.T)
        total = np.zeros(l_pos.shape[0], dtype=complex)
        for _, _, alpha, beta, gamma in self.blocks(stop=stop):
            rows = np.arange(alpha.shape[0])[:, None]
            total += np.sum(
                gamma[(rows,) + ki] * alpha[(rows,) + li] * beta[(rows,) + mi], axis=0
            )
        return total

    def g_fast(self, l_pos, m_pos) -> np.ndarray:
        """G^fast(l, m) over the gain terms, for storage positions l, m"""
        return self._pair_sum(l_pos, m_pos, self.n_gain_terms)

    def pair_weights(self, l_pos, m_pos) -> np.ndarray:
        """Full operator weight of the pair (l, m), fold included"""
        return self._pair_sum(l_pos, m_pos, self.M_total)

    def describe(self) -> dict:
        return {
            **self.meta,
            "grid": self.grid.describe(),
            "M_total": self.M_total,
            "folded": self.folded,
        }


class QuadratureKernel(SeparableKernel):
    """
    G^fast from a radial x angular quadrature, generated in term blocks.

    Term t = a * n_sigma + b uses radius r_a and direction sigma_b. Blocks are
    cached only while the whole kernel fits in `cache_bytes`.
    """

    def __init__(self, spec: KernelSpec, grid: VelocityGrid, rule: QuadratureRule, cache_bytes=DEFAULT_CACHE_BYTES):
        if rule.d != spec.d or grid.d != spec.d:
            raise ContractError(
                f"Quadrature rule (d={rule.d}) and grid (d={grid.d}) must match kernel d={spec.d}"
            )
        self.grid = grid
        self.spec = spec
        self.rule = rule
        self.folded = True
        self.meta = {
            "source": "quadrature",
            "kernel": spec.describe(),
            "rule": {**rule.label, "N_r": rule.n_r, "N_sigma": rule.n_sigma},
        }
        self._cache = {}
        footprint = 3 * (rule.n_terms + 1) * grid.size * 16
        self._use_cache = footprint <= (cache_bytes or 0)
        self._fold_beta = self._build_fold()
        logger.debug(
            f"Quadrature kernel N={grid.N}, d={grid.d}: {self.M_total} terms, cache={'on' if self._use_cache else 'off'}"
        )

    @property
    def M_total(self) -> int:
        return self.rule.n_terms + 1

    def _phases(self, coeff):
        # coeff: (t, d) -> prod_i exp(i coeff_i k_i) over the grid
        grid = self.grid
        out = np.ones((coeff.shape[0],) + grid.shape, dtype=complex)
        for axis in range(grid.d):
            factor = np.exp(1j * np.multiply.outer(coeff[:, axis], grid.modes_1d))
            shape = [coeff.shape[0]] + [1] * grid.d
            shape[axis + 1] = grid.N
            out *= factor.reshape(shape)
        return out

    def _quadrature_block(self, start, stop):
        spec, grid, rule = self.spec, self.grid, self.rule
        t = np.arange(start, stop)
        a, b = np.divmod(t, rule.n_sigma)
        r = rule.r_nodes[a]
        sigma = rule.sigma_nodes[b]
        e = spec.e
        scale = np.pi / grid.T
        alpha = self._phases((scale * (1.0 + e) / 4.0 * r)[:, None] * sigma)
        beta = self._phases((-scale * (3.0 - e) / 4.0 * r)[:, None] * sigma)
        weight = spec.C * r ** (spec.alpha + spec.d - 1) * rule.r_weights[a] * rule.sigma_weights[b]
        arg = np.multiply.outer(scale * (1.0 + e) / 4.0 * r, grid.mode_norm)
        gamma = (weight.reshape((-1,) + (1,) * grid.d) * angular_factor(grid.d, arg)).astype(complex)
        return alpha, beta, gamma

    def _build_fold(self):
        grid = self.grid
        fold = np.zeros(grid.shape, dtype=complex)
        origin = (slice(None),) + (0,) * grid.d
        for start in range(0, self.rule.n_terms, DEFAULT_CHUNK):
            stop = min(start + DEFAULT_CHUNK, self.rule.n_terms)
            alpha, beta, gamma = self._quadrature_block(start, stop)
            weight = gamma[origin].reshape((-1,) + (1,) * grid.d)
            fold -= np.sum(weight * reflect_modes(alpha, grid.d) * beta, axis=0)
            if self._use_cache:
                self._cache[(start, stop)] = (alpha, beta, gamma)
        return fold

    def fold_beta(self) -> np.ndarray:
        """beta of the loss fold: -G^fast(-m, m)"""
        return self._fold_beta.copy()

    def term_block(self, start: int, stop: int):
        n_quad = self.rule.n_terms
        stop = min(stop, self.M_total)
        parts = []
        lo, hi = start, min(stop, n_quad)
        if lo < hi:
            cached = self._cache.get((lo, hi))
            parts.append(cached if cached is not None else self._quadrature_block(lo, hi))
        if stop > n_quad and start <= n_quad:
            ones = np.ones((1,) + self.grid.shape, dtype=complex)
            parts.append((ones, self._fold_beta[None].copy(), ones.copy()))
        if not parts:
            empty = np.zeros((0,) + self.grid.shape, dtype=complex)
            return empty, empty, empty
        if len(parts) == 1:
            return parts[0]
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))

    def blocks(self, chunk: int = DEFAULT_CHUNK, stop: int = None):
        # align with the cached block boundaries
        stop = self.M_total if stop is None else stop
        n_quad = self.rule.n_terms
        for start in range(0, min(stop, n_quad), DEFAULT_CHUNK):
            end = min(start + DEFAULT_CHUNK, n_quad, stop)
            yield (start, end) + tuple(self.term_block(start, end))
        if stop > n_quad:
            yield (n_quad, n_quad + 1) + tuple(self.term_block(n_quad, n_quad + 1))

    def materialized(self) -> SeparableKernel:
        alpha, beta, gamma = self.term_block(0, self.M_total)
        return SeparableKernel(self.grid, alpha, beta, gamma, meta=self.meta, folded=True)


def build_separable_quadrature(spec: KernelSpec, grid: VelocityGrid, rule: QuadratureRule, cache_bytes=DEFAULT_CACHE_BYTES) -> QuadratureKernel:
    return QuadratureKernel(spec, grid, rule, cache_bytes=cache_bytes)


def apply_separable(fhat: np.ndarray, kernel: SeparableKernel, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """
    sum_t gamma_t * conv(alpha_t f, beta_t f) for f of shape (..., N, ..., N).

    Terms are accumulated in fixed block order so results are reproducible.
    """
    grid = kernel.grid
    d = grid.d
    fhat = np.asarray(fhat, dtype=complex)
    if fhat.shape[-d:] != grid.shape:
        raise ContractError(f"Field of shape {fhat.shape} does not match kernel grid {grid.shape}")
    expanded = np.expand_dims(fhat, axis=-d - 1)
    out = np.zeros(fhat.shape, dtype=complex)
    for _, _, alpha, beta, gamma in kernel.blocks(chunk):
        conv = spectral_convolve(alpha * expanded, beta * expanded, grid)
        out += np.sum(gamma * conv, axis=-d - 1)
    return out


def q_fast(f: SpectralField, kernel: SeparableKernel, chunk: int = DEFAULT_CHUNK) -> SpectralField:
    kernel.grid.require_same(f.grid, "q_fast")
    return SpectralField(f.grid, apply_separable(f.coeffs, kernel, chunk))


def _direct_quad_points(spec: KernelSpec, grid: VelocityGrid) -> int:
    reach = grid.N / 2.0 * math.sqrt(grid.d)
    eta_max = LAMBDA * np.pi * 2.0 * reach
    xi_max = LAMBDA * np.pi * (1.0 + spec.e) / 2.0 * 2.0 * reach
    return default_quad_points(eta_max, xi_max)


def q_direct(
    f: SpectralField,
    spec: KernelSpec,
    grid: VelocityGrid = None,
    tol: float = 1e-8,
    *,
    kernel: SeparableKernel = None,
    wrap: bool = False,
    method: str = "closed_form",
    quad_pts: int = None,
) -> SpectralField:
    """
    O(N^{2d}) double sum Q_k = sum_{l+m=k} (G(l, m) + g(m)) f_l f_m.

    Without `wrap` only in-band pairs with in-band sum contribute (Galerkin
    truncation); with `wrap` the sum is cyclic like the FFT path. Passing
    `kernel` replaces G and g by the separable kernel's pair weights.
    """
    grid = grid or f.grid
    grid.require_same(f.grid, "q_direct")
    if grid.size > DIRECT_SIZE_LIMIT:
        raise ContractError(
            f"q_direct is limited to N^d <= {DIRECT_SIZE_LIMIT}, got {grid.size}"
        )
    if kernel is not None:
        kernel.grid.require_same(grid, "q_direct kernel")
    elif spec.d != grid.d:
        raise ContractError(f"Kernel d={spec.d} does not match grid d={grid.d}")
    if method not in ("closed_form", "integral"):
        raise ContractError(f"Unknown kernel evaluation method: {method}")

    N, d = grid.N, grid.d
    half = N // 2
    modes = grid.modes.reshape(d, -1).T
    positions = modes % N
    fhat = f.coeffs.reshape(-1)
    out = np.zeros(grid.size, dtype=complex)
    quad_pts = quad_pts or _direct_quad_points(spec, grid)

    loss = None
    if kernel is None:
        if method == "closed_form":
            loss = -g_hat_closed_form(-modes, modes, spec, grid, quad_pts)
        else:
            loss = np.array([-g_hat_integral(-m, m, spec, grid, tol) for m in modes])

    for i, l in enumerate(modes):
        k = l[None, :] + modes
        if wrap:
            keep = np.ones(len(modes), dtype=bool)
        else:
            keep = np.all((k >= -half) & (k < half), axis=1)
        if not np.any(keep):
            continue
        m_sel = modes[keep]
        k_flat = np.ravel_multi_index(tuple((k[keep] % N).T), grid.shape)
        if kernel is not None:
            l_pos = np.broadcast_to(positions[i], m_sel.shape)
            weights = kernel.pair_weights(l_pos, positions[keep])
        else:
            l_rep = np.broadcast_to(l, m_sel.shape)
            if method == "closed_form":
                gain = g_hat_closed_form(l_rep, m_sel, spec, grid, quad_pts)
            else:
                gain = np.array([g_hat_integral(l, m, spec, grid, tol) for m in m_sel])
            weights = gain + loss[keep]
        np.add.at(out, k_flat, weights * fhat[i] * fhat[keep])

    return SpectralField(grid, out.reshape(grid.shape))


def kernel_document(kernel: SeparableKernel, encoding: str = "decimal") -> dict:
    alpha, beta, gamma = kernel.term_block(0, kernel.M_total)
    return codec.make_document(
        "kernel",
        meta=kernel.meta,
        grid=kernel.grid.describe(),
        folded=kernel.folded,
        M_total=kernel.M_total,
        alpha=codec.encode_array(alpha, encoding),
        beta=codec.encode_array(beta, encoding),
        gamma=codec.encode_array(gamma, encoding),
    )


def load_kernel(document: dict) -> SeparableKernel:
    document = codec.check_document(document, "kernel")
    try:
        info = document["grid"]
        grid = VelocityGrid(d=info["d"], N=info["N"], S=info["S"])
        arrays = [codec.decode_array(document[name]) for name in ("alpha", "beta", "gamma")]
        kernel = SeparableKernel(grid, *arrays, meta=document.get("meta"), folded=document.get("folded", False))
    except (KeyError, TypeError, ContractError) as exc:
        raise FormatError(f"Malformed kernel document: {exc}") from exc
    if kernel.M_total != document.get("M_total", kernel.M_total):
        raise FormatError(f"Kernel declares {document['M_total']} terms, arrays hold {kernel.M_total}")
    return kernel
