"""Desk-scale finite-difference solvers for the three benchmark PDEs.

All solvers are deterministic functions of their config (no RNG inside),
return rank-4 field tensors, and validate their stability bounds at
construction time.  Divergence mid-run raises DivergenceError naming the
offending step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DivergenceError
from .field_tensor import FieldTensor

EPS_DIFFUSION = 1e-4  # lower clamp for the sine diffusion family

SOLVER_VERSION = 1


# ---------------------------------------------------------------------------
# 1D Poisson: u''(x) = rho on [0,1], u(0)=u(1)=0
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoissonConfig:
    rho: float  # constant source density
    n_grid: int = 32  # uniform points on [0,1], endpoints included

    def __post_init__(self) -> None:
        if self.n_grid < 3:
            raise ConfigError(f"n_grid must be >= 3, got {self.n_grid}")
        if not math.isfinite(self.rho):
            raise ConfigError("rho must be finite")


def solve_poisson_1d(cfg: PoissonConfig) -> FieldTensor:
    """Steady solution of u'' = rho by direct tridiagonal elimination.

    The second-order stencil is exact for quadratics, so the result equals
    the closed form (rho/2)(x^2 - x) at the grid nodes to rounding error.
    """
    n = cfg.n_grid
    h = 1.0 / (n - 1)
    m = n - 2  # interior unknowns
    rhs = np.full(m, cfg.rho * h * h)

    # Thomas algorithm for the constant stencil [1, -2, 1].
    cp = np.empty(m)
    dp = np.empty(m)
    cp[0] = 1.0 / -2.0
    dp[0] = rhs[0] / -2.0
    for i in range(1, m):
        denom = -2.0 - cp[i - 1]
        cp[i] = 1.0 / denom
        dp[i] = (rhs[i] - dp[i - 1]) / denom
    u = np.zeros(n)
    u[m] = dp[m - 1]
    for i in range(m - 1, 0, -1):
        u[i] = dp[i - 1] - cp[i - 1] * u[i + 1]
    return FieldTensor(u.reshape(1, n, 1, 1))


def poisson_closed_form(rho: float, n_grid: int = 32) -> np.ndarray:
    x = np.linspace(0.0, 1.0, n_grid)
    return 0.5 * rho * (x * x - x)


# ---------------------------------------------------------------------------
# 1D convection-diffusion (modified form with a u*dD/dx reaction term):
#   du/dt = D(x) u_xx + u dD/dx - c u_x   on [0,10], no-flux ends
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvDiffConfig:
    k: float  # diffusion family parameter, D(x) = max(sin(x/(k*pi)), eps)
    c: float  # convection velocity
    mu: float  # Gaussian IC mean
    sigma2: float  # Gaussian IC variance
    n_grid: int = 200
    n_steps: int = 100
    dt: float = 5e-4
    stride: int = 5  # temporal downsampling factor, 100 steps -> 20 frames

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ConfigError(f"k must be positive, got {self.k}")
        if self.sigma2 <= 0:
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2}")
        if self.n_grid < 3:
            raise ConfigError(f"n_grid must be >= 3, got {self.n_grid}")
        if self.n_steps < 1 or self.stride < 1 or self.n_steps % self.stride != 0:
            raise ConfigError("n_steps must be a positive multiple of stride")
        d, _ = diffusion_profile(self.k, self.grid())
        bound = self.dx() ** 2 / (2.0 * float(d.max()) + abs(self.c) * self.dx())
        if self.dt > bound:
            raise ConfigError(
                f"FTCS stability violated: dt={self.dt} exceeds bound {bound:.6g}"
            )

    def dx(self) -> float:
        return 10.0 / (self.n_grid - 1)

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 10.0, self.n_grid)


def diffusion_profile(k: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clamped sine diffusion D(x)=max(sin(x/(k*pi)), eps) and its derivative.

    Where the clamp is active the profile is flat, so dD/dx is zero there.
    """
    raw = np.sin(x / (k * math.pi))
    d = np.maximum(raw, EPS_DIFFUSION)
    dgrad = np.where(raw > EPS_DIFFUSION, np.cos(x / (k * math.pi)) / (k * math.pi), 0.0)
    return d, dgrad


def gaussian_ic(x: np.ndarray, mu: float, sigma2: float) -> np.ndarray:
    return np.exp(-((x - mu) ** 2) / (2.0 * sigma2))


def ftcs_run(
    u0: np.ndarray,
    d: np.ndarray,
    dgrad: np.ndarray,
    c: float,
    dx: float,
    dt: float,
    n_steps: int,
    record_every: int = 1,
) -> np.ndarray:
    """Forward-time centered-space trajectory with mirror-ghost no-flux ends.

    Records the state before steps 0, record_every, 2*record_every, ...,
    i.e. frame 0 is the IC; returns shape (n_steps/record_every, n).
    The run always executes all n_steps steps so late divergence is caught.
    """
    if n_steps % record_every != 0:
        raise ConfigError("n_steps must be a multiple of record_every")
    u = np.asarray(u0, dtype=np.float64).copy()
    frames = np.empty((n_steps // record_every, u.size))
    # overflow is detected via the isfinite check, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n_steps):
            if step % record_every == 0:
                frames[step // record_every] = u
            # mirror ghosts: u[-1] = u[1], u[n] = u[n-2]
            padded = np.concatenate(([u[1]], u, [u[-2]]))
            lap = (padded[2:] - 2.0 * u + padded[:-2]) / (dx * dx)
            grad = (padded[2:] - padded[:-2]) / (2.0 * dx)
            u = u + dt * (d * lap + u * dgrad - c * grad)
            if not np.isfinite(u).all():
                raise DivergenceError(f"convection-diffusion run diverged at step {step + 1}")
    return frames


def solve_convdiff_1d(cfg: ConvDiffConfig) -> FieldTensor:
    """Downsampled FTCS trajectory [n_steps/stride, n_grid, 1, 1]."""
    x = cfg.grid()
    d, dgrad = diffusion_profile(cfg.k, x)
    u0 = gaussian_ic(x, cfg.mu, cfg.sigma2)
    frames = ftcs_run(u0, d, dgrad, cfg.c, cfg.dx(), cfg.dt, cfg.n_steps, cfg.stride)
    return FieldTensor(frames.reshape(frames.shape[0], cfg.n_grid, 1, 1))


# ---------------------------------------------------------------------------
# 2D wave: u_tt = c^2 (u_xx + u_yy) on [-1,1]^2, u=0 on the boundary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WaveConfig:
    amplitude: float  # Gaussian IC sharpness alpha
    x_pos: float  # Gaussian IC center beta
    y_pos: float  # Gaussian IC center gamma
    speed: float = 1.0  # wave speed (0.5 in the shifted deployment regime)
    n_grid: int = 33  # points per axis on [-1,1]
    n_steps: int = 150  # stored frames (state 0 is the IC)
    dt: float = 0.00667

    def __post_init__(self) -> None:
        if self.n_grid < 3:
            raise ConfigError(f"n_grid must be >= 3, got {self.n_grid}")
        if self.n_steps < 2:
            raise ConfigError(f"n_steps must be >= 2, got {self.n_steps}")
        if self.speed <= 0:
            raise ConfigError(f"speed must be positive, got {self.speed}")
        cfl = self.speed * self.dt / self.dx()
        if cfl > 1.0 / math.sqrt(2.0):
            raise ConfigError(
                f"CFL violated: c*dt/dx = {cfl:.4f} exceeds 1/sqrt(2)"
            )

    def dx(self) -> float:
        return 2.0 / (self.n_grid - 1)

    def grid(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.n_grid)


def _laplacian_2d(u: np.ndarray, dx: float) -> np.ndarray:
    """Five-point interior Laplacian; boundary entries are left zero."""
    lap = np.zeros_like(u)
    lap[1:-1, 1:-1] = (
        u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]
    ) / (dx * dx)
    return lap


def leapfrog_run(u0: np.ndarray, speed: float, dx: float, dt: float, n_steps: int) -> np.ndarray:
    """Leapfrog trajectory of n_steps stored states starting from u0 at rest.

    Zero initial velocity gives the Taylor first step
    u^1 = u^0 + (c dt)^2/2 * Lap(u^0); thereafter
    u^{n+1} = 2u^n - u^{n-1} + (c dt)^2 Lap(u^n).
    Dirichlet rows/columns are pinned to exactly zero in every frame.
    """
    u0 = np.asarray(u0, dtype=np.float64).copy()
    u0[0, :] = u0[-1, :] = 0.0
    u0[:, 0] = u0[:, -1] = 0.0
    coef = (speed * dt) ** 2
    frames = np.empty((n_steps,) + u0.shape)
    frames[0] = u0
    prev = u0
    curr = u0 + 0.5 * coef * _laplacian_2d(u0, dx)
    frames[1] = curr
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(2, n_steps):
            nxt = 2.0 * curr - prev + coef * _laplacian_2d(curr, dx)
            if not np.isfinite(nxt).all():
                raise DivergenceError(f"wave run diverged at step {step}")
            frames[step] = nxt
            prev, curr = curr, nxt
    return frames


def solve_wave_2d(cfg: WaveConfig) -> FieldTensor:
    """Trajectory [n_steps, n, n, 1] from the Gaussian bump IC.

    The IC is exp(-alpha((x-beta)^2+(y-gamma)^2)) on the interior; the
    boundary ring is forced to zero so the Dirichlet condition holds in
    every frame, frame 0 included.
    """
    x = cfg.grid()
    xx, yy = np.meshgrid(x, x, indexing="ij")
    u0 = np.exp(-cfg.amplitude * ((xx - cfg.x_pos) ** 2 + (yy - cfg.y_pos) ** 2))
    frames = leapfrog_run(u0, cfg.speed, cfg.dx(), cfg.dt, cfg.n_steps)
    return FieldTensor(frames.reshape(cfg.n_steps, cfg.n_grid, cfg.n_grid, 1))


def wave_energy(frames: np.ndarray, speed: float, dx: float, dt: float) -> np.ndarray:
    """Discrete energy sum(u_t^2 + c^2 |grad u|^2) dx dy at half steps.

    This is the staggered form the leapfrog scheme conserves: u_t is the
    one-step difference (u^{n+1}-u^n)/dt and the gradient term is the
    symmetric product grad(u^n).grad(u^{n+1}) with forward differences.
    Returns one value per half step (n_frames-1 entries).
    """
    a, b = frames[:-1], frames[1:]
    ut = (b - a) / dt
    gxa = (a[:, 1:, :] - a[:, :-1, :]) / dx
    gxb = (b[:, 1:, :] - b[:, :-1, :]) / dx
    gya = (a[:, :, 1:] - a[:, :, :-1]) / dx
    gyb = (b[:, :, 1:] - b[:, :, :-1]) / dx
    cell = dx * dx
    kinetic = (ut**2).sum(axis=(1, 2))
    potential = speed**2 * ((gxa * gxb).sum(axis=(1, 2)) + (gya * gyb).sum(axis=(1, 2)))
    return (kinetic + potential) * cell
