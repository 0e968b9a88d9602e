"""Linear-beta noise schedules, indexed 0..T with the t=0 entry as the clean state."""
from dataclasses import dataclass
from typing import List

import numpy as np

SIGMA_RULES = ("beta", "posterior")


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    sigmas: np.ndarray
    timesteps: np.ndarray
    sigma_rule: str = "beta"

    def __post_init__(self):
        n = len(self.betas)
        for name in ("alphas", "alpha_bars", "sigmas", "timesteps"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"schedule table '{name}' has {len(getattr(self, name))} entries, expected {n}")
        if n < 2:
            raise ValueError("a schedule needs at least one step")

    @property
    def T(self) -> int:
        return len(self.betas) - 1

    def check_index(self, t) -> None:
        t = np.asarray(t)
        if np.any(t < 0) or np.any(t > self.T):
            raise ValueError(f"timestep {t.tolist()} outside the schedule range [0, {self.T}]")

    def identity_errors(self) -> List[str]:
        """Violations of the table identities; empty for a consistent schedule."""
        errors = []
        if self.alpha_bars[0] != 1.0:
            errors.append("alpha_bar[0] != 1")
        steps = np.arange(1, self.T + 1)
        if not np.array_equal(self.alpha_bars[steps], self.alpha_bars[steps - 1] * self.alphas[steps]):
            errors.append("alpha_bar[t] != alpha_bar[t-1] * alpha[t]")
        if not np.array_equal(self.alphas[steps], 1.0 - self.betas[steps]):
            errors.append("alpha[t] != 1 - beta[t]")
        if np.any(np.diff(self.alpha_bars) >= 0):
            errors.append("alpha_bar is not strictly decreasing")
        if np.any(self.sigmas < 0):
            errors.append("negative sigma")
        return errors

    def strided(self, k: int) -> "NoiseSchedule":
        """Every k-th step (always keeping 1 and T), keeping the original timestep labels."""
        if k < 1:
            raise ValueError(f"stride must be at least 1, got {k}")
        if k == 1:
            return self
        keep = np.unique(np.r_[np.arange(1, self.T + 1, k), self.T])
        alpha_bars = np.r_[1.0, self.alpha_bars[keep]]
        return _tables(alpha_bars, self.timesteps[np.r_[0, keep]], self.sigma_rule)


def _tables(alpha_bars: np.ndarray, timesteps: np.ndarray, sigma_rule: str) -> NoiseSchedule:
    if sigma_rule not in SIGMA_RULES:
        raise ValueError(f"sigma_rule must be one of {SIGMA_RULES}, got '{sigma_rule}'")
    alpha_bars = np.asarray(alpha_bars, dtype=np.float64)
    ratios = np.ones_like(alpha_bars)
    ratios[1:] = alpha_bars[1:] / alpha_bars[:-1]
    betas = 1.0 - ratios
    alphas = 1.0 - betas
    # recompute the running product so the identity holds exactly
    alpha_bars = np.cumprod(alphas)
    return _with_sigmas(betas, alphas, alpha_bars, timesteps, sigma_rule)


def _with_sigmas(betas, alphas, alpha_bars, timesteps, sigma_rule) -> NoiseSchedule:
    variance = np.zeros_like(betas)
    if sigma_rule == "beta":
        variance[1:] = betas[1:]
    else:
        variance[1:] = betas[1:] * (1.0 - alpha_bars[:-1]) / (1.0 - alpha_bars[1:])
    return NoiseSchedule(betas, alphas, alpha_bars, np.sqrt(variance),
                         np.asarray(timesteps, dtype=np.int64), sigma_rule)


def make_schedule(T: int = 1000, beta_start: float = 1e-4, beta_end: float = 2e-2,
                  sigma_rule: str = "beta") -> NoiseSchedule:
    """Linear betas over steps 1..T; sigma_t^2 = beta_t or the posterior variance."""
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    if not 0 < beta_start <= beta_end < 1:
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    if sigma_rule not in SIGMA_RULES:
        raise ValueError(f"sigma_rule must be one of {SIGMA_RULES}, got '{sigma_rule}'")
    betas = np.zeros(T + 1)
    betas[1:] = np.linspace(beta_start, beta_end, T)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    return _with_sigmas(betas, alphas, alpha_bars, np.arange(T + 1), sigma_rule)
