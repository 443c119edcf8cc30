"""Ideal electrical model of a multiphase switched-capacitor PA.

Output power follows the class-D style fundamental of the capacitor array,
input power is the charge-redistribution loss of the array, and the drain
efficiency combines the two.  Switch resistance, finite edges and matching
loss are not modelled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import TWO_PI, PhaseWeights

_Q_TOL = 1e-9


class UndefinedEfficiencyError(ValueError):
    """Raised for operating points that deliver no output power."""


@dataclass(frozen=True)
class ScpaConfig:
    """Circuit parameters of one MP-SCPA.

    Supply either ``c_unit`` (design mode) or ``q_nw`` (analysis mode).  When
    only ``q_nw`` is given the unit capacitor is derived from it; when both
    are given they must agree to 1e-9 relative.
    """

    v_dd: float = 1.4
    r_opt: float = 6.25
    k: int = 9
    M: int = 16
    f0: float = 1.75e9
    c_unit: float | None = None
    q_nw: float | None = None
    v_dd2: float | None = field(default=None, compare=False)  # metadata only

    def __post_init__(self):
        core._check_phase_count(self.M)
        for name in ("v_dd", "r_opt", "f0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.c_unit is None and self.q_nw is None:
            raise ValueError("supply c_unit or q_nw")
        if self.c_unit is not None and not self.c_unit > 0:
            raise ValueError("c_unit must be strictly positive")
        if self.q_nw is not None and not self.q_nw > 0:
            raise ValueError("q_nw must be strictly positive")
        if self.c_unit is None:
            c = 1.0 / (TWO_PI * self.N * self.q_nw * self.r_opt * self.f0)
            object.__setattr__(self, "c_unit", c)
        elif self.q_nw is not None:
            derived = _q_from(self.N, self.c_unit, self.r_opt, self.f0)
            if abs(derived - self.q_nw) > _Q_TOL * derived:
                raise ValueError(
                    f"q_nw={self.q_nw} disagrees with value {derived} derived from c_unit")

    @property
    def N(self) -> int:
        return 1 << int(self.k)

    @property
    def c_total(self) -> float:
        return self.N * self.c_unit


def _q_from(N, c_unit, r_opt, f0):
    return 1.0 / (TWO_PI * N * c_unit * r_opt * f0)


def network_q(cfg: ScpaConfig) -> float:
    return _q_from(cfg.N, cfg.c_unit, cfg.r_opt, cfg.f0)


def series_inductance(cfg: ScpaConfig) -> float:
    """Inductance resonating with the whole array at ``f0``."""
    return 1.0 / (cfg.N * cfg.c_unit * (TWO_PI * cfg.f0) ** 2)


def _pair(weights):
    if isinstance(weights, PhaseWeights):
        return weights.n1, weights.n2
    n1, n2 = weights
    return n1, n2


def _power_term(n1, n2, M):
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    return n1 ** 2 + n2 ** 2 + 2 * n1 * n2 * math.cos(TWO_PI / M)


def _loss_term(n1, n2, N):
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    return n1 * (N - n1) + n2 * (N - n2)


def output_voltage(cfg: ScpaConfig, weights):
    """Fundamental amplitude across ``R_opt`` in volts."""
    n1, n2 = _pair(weights)
    return 2 * cfg.v_dd / math.pi * np.sqrt(_power_term(n1, n2, cfg.M)) / cfg.N


def output_power(cfg: ScpaConfig, weights):
    n1, n2 = _pair(weights)
    return (2 / math.pi ** 2) * _power_term(n1, n2, cfg.M) / cfg.N ** 2 * cfg.v_dd ** 2 / cfg.r_opt


def input_capacitance(cfg: ScpaConfig, weights):
    """Effective switched capacitance per RF cycle.

    Each clock edge steps ``n`` cells against the remaining ``N - n`` cells,
    which behaves like ``n(N-n)/N`` unit capacitors in series.  The two
    phase groups switch on distinct edges, so their losses add without a
    cross term.
    """
    n1, n2 = _pair(weights)
    return _loss_term(n1, n2, cfg.N) / cfg.N ** 2 * cfg.c_total


def input_power(cfg: ScpaConfig, weights):
    return input_capacitance(cfg, weights) * cfg.v_dd ** 2 * cfg.f0


def _resolve_q(cfg, q_nw):
    if q_nw is None:
        return network_q(cfg)
    derived = network_q(cfg)
    if abs(derived - q_nw) > _Q_TOL * derived:
        raise ValueError(f"q_nw={q_nw} disagrees with configuration value {derived}")
    return float(q_nw)


def drain_efficiency(cfg: ScpaConfig, weights, q_nw: float | None = None):
    """Closed-form ideal drain efficiency.

    ``eta = 1 / (1 + pi * [n1(N-n1) + n2(N-n2)] / (4 Q S))`` where ``S`` is
    the power term ``n1^2 + n2^2 + 2 n1 n2 cos(2pi/M)``.
    """
    q = _resolve_q(cfg, q_nw)
    n1, n2 = _pair(weights)
    s = _power_term(n1, n2, cfg.M)
    if np.any(s <= 0):
        raise UndefinedEfficiencyError("efficiency is undefined at zero output power")
    return 1.0 / (1.0 + math.pi * _loss_term(n1, n2, cfg.N) / (4.0 * q * s))


def efficiency_from_powers(cfg: ScpaConfig, weights):
    """Efficiency composed from the output and input power models."""
    p_out = output_power(cfg, weights)
    if np.any(p_out <= 0):
        raise UndefinedEfficiencyError("efficiency is undefined at zero output power")
    return p_out / (p_out + input_power(cfg, weights))


@dataclass(frozen=True)
class OperatingPoint:
    weights: PhaseWeights
    v_out: float
    p_out: float
    c_in: float
    p_in: float
    eta: float

    @classmethod
    def evaluate(cls, cfg: ScpaConfig, weights: PhaseWeights) -> "OperatingPoint":
        p_out = float(output_power(cfg, weights))
        eta = float(drain_efficiency(cfg, weights)) if p_out > 0 else 0.0
        return cls(weights, float(output_voltage(cfg, weights)), p_out,
                   float(input_capacitance(cfg, weights)), float(input_power(cfg, weights)), eta)


def efficiency_curve(cfg: ScpaConfig, amplitudes, thetas, mode: str | None = "rounding"):
    """Mean efficiency over phase at each target amplitude.

    Returns a structured array with fields ``amplitude``, ``p_out_db``
    (mean realised output power relative to single-phase full scale) and
    ``eta`` (mean over the phase grid of states with non-zero output).
    ``mode=None`` skips quantisation and uses the exact weights.
    """
    amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if amplitudes.size == 0 or thetas.size == 0:
        raise ValueError("amplitude and theta grids must be non-empty")
    if np.any(amplitudes < 0) or np.any(amplitudes > 1):
        raise ValueError("amplitudes must lie in [0, 1]")
    M, N = cfg.M, cfg.N
    q = network_q(cfg)
    p_peak = float(output_power(cfg, (N, 0)))
    out = np.zeros(amplitudes.size, dtype=[("amplitude", float), ("p_out_db", float), ("eta", float)])
    for i, a in enumerate(amplitudes):
        m, n1, n2 = core.decompose(np.full(thetas.shape, a), thetas, M, N)
        if mode is not None:
            m, n1, n2 = core.quantize_weights(m, n1, n2, M, N, mode)
        else:
            s = n1 + n2
            over = s > N
            n1 = np.where(over, n1 * N / np.where(over, s, 1), n1)
            n2 = np.where(over, n2 * N / np.where(over, s, 1), n2)
        p = output_power(cfg, (n1, n2))
        live = p > 0
        mean_p = float(np.mean(p))
        out[i]["amplitude"] = a
        out[i]["p_out_db"] = 10 * math.log10(mean_p / p_peak) if mean_p > 0 else -math.inf
        if np.any(live):
            eta = drain_efficiency(cfg, (n1[live], n2[live]), q)
            out[i]["eta"] = float(np.mean(eta))
        else:
            out[i]["eta"] = math.nan
    return out
