"""Multiphase decomposition of complex targets onto adjacent basis phases.

A target ``A * exp(j*theta)`` is written as a non-negative combination of the
two basis phasors that bracket it, ``exp(j*2*pi*m/M)`` and
``exp(j*2*pi*(m+1)/M)``.  Weights are expressed in cell counts, so a target
lying on a basis phase at full scale gets ``n1 = N``.

Two layers live here: small frozen dataclasses for single operating points
and vectorised array functions used by the sweeps and the waveform path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Sector positions closer than this (in units of one sector) to a boundary are
# snapped onto it, so that angles produced by binary phase codes or by a float
# phase sum land in the same sector.
_SNAP = 1e-12

MAX_ENUM_BITS = 12
QUANT_MODES = ("rounding", "exhaustive")


def _check_phase_count(M):
    if int(M) != M or M < 3:
        raise ValueError(f"phase count M must be an integer >= 3, got {M!r}")
    return int(M)


@dataclass(frozen=True)
class BasisPhaseSet:
    """``M`` evenly spaced basis phases covering the unit circle."""

    M: int

    def __post_init__(self):
        _check_phase_count(self.M)

    @property
    def step(self) -> float:
        return TWO_PI / self.M

    @property
    def phases(self) -> np.ndarray:
        return np.arange(self.M) * self.step


@dataclass(frozen=True)
class PhasorTarget:
    """Desired output as normalised amplitude and phase in ``[0, 2*pi)``."""

    amplitude: float
    theta: float = 0.0

    def __post_init__(self):
        a, t = float(self.amplitude), float(self.theta)
        if not (math.isfinite(a) and math.isfinite(t)):
            raise ValueError("amplitude and theta must be finite")
        if a < 0:
            raise ValueError(f"amplitude must be >= 0, got {a}")
        t = math.fmod(t, TWO_PI)
        if t < 0:
            t += TWO_PI
        if t >= TWO_PI:
            t = 0.0
        object.__setattr__(self, "amplitude", a)
        object.__setattr__(self, "theta", t)

    @classmethod
    def from_iq(cls, i: float, q: float) -> "PhasorTarget":
        if i == 0 and q == 0:
            return cls(0.0, 0.0)
        return cls(math.hypot(i, q), math.atan2(q, i))

    @classmethod
    def from_complex(cls, z: complex) -> "PhasorTarget":
        return cls.from_iq(z.real, z.imag)

    @property
    def i(self) -> float:
        return self.amplitude * math.cos(self.theta)

    @property
    def q(self) -> float:
        return self.amplitude * math.sin(self.theta)

    def as_complex(self) -> complex:
        return complex(self.i, self.q)


@dataclass(frozen=True)
class PhaseWeights:
    """Sector index plus weights on phases ``m`` and ``m+1`` (mod M).

    ``n1``/``n2`` are floats for exact decompositions and ints once quantised.
    """

    m: int
    n1: float
    n2: float
    N: int

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError(f"weights must be non-negative, got ({self.n1}, {self.n2})")
        if self.N <= 0:
            raise ValueError("full-scale count N must be positive")

    @property
    def is_integer(self) -> bool:
        return isinstance(self.n1, (int, np.integer)) and isinstance(self.n2, (int, np.integer))

    @property
    def k(self) -> float:
        return math.log2(self.N)

    @property
    def grounded(self):
        """Cells held at ground (neither phase selected)."""
        return self.N - self.n1 - self.n2


# ---------------------------------------------------------------------------
# array kernels


def sector_split(theta, M):
    """Return ``(m, delta)``: sector index and offset of ``theta`` inside it.

    ``theta`` may be any real array; it is wrapped into ``[0, 2*pi)`` first.
    Positions on a boundary belong to the sector that starts there.
    """
    M = _check_phase_count(M)
    step = TWO_PI / M
    theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    x = theta / step
    nearest = np.rint(x)
    on_edge = np.abs(x - nearest) <= _SNAP * np.maximum(1.0, nearest)
    m = np.where(on_edge, nearest, np.floor(x))
    delta = np.where(on_edge, 0.0, theta - m * step)
    m = m.astype(np.int64) % M
    return m, delta


def decompose(amplitude, theta, M, N):
    """Vectorised exact decomposition.

    Returns ``(m, n1, n2)`` arrays with real-valued, non-negative weights.
    Zero-amplitude entries come back as ``(0, 0.0, 0.0)``.
    """
    amplitude = np.asarray(amplitude, dtype=float)
    m, delta = sector_split(theta, M)
    step = TWO_PI / M
    scale = N * amplitude / math.sin(step)
    n1 = scale * np.sin(step - delta)
    n2 = scale * np.sin(delta)
    # delta may exceed step by an ulp after the mod
    n1 = np.maximum(n1, 0.0)
    n2 = np.maximum(n2, 0.0)
    zero = amplitude == 0
    if np.any(zero):
        m = np.where(zero, 0, m)
    return m, n1, n2


def reconstruct(m, n1, n2, M, N):
    """Complex output (full scale = 1) from sector weights."""
    M = _check_phase_count(M)
    step = TWO_PI / M
    m = np.asarray(m)
    return (np.asarray(n1, dtype=float) * np.exp(1j * step * m)
            + np.asarray(n2, dtype=float) * np.exp(1j * step * (m + 1))) / N


def round_weights(n1, n2, N):
    """Per-component round-half-up followed by a proportional clamp.

    When the rounded pair overshoots ``N`` it is rescaled onto the
    ``n1 + n2 == N`` edge with its ratio preserved, which keeps the phase and
    saturates the amplitude.
    """
    q1 = np.floor(np.asarray(n1, dtype=float) + 0.5)
    q2 = np.floor(np.asarray(n2, dtype=float) + 0.5)
    total = q1 + q2
    over = total > N
    if np.any(over):
        c1 = np.floor(q1 * N / np.where(over, total, 1.0) + 0.5)
        q1 = np.where(over, c1, q1)
        q2 = np.where(over, N - c1, q2)
    return q1.astype(np.int64), q2.astype(np.int64)


def nearest_weights(m, n1, n2, M, N, chunk=4096):
    """Nearest reachable state (Euclidean, complex plane) inside each sector.

    For every candidate ``n1`` the best ``n2`` is the clipped rounding of the
    orthogonal projection onto the ``b2`` line.  The distance from the target
    to that line is ``|n1 - n1_exact| * sin(2pi/M)``, a lower bound, so only
    ``n1`` within ``d0 / sin(2pi/M)`` of the exact value can beat the
    rounding-mode state at distance ``d0``.  Ties go to the smaller
    ``n1 + n2`` and then the smaller ``n1``.
    """
    M = _check_phase_count(M)
    step = TWO_PI / M
    s = math.sin(step)
    b2 = complex(math.cos(step), s)
    shape = np.shape(n1)
    e1 = np.asarray(n1, dtype=float).ravel()
    e2 = np.asarray(n2, dtype=float).ravel()
    # target in cell units, rotated into sector 0
    t = e1 + e2 * b2
    r1, r2 = round_weights(e1, e2, N)
    d0 = np.abs(t - (r1 + r2 * b2))
    reach = d0 / s + 1e-9
    lo_all = np.clip(np.ceil(e1 - reach), 0, N).astype(np.int64)
    hi_all = np.clip(np.floor(e1 + reach), 0, N).astype(np.int64)
    out1 = np.empty(t.shape, dtype=np.int64)
    out2 = np.empty(t.shape, dtype=np.int64)
    for lo in range(0, t.size, chunk):
        sl = slice(lo, lo + chunk)
        width = int((hi_all[sl] - lo_all[sl]).max()) + 1
        cand1 = lo_all[sl, None] + np.arange(width)[None, :]
        valid = cand1 <= hi_all[sl, None]
        cand1 = np.minimum(cand1, N).astype(float)
        r = t[sl, None] - cand1
        proj = (r * b2.conjugate()).real
        # half-way ties resolve downwards (smaller sum)
        c2 = np.clip(np.ceil(proj - 0.5), 0.0, N - cand1)
        err = r - c2 * b2
        d2 = np.where(valid, err.real ** 2 + err.imag ** 2, np.inf)
        best = d2.min(axis=1, keepdims=True)
        total = np.where(d2 == best, cand1 + c2, np.inf)
        tmin = total.min(axis=1, keepdims=True)
        pick = np.argmax(total == tmin, axis=1)  # first hit = smallest n1
        rows = np.arange(cand1.shape[0])
        out1[sl] = cand1[rows, pick].astype(np.int64)
        out2[sl] = c2[rows, pick].astype(np.int64)
    return out1.reshape(shape), out2.reshape(shape)


def quantize_weights(m, n1, n2, M, N, mode="rounding"):
    if mode == "rounding":
        q1, q2 = round_weights(n1, n2, N)
    elif mode == "exhaustive":
        q1, q2 = nearest_weights(m, n1, n2, M, N)
    else:
        raise ValueError(f"unknown quantizer mode {mode!r}; expected one of {QUANT_MODES}")
    return np.asarray(m), q1, q2


def quantize_complex(z, M, N, mode="rounding"):
    """decompose -> quantize -> reconstruct for an array of complex targets."""
    z = np.asarray(z, dtype=complex)
    amp = np.abs(z)
    if np.any(amp > 1.0 + 1e-12):
        raise ValueError("targets exceed full scale (|z| > 1)")
    m, n1, n2 = decompose(amp, np.angle(z), M, N)
    m, q1, q2 = quantize_weights(m, n1, n2, M, N, mode)
    return reconstruct(m, q1, q2, M, N)


# ---------------------------------------------------------------------------
# scalar operations on the dataclasses


def decompose_exact(target: PhasorTarget, M: int, N: int) -> PhaseWeights:
    if not isinstance(target, PhasorTarget):
        raise TypeError("target must be a PhasorTarget")
    if target.amplitude > 1.0:
        raise ValueError(f"amplitude {target.amplitude} exceeds full scale")
    m, n1, n2 = decompose(target.amplitude, target.theta, M, N)
    return PhaseWeights(int(m), float(n1), float(n2), int(N))


def reconstruct_exact(weights: PhaseWeights, M: int) -> PhasorTarget:
    z = complex(reconstruct(weights.m, weights.n1, weights.n2, M, weights.N))
    return PhasorTarget.from_complex(z)


def quantize(weights: PhaseWeights, M: int, mode: str = "rounding") -> PhaseWeights:
    m, q1, q2 = quantize_weights(weights.m, weights.n1, weights.n2, M, weights.N, mode)
    return PhaseWeights(int(m), int(q1), int(q2), weights.N)


def enumerate_states(M: int, k: int, m: int = 0):
    """All integer states of sector ``m`` with their amplitude and phase.

    Returns a list of ``(n1, n2, amplitude, phase)`` ordered by total cell
    count, then by ``n2``.  Count is ``(N+1)(N+2)/2``.
    """
    M = _check_phase_count(M)
    if k > MAX_ENUM_BITS:
        raise ValueError(f"k={k} too large to enumerate (limit {MAX_ENUM_BITS})")
    N = 1 << k
    out = []
    for s in range(N + 1):
        n2 = np.arange(s + 1)
        n1 = s - n2
        z = reconstruct(m, n1, n2, M, N)
        amp = np.abs(z)
        ph = np.mod(np.angle(z), TWO_PI)
        ph[amp == 0] = 0.0
        out.extend(zip(n1.tolist(), n2.tolist(), amp.tolist(), ph.tolist()))
    return out


def state_amplitude(n1, n2, M, N):
    """Closed-form reconstructed amplitude, ``sqrt(n1^2 + n2^2 + 2 n1 n2 cos(2pi/M)) / N``."""
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    return np.sqrt(n1 ** 2 + n2 ** 2 + 2 * n1 * n2 * math.cos(TWO_PI / M)) / N
