"""Linear-array beam synthesis with multiphase-quantised element weights."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import TWO_PI, PhasorTarget


@dataclass(frozen=True)
class ArrayGeometry:
    n_elements: int = 4
    spacing: float = 0.5  # wavelengths

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("need at least one element")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    @property
    def positions(self) -> np.ndarray:
        """Element positions in wavelengths."""
        return self.spacing * np.arange(self.n_elements)


@dataclass(frozen=True)
class IdealElement:
    pass


@dataclass(frozen=True)
class QuantizedElement:
    M: int = 16
    k: int = 9
    mode: str = "rounding"


@dataclass
class MeasuredElement:
    """Per-element lookup of realised phase/amplitude versus phase code.

    ``tables`` maps element index to an array of rows
    ``(phase_code, realized_phase_deg, realized_amp_db)``.  ``offsets_deg``
    holds the static calibration constant subtracted from each element.
    """

    tables: dict
    phase_bits: int = 9
    offsets_deg: dict = field(default_factory=dict)

    @classmethod
    def from_csv(cls, path, phase_bits=9):
        rows = {}
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                el = int(rec["element"])
                rows.setdefault(el, []).append(
                    (float(rec["phase_code"]), float(rec["realized_phase_deg"]),
                     float(rec["realized_amp_db"])))
        tables = {el: np.array(sorted(r)) for el, r in rows.items()}
        return cls(tables, phase_bits)

    def calibrated(self) -> "MeasuredElement":
        """Copy with each element's mean phase error removed."""
        offs = {}
        for el, tab in self.tables.items():
            err = _wrap_deg(tab[:, 1] - self._ideal_deg(tab[:, 0]))
            offs[el] = float(np.mean(err))
        return MeasuredElement(self.tables, self.phase_bits, offs)

    def _ideal_deg(self, code):
        return np.asarray(code, dtype=float) * 360.0 / (1 << self.phase_bits)

    def realize(self, element: int, target: PhasorTarget) -> complex:
        tab = self.tables.get(element)
        if tab is None:
            raise KeyError(f"no measured table for element {element}")
        span = 1 << self.phase_bits
        code = target.theta / TWO_PI * span
        if tab[0, 0] == 0 and tab[-1, 0] == span - 1:
            # a table covering every code wraps onto itself
            tab = np.vstack([tab, [span, tab[0, 1] + 360.0, tab[0, 2]]])
        lo, hi = tab[0, 0], tab[-1, 0]
        if code < lo - 1e-9 or code > hi + 1e-9:
            raise ValueError(f"phase code {code:.3f} outside table range [{lo}, {hi}] "
                             f"for element {element}")
        # interpolate the error, not the raw phase, so wrap-around is harmless
        perr = _wrap_deg(tab[:, 1] - self._ideal_deg(tab[:, 0]))
        e = float(np.interp(code, tab[:, 0], perr)) - self.offsets_deg.get(element, 0.0)
        amp_db = float(np.interp(code, tab[:, 0], tab[:, 2]))
        phase = target.theta + math.radians(e)
        return target.amplitude * 10 ** (amp_db / 20) * complex(math.cos(phase), math.sin(phase))


def _wrap_deg(x):
    return (np.asarray(x) + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class BeamScenario:
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    steer: float = 0.0  # radians from broadside
    taper: tuple | None = None
    element: object = field(default_factory=IdealElement)

    def __post_init__(self):
        if not abs(self.steer) < math.pi / 2:
            raise ValueError("steering angle must satisfy |theta_s| < pi/2")
        if self.taper is not None:
            t = np.asarray(self.taper, dtype=float)
            if t.shape != (self.geometry.n_elements,):
                raise ValueError("taper length must equal the element count")
            if np.any(t < 0) or np.any(t > 1):
                raise ValueError("taper amplitudes must lie in [0, 1]")

    @property
    def taper_array(self) -> np.ndarray:
        if self.taper is None:
            return np.ones(self.geometry.n_elements)
        return np.asarray(self.taper, dtype=float)


def steering_weights(scenario: BeamScenario):
    """Per-element targets with a progressive phase toward ``scenario.steer``."""
    phase = -TWO_PI * scenario.geometry.positions * math.sin(scenario.steer)
    return [PhasorTarget(a, p) for a, p in zip(scenario.taper_array, phase)]


def apply_element_model(weights, model, phase_offsets_deg=None) -> np.ndarray:
    """Realised complex gain of each element.

    ``phase_offsets_deg`` adds a fixed phase error per element, e.g. to model
    an uncalibrated skew.
    """
    if isinstance(model, IdealElement):
        g = np.array([w.as_complex() for w in weights])
    elif isinstance(model, QuantizedElement):
        z = np.array([w.as_complex() for w in weights])
        g = core.quantize_complex(z, model.M, 1 << model.k, model.mode)
    elif isinstance(model, MeasuredElement):
        g = np.array([model.realize(i, w) for i, w in enumerate(weights)])
    else:
        raise TypeError(f"unknown element model {model!r}")
    if phase_offsets_deg is not None:
        g = g * np.exp(1j * np.radians(np.asarray(phase_offsets_deg, dtype=float)))
    return g


def array_factor(gains, geometry: ArrayGeometry, angles, norm: float | None = None):
    """Complex array factor ``sum_i g_i exp(j 2 pi x_i sin(theta))``.

    Normalised by ``norm`` (default: the number of elements, i.e. the peak of
    a uniform unit-amplitude array).
    """
    angles = np.asarray(angles, dtype=float)
    if np.any(np.abs(angles) > math.pi / 2):
        raise ValueError("angles must lie within [-pi/2, pi/2]")
    gains = np.asarray(gains, dtype=complex)
    if gains.shape != (geometry.n_elements,):
        raise ValueError("one gain per element expected")
    x = geometry.positions
    af = np.exp(1j * TWO_PI * np.multiply.outer(np.sin(angles), x)) @ gains
    if norm is None:
        norm = geometry.n_elements
    return af / norm


def scenario_pattern(scenario: BeamScenario, angles, phase_offsets_deg=None):
    w = steering_weights(scenario)
    g = apply_element_model(w, scenario.element, phase_offsets_deg)
    return array_factor(g, scenario.geometry, angles, norm=float(np.sum(scenario.taper_array)))


def beam_error_metrics(realized, ideal, angles, steer_angles):
    """rms main-beam phase error (deg) and gain error (dB) over a steering sweep.

    ``realized`` and ``ideal`` are ``(n_steer, n_angles)`` complex patterns on
    the shared grid ``angles``; for row ``i`` the error is read at the grid
    point closest to ``steer_angles[i]``.
    """
    realized = np.asarray(realized)
    ideal = np.asarray(ideal)
    angles = np.asarray(angles, dtype=float)
    steer_angles = np.atleast_1d(np.asarray(steer_angles, dtype=float))
    if realized.shape != ideal.shape:
        raise ValueError(f"pattern grids differ: {realized.shape} vs {ideal.shape}")
    if realized.ndim != 2 or realized.shape != (steer_angles.size, angles.size):
        raise ValueError("patterns must be (n_steer, n_angles)")
    idx = np.abs(angles[None, :] - steer_angles[:, None]).argmin(axis=1)
    rows = np.arange(steer_angles.size)
    r = realized[rows, idx]
    i = ideal[rows, idx]
    ph = np.degrees(np.angle(r / i))
    amp = 20 * np.log10(np.abs(r) / np.abs(i))
    return math.sqrt(float(np.mean(ph ** 2))), math.sqrt(float(np.mean(amp ** 2)))


def steering_sweep(scenario: BeamScenario, steer_angles, angles, phase_offsets_deg=None):
    """Realised and ideal patterns for each steering angle of a sweep."""
    real, ideal = [], []
    for s in steer_angles:
        sc = BeamScenario(scenario.geometry, float(s), scenario.taper, scenario.element)
        real.append(scenario_pattern(sc, angles, phase_offsets_deg))
        ideal.append(scenario_pattern(BeamScenario(sc.geometry, sc.steer, sc.taper, IdealElement()),
                                      angles))
    return np.array(real), np.array(ideal)


def write_pattern_csv(path, angles, pattern):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("theta_deg", "mag_db", "phase_deg"))
        mag = 20 * np.log10(np.maximum(np.abs(pattern), 1e-300))
        for a, m, p in zip(np.degrees(angles), mag, np.degrees(np.angle(pattern))):
            w.writerow([repr(float(a)), repr(float(m)), repr(float(p))])


def write_measured_csv(path, tables):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("element", "phase_code", "realized_phase_deg", "realized_amp_db"))
        for el in sorted(tables):
            for code, ph, amp in tables[el]:
                w.writerow([el, int(code), repr(float(ph)), repr(float(amp))])
