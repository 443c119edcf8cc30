"""Resolution sweeps: rms phase/amplitude error, state contours, peak power drop."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import TWO_PI

CSV_HEADER = ("M", "k", "amp_dbfs", "rms_phase_err_deg", "rms_amp_err_db")

# floor for an error that is exactly zero, keeps dB values finite
_ERR_FLOOR = 1e-20


def default_amplitude_grid(lo_db=-40.0, hi_db=0.0, step_db=0.25):
    n = int(round((hi_db - lo_db) / step_db))
    return hi_db - step_db * np.arange(n + 1)


@dataclass
class ErrorSweepSpec:
    M_list: list = field(default_factory=lambda: [4, 8, 16])
    k_list: list = field(default_factory=lambda: [9])
    amp_dbfs: np.ndarray = field(default_factory=default_amplitude_grid)
    n_phase: int = 4096
    mode: str = "rounding"

    def __post_init__(self):
        self.amp_dbfs = np.atleast_1d(np.asarray(self.amp_dbfs, dtype=float))
        if not self.M_list or not self.k_list or self.amp_dbfs.size == 0:
            raise ValueError("M list, k list and amplitude grid must be non-empty")
        if np.any(self.amp_dbfs > 0):
            raise ValueError("amplitudes must be <= 0 dBFS")
        if self.n_phase < 1:
            raise ValueError("n_phase must be positive")
        for M in self.M_list:
            core._check_phase_count(M)
        if self.mode not in core.QUANT_MODES:
            raise ValueError(f"unknown quantizer mode {self.mode!r}")


@dataclass
class ErrorSweepResult:
    rows: list  # (M, k, amp_dbfs, rms_phase_err_deg, rms_amp_err_db)

    def select(self, M=None, k=None):
        r = [row for row in self.rows if (M is None or row[0] == M) and (k is None or row[1] == k)]
        arr = np.array([row[2:] for row in r], dtype=float).reshape(-1, 3)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for M, k, a, pe, ae in self.rows:
                w.writerow([M, k, repr(float(a)), repr(float(pe)), repr(float(ae))])


def _cell_errors(M, k, amp_db, thetas, mode):
    N = 1 << k
    a = 10.0 ** (amp_db / 20.0)
    m, n1, n2 = core.decompose(np.full(thetas.shape, a), thetas, M, N)
    m, q1, q2 = core.quantize_weights(m, n1, n2, M, N, mode)
    z = core.reconstruct(m, q1, q2, M, N)
    ph = np.angle(z * np.exp(-1j * thetas))
    rms_ph = math.degrees(math.sqrt(float(np.mean(ph ** 2))))
    rms_amp = math.sqrt(float(np.mean((np.abs(z) - a) ** 2)))
    return rms_ph, 20.0 * math.log10(max(rms_amp, _ERR_FLOOR))


def rms_error_sweep(spec: ErrorSweepSpec, threads: int = 1) -> ErrorSweepResult:
    """Quantisation error statistics over a deterministic phase grid.

    For every ``(M, k, amplitude)`` cell the targets are ``n_phase`` uniformly
    spaced phases at a fixed amplitude.  Phase error is the wrapped angle
    between realised and target phasor; amplitude error is the rms linear
    deviation in dB relative to full scale.
    """
    thetas = TWO_PI * np.arange(spec.n_phase) / spec.n_phase
    cells = [(M, k, float(a)) for M in spec.M_list for k in spec.k_list for a in spec.amp_dbfs]

    def run(cell):
        M, k, a = cell
        return (M, k, a) + _cell_errors(M, k, a, thetas, spec.mode)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(run, cells))
    else:
        rows = [run(c) for c in cells]
    return ErrorSweepResult(rows)


def crossing_level(amp_dbfs, err, threshold):
    """Highest amplitude (dBFS) at which ``err`` first reaches ``threshold``.

    Scans from the top of the grid downwards and interpolates linearly in dB
    between the last point below and the first point at/above threshold.
    Returns ``nan`` if the threshold is never reached.
    """
    order = np.argsort(amp_dbfs)[::-1]
    a = np.asarray(amp_dbfs)[order]
    e = np.asarray(err)[order]
    hit = np.nonzero(e >= threshold)[0]
    if hit.size == 0:
        return math.nan
    i = hit[0]
    if i == 0:
        return float(a[0])
    return float(np.interp(threshold, [e[i - 1], e[i]], [a[i - 1], a[i]]))


def contour_map(M: int, k: int, levels, tol: float = 0.01):
    """States (phase, amplitude) lying on each constant-amplitude contour.

    A state belongs to level ``L`` when its amplitude is within ``tol``
    (relative, absolute for ``L == 0``) of ``L``.  Covers all ``M`` sectors;
    states on sector boundaries are reported once.
    """
    if k > 8:
        raise ValueError("contour enumeration limited to k <= 8")
    states = core.enumerate_states(M, k, 0)
    n1 = np.array([s[0] for s in states])
    n2 = np.array([s[1] for s in states])
    amp = np.array([s[2] for s in states])
    ph = np.array([s[3] for s in states])
    # drop the n1 == 0 edge (it is the next sector's n2 == 0 edge) except the origin
    keep = (n1 > 0) | ((n1 == 0) & (n2 == 0))
    out = {}
    for level in levels:
        level = float(level)
        if level == 0:
            sel = keep & (amp <= tol)
        else:
            sel = keep & (np.abs(amp - level) <= tol * level)
        pts = []
        for m in range(M):
            for p, a, zero in zip(ph[sel], amp[sel], (amp[sel] == 0)):
                if zero:
                    if m == 0:
                        pts.append((0.0, 0.0))
                    continue
                pts.append((float((p + m * TWO_PI / M) % TWO_PI), float(a)))
        out[level] = sorted(pts)
    return out


def sector_states_on_level(M, k, level, tol=1e-12):
    """``(n1, n2)`` pairs of sector 0 within ``tol`` of an amplitude level."""
    return [(n1, n2) for n1, n2, a, _ in core.enumerate_states(M, k, 0) if abs(a - level) <= tol]


def peak_power_drop(M) -> float:
    """Worst-case full-envelope penalty against a polar transmitter, in dB."""
    M = core._check_phase_count(M)
    return -20.0 * math.log10(math.cos(math.pi / M))


def write_contours_csv(path, contours, M, k):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("M", "k", "level", "phase_deg", "amplitude"))
        for level in sorted(contours):
            for p, a in contours[level]:
                w.writerow([M, k, repr(level), repr(math.degrees(p)), repr(a)])
