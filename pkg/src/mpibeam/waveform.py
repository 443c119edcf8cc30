"""Modulated-signal path: generation, de-troughing, transmission, metrics."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps

from . import core

QAM_ORDERS = (4, 16, 64, 256)
METRIC_KEYS = ("evm_pct", "aclr_lo_dbc", "aclr_hi_dbc", "papr_db")


@dataclass
class BasebandSignal:
    samples: np.ndarray
    sample_rate: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    def __len__(self):
        return self.samples.size

    def replace(self, samples, **meta):
        return BasebandSignal(samples, self.sample_rate, {**self.meta, **meta})


def qam_constellation(order: int) -> np.ndarray:
    """Square QAM points, Gray-free natural order, unit average power."""
    if order not in QAM_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; expected one of {QAM_ORDERS}")
    side = int(math.isqrt(order))
    levels = np.arange(-side + 1, side, 2, dtype=float)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def rrc_taps(beta: float, sps_: int, span: int = 16) -> np.ndarray:
    """Root-raised-cosine impulse response, unit energy."""
    t = np.arange(-span * sps_ // 2, span * sps_ // 2 + 1) / sps_
    h = np.empty_like(t)
    for i, ti in enumerate(t):
        if ti == 0:
            h[i] = 1 - beta + 4 * beta / math.pi
        elif beta > 0 and abs(abs(4 * beta * ti) - 1) < 1e-12:
            h[i] = beta / math.sqrt(2) * ((1 + 2 / math.pi) * math.sin(math.pi / (4 * beta))
                                         + (1 - 2 / math.pi) * math.cos(math.pi / (4 * beta)))
        else:
            num = math.sin(math.pi * ti * (1 - beta)) + 4 * beta * ti * math.cos(math.pi * ti * (1 + beta))
            h[i] = num / (math.pi * ti * (1 - (4 * beta * ti) ** 2))
    return h / np.sqrt(np.sum(h ** 2))


def channel_filter(sample_rate, pass_edge, stop_edge, atten_db=100.0):
    """Kaiser-window low-pass FIR with the given pass/stop edges in hertz."""
    nyq = sample_rate / 2
    width = (stop_edge - pass_edge) / nyq
    numtaps, beta = sps.kaiserord(atten_db, width)
    numtaps |= 1
    return sps.firwin(numtaps, (pass_edge + stop_edge) / 2, window=("kaiser", beta), fs=sample_rate)


def _normalize_peak(x):
    peak = np.max(np.abs(x))
    return x / peak if peak > 0 else x


def generate(scheme: str = "ofdm", order: int = 64, bandwidth: float = 15e6,
             sample_rate: float = 120e6, seed: int = 0, n_samples: int = 100_000,
             occupied: float = 0.9, subcarrier_spacing: float = 15e3,
             cp_ratio: float = 144 / 2048, rolloff: float = 0.22,
             filtered: bool = True) -> BasebandSignal:
    """Unit-peak QAM single-carrier (``"qam-sc"``) or CP-OFDM baseband.

    OFDM fills ``occupied * bandwidth`` with subcarriers (DC left empty).  With
    ``filtered`` a steep channel filter removes the symbol-boundary splatter
    so that out-of-channel power is set by the transmitter under test rather
    than by the generator.
    """
    if order not in QAM_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; expected one of {QAM_ORDERS}")
    if sample_rate < 4 * bandwidth:
        raise ValueError("sample rate must be at least 4x the bandwidth")
    rng = np.random.default_rng(seed)
    const = qam_constellation(order)
    meta = {"scheme": scheme, "order": order, "bandwidth": bandwidth, "seed": seed}

    if scheme == "ofdm":
        n_fft = int(round(sample_rate / subcarrier_spacing))
        half = int(occupied * bandwidth / subcarrier_spacing) // 2
        if half < 1:
            raise ValueError("occupied bandwidth holds no subcarriers")
        bins = np.r_[np.arange(1, half + 1), np.arange(n_fft - half, n_fft)]
        n_cp = int(round(cp_ratio * n_fft))
        sym_len = n_fft + n_cp
        taps = channel_filter(sample_rate, occupied * bandwidth / 2,
                              bandwidth - occupied * bandwidth / 2) if filtered else None
        guard = 0 if taps is None else taps.size
        n_sym = -(-(n_samples + 2 * guard) // sym_len)
        grid = np.zeros((n_sym, n_fft), dtype=complex)
        grid[:, bins] = const[rng.integers(0, order, size=(n_sym, bins.size))]
        body = np.fft.ifft(grid, axis=1)
        frames = np.concatenate([body[:, -n_cp:], body], axis=1) if n_cp else body
        x = frames.ravel()
        meta.update(n_fft=n_fft, n_subcarriers=int(bins.size), n_cp=n_cp,
                    subcarrier_spacing=subcarrier_spacing, occupied=occupied)
    elif scheme == "qam-sc":
        sps_ = int(round(sample_rate * (1 + rolloff) / bandwidth))
        taps = rrc_taps(rolloff, sps_)
        guard = taps.size
        n_sym = -(-(n_samples + 2 * guard) // sps_)
        idx = rng.integers(0, order, size=n_sym)
        up = np.zeros(n_sym * sps_, dtype=complex)
        up[::sps_] = const[idx]
        x = up
        meta.update(samples_per_symbol=sps_, symbol_rate=sample_rate / sps_, rolloff=rolloff)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    if taps is not None:
        x = np.convolve(x, taps, mode="same")
    x = x[guard:guard + n_samples]
    return BasebandSignal(_normalize_peak(x), sample_rate, meta)


def papr(x) -> float:
    x = np.asarray(x.samples if isinstance(x, BasebandSignal) else x)
    p = np.abs(x) ** 2
    return 10 * math.log10(p.max() / p.mean())


def detrough(sig: BasebandSignal, floor: float) -> BasebandSignal:
    """Raise the envelope to at least ``floor * peak``, keeping the phase.

    Zero samples take phase 0.
    """
    if not 0 <= floor < 1:
        raise ValueError("floor fraction must lie in [0, 1)")
    x = sig.samples
    if floor == 0:
        return sig.replace(x.copy(), detrough=0.0)
    env = np.abs(x)
    target = np.maximum(env, floor * env.max())
    unit = np.where(env > 0, x / np.where(env > 0, env, 1), 1.0)
    return sig.replace(target * unit, detrough=floor)


def _shift(a, n):
    if n == 0:
        return a
    out = np.roll(a, n)
    if n > 0:
        out[:n] = a[0]
    else:
        out[n:] = a[-1]
    return out


def transmit(sig, M: int = 16, k: int | None = 9, mode: str = "multiphase",
             quant_mode: str = "rounding", phase_cutoff: float | None = None,
             ampm_delay: int = 0) -> np.ndarray:
    """Pass baseband samples through an ideal quantised transmitter.

    ``multiphase`` decomposes each sample onto adjacent basis phases.
    ``polar`` quantises the envelope to ``k`` bits and keeps the phase; its
    optional impairments are a low-pass on the unwrapped phase path
    (``phase_cutoff`` as a fraction of Nyquist) and an envelope delay in
    samples.  ``k=None`` disables quantisation.
    """
    x = np.asarray(sig.samples if isinstance(sig, BasebandSignal) else sig, dtype=complex)
    if mode == "multiphase":
        if k is None:
            return x.copy()
        return core.quantize_complex(x, M, 1 << k, quant_mode)
    if mode != "polar":
        raise ValueError(f"unknown transmit mode {mode!r}")
    env = np.abs(x)
    if np.any(env > 1 + 1e-12):
        raise ValueError("samples exceed full scale")
    if k is not None:
        N = 1 << k
        env = np.minimum(np.floor(env * N + 0.5), N) / N
    phase = np.angle(x)
    if phase_cutoff is not None:
        taps = sps.firwin(63, phase_cutoff)
        phase = sps.filtfilt(taps, [1.0], np.unwrap(phase))
    env = _shift(env, ampm_delay)
    return env * np.exp(1j * phase)


def evm(realized, reference) -> float:
    """rms error vector over rms reference, in percent.

    The realised signal is first scaled by the least-squares complex gain.
    """
    y = np.asarray(realized, dtype=complex)
    x = np.asarray(reference, dtype=complex)
    if y.shape != x.shape:
        raise ValueError("realized and reference lengths differ")
    yy = np.vdot(y, y).real
    g = np.vdot(y, x) / yy if yy > 0 else 0.0
    err = g * y - x
    return 100.0 * math.sqrt(np.vdot(err, err).real / np.vdot(x, x).real)


def psd(x, sample_rate: float = 1.0, nperseg: int = 4096, noverlap: int | None = None,
        window="blackmanharris"):
    """Two-sided averaged-periodogram PSD, frequencies ascending.

    Density scaling: the PSD integrates to the mean power of ``x``.
    """
    x = np.asarray(x.samples if isinstance(x, BasebandSignal) else x, dtype=complex)
    nperseg = min(nperseg, x.size)
    f, p = sps.welch(x, fs=sample_rate, window=window, nperseg=nperseg, noverlap=noverlap,
                     return_onesided=False, detrend=False, scaling="density")
    order = np.argsort(f)
    return f[order], p[order]


def band_power(f, p, lo, hi):
    df = f[1] - f[0]
    sel = (f >= lo) & (f <= hi)
    return float(np.sum(p[sel]) * df)


def aclr(x, sample_rate: float, channel_bandwidth: float, offset: float | None = None,
         measurement_bandwidth: float | None = None, nperseg: int = 4096):
    """Lower and upper adjacent-channel power relative to the main channel, dBc."""
    offset = channel_bandwidth if offset is None else offset
    mb = channel_bandwidth if measurement_bandwidth is None else measurement_bandwidth
    f, p = psd(x, sample_rate, nperseg)
    main = band_power(f, p, -mb / 2, mb / 2)
    lo = band_power(f, p, -offset - mb / 2, -offset + mb / 2)
    hi = band_power(f, p, offset - mb / 2, offset + mb / 2)
    return 10 * math.log10(lo / main), 10 * math.log10(hi / main)


def noise_floor(x, sample_rate: float, lo: float, hi: float, nperseg: int = 4096) -> float:
    """Median PSD (dB/Hz) over ``lo <= |f| <= hi``."""
    f, p = psd(x, sample_rate, nperseg)
    sel = (np.abs(f) >= lo) & (np.abs(f) <= hi)
    return 10 * math.log10(float(np.median(p[sel])))


@dataclass
class MetricReport:
    evm_pct: float
    aclr_lo_dbc: float
    aclr_hi_dbc: float
    papr_db: float
    psd: tuple | None = None  # (freq, dB/Hz), not serialised

    def to_json(self) -> str:
        d = {k: v for k, v in asdict(self).items() if k in METRIC_KEYS}
        return json.dumps(d, sort_keys=False)


def measure(realized, reference: BasebandSignal, channel_bandwidth: float,
            measurement_bandwidth: float | None = None, nperseg: int = 4096) -> MetricReport:
    lo, hi = aclr(realized, reference.sample_rate, channel_bandwidth,
                  measurement_bandwidth=measurement_bandwidth, nperseg=nperseg)
    f, p = psd(realized, reference.sample_rate, nperseg)
    return MetricReport(evm(realized, reference.samples), lo, hi, papr(realized),
                        (f, 10 * np.log10(np.maximum(p, 1e-300))))


# ---------------------------------------------------------------------------
# sample files: interleaved little-endian float32 I/Q plus a text sidecar


def write_iq(path, samples, sample_rate: float):
    path = Path(path)
    x = np.asarray(samples, dtype=complex)
    buf = np.empty(2 * x.size, dtype="<f4")
    buf[0::2] = x.real
    buf[1::2] = x.imag
    path.write_bytes(buf.tobytes())
    Path(str(path) + ".hdr").write_text(f"sample_rate={float(sample_rate)!r}\ncount={x.size}\n")


def read_iq(path):
    path = Path(path)
    hdr = {}
    for line in Path(str(path) + ".hdr").read_text().splitlines():
        if line.strip():
            key, _, val = line.partition("=")
            hdr[key.strip()] = val.strip()
    buf = np.frombuffer(path.read_bytes(), dtype="<f4")
    count = int(hdr["count"])
    if buf.size != 2 * count:
        raise ValueError(f"{path}: expected {count} samples, found {buf.size // 2}")
    return (buf[0::2] + 1j * buf[1::2]).astype(complex), float(hdr["sample_rate"])
