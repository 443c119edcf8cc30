"""Bit-exact golden model of the multiphase logic decoder.

Input codes
    amplitude: unsigned ``k``-bit value; the all-ones code stands for the full
    scale count ``N = 2**k`` so that a pure single-phase full-scale output is
    reachable.  Every other code ``c`` means ``c`` cells.
    phase: unsigned ``phase_bits`` binary angle, ``code / 2**phase_bits`` of a
    turn.  Phase addition wraps modulo ``2**phase_bits``.

Array segmentation
    The ``k``-bit array is split into ``unary_bits`` thermometer-coded MSBs
    (``2**unary_bits - 1`` lines of weight ``2**(k - unary_bits)``) and a
    binary LSB section.  The binary word carries one extra state equal to
    ``2**(k - unary_bits)``, used only at full scale, so every count in
    ``[0, N]`` has exactly one encoding.

Per-slice control words
    ``SEL`` encodes ``n1`` (cells on phase A); ``EN`` encodes ``n1 + n2``
    (cells not grounded).  A cell inside ``SEL`` runs on phase A, inside
    ``EN`` but outside ``SEL`` on phase B, otherwise it is grounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import TWO_PI, PhasorTarget


class DecoderError(RuntimeError):
    pass


def amplitude_value(code: int, k: int) -> int:
    """Cell count selected by a ``k``-bit amplitude code."""
    full = (1 << k) - 1
    if not 0 <= code <= full:
        raise ValueError(f"amplitude code {code} out of range for {k} bits")
    return 1 << k if code == full else code


def amplitude_code(count: int, k: int) -> int:
    N = 1 << k
    if not 0 <= count <= N:
        raise ValueError(f"count {count} out of range [0, {N}]")
    if count == N - 1:
        raise ValueError(f"count {N - 1} is not representable (code reserved for full scale)")
    return (1 << k) - 1 if count == N else count


def phase_angle(code: int, bits: int = 16) -> float:
    if not 0 <= code < (1 << bits):
        raise ValueError(f"phase code {code} out of range for {bits} bits")
    return code * (TWO_PI / (1 << bits))


def select_phases(theta: float, M: int):
    """Indices ``(A, B)`` of the basis phases bracketing ``theta``."""
    m, _ = core.sector_split(theta, M)
    a = int(m)
    return a, (a + 1) % M


def select_phases_code(phase_code: int, M: int, bits: int = 16):
    """Integer-only phase selection for a binary-angle code."""
    a = (phase_code * M) >> bits if M & (M - 1) == 0 else (phase_code * M) // (1 << bits)
    return a, (a + 1) % M


# ---------------------------------------------------------------------------
# beam latch and combining


@dataclass(frozen=True)
class BeamLatch:
    amplitude: float = 1.0
    theta: float = 0.0
    valid: bool = False

    def __post_init__(self):
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValueError("beam amplitude must lie in [0, 1]")

    @classmethod
    def identity(cls) -> "BeamLatch":
        return cls(1.0, 0.0, True)


def combine(beam: BeamLatch, modulation: PhasorTarget, allow_unlatched: bool = False) -> PhasorTarget:
    """Product of amplitudes, sum of phases."""
    if not beam.valid:
        if not allow_unlatched:
            raise DecoderError("no beam weight latched")
        beam = BeamLatch.identity()
    return PhasorTarget(beam.amplitude * modulation.amplitude, beam.theta + modulation.theta)


# ---------------------------------------------------------------------------
# segmented encoding


def encode_weights(n: int, k: int = 16, unary_bits: int = 4):
    """Split a cell count into ``(thermometer_word, binary_word)``.

    ``n == popcount(thermometer_word) * 2**(k - unary_bits) + binary_word``.
    Thermometer line ``i`` is bit ``i`` of the word (lines fill from bit 0).
    """
    if unary_bits < 0 or unary_bits > k:
        raise ValueError("unary_bits must lie in [0, k]")
    N = 1 << k
    n = int(n)
    if not 0 <= n <= N:
        raise ValueError(f"weight {n} out of range [0, {N}]")
    lsb_span = 1 << (k - unary_bits)
    lines = (1 << unary_bits) - 1
    t = min(n // lsb_span, lines)
    return (1 << t) - 1, n - t * lsb_span


def decode_weights(therm: int, binary: int, k: int = 16, unary_bits: int = 4) -> int:
    lsb_span = 1 << (k - unary_bits)
    lines = (1 << unary_bits) - 1
    if therm >> lines:
        raise ValueError("thermometer word wider than the unary section")
    t = bin(therm).count("1")
    if therm != (1 << t) - 1:
        raise ValueError(f"thermometer word {therm:#x} has holes")
    if not 0 <= binary <= lsb_span or (binary == lsb_span and t != lines):
        raise ValueError(f"binary word {binary:#x} invalid with {t} unary lines")
    return t * lsb_span + binary


@dataclass(frozen=True)
class DecoderInput:
    amp_code: int
    phase_code: int
    ctrl: bool = False


@dataclass(frozen=True)
class ElementCommand:
    sel_a: int
    sel_b: int
    therm_sel: int
    therm_en: int
    c2c_sel: int
    c2c_en: int
    n1: int
    n2: int
    N: int

    @property
    def grounded(self) -> int:
        return self.N - self.n1 - self.n2


@dataclass
class DecoderConfig:
    M: int = 16
    k: int = 16
    phase_bits: int = 16
    unary_bits: int = 4
    active_bits: int | None = None  # emulate driving only the top bits of the array
    allow_unlatched: bool = False

    def __post_init__(self):
        core._check_phase_count(self.M)
        if self.active_bits is not None and not 1 <= self.active_bits <= self.k:
            raise ValueError("active_bits must lie in [1, k]")

    @property
    def N(self) -> int:
        return 1 << self.k


def _latch_from(inp: DecoderInput, cfg: DecoderConfig) -> BeamLatch:
    amp = amplitude_value(inp.amp_code, cfg.k) / cfg.N
    return BeamLatch(amp, phase_angle(inp.phase_code, cfg.phase_bits), True)


def _command(target: PhasorTarget, cfg: DecoderConfig) -> ElementCommand:
    bits = cfg.active_bits or cfg.k
    n_eff = 1 << bits
    w = core.quantize(core.decompose_exact(target, cfg.M, n_eff), cfg.M, "rounding")
    shift = cfg.k - bits
    n1, n2 = w.n1 << shift, w.n2 << shift
    therm_sel, c2c_sel = encode_weights(n1, cfg.k, cfg.unary_bits)
    therm_en, c2c_en = encode_weights(n1 + n2, cfg.k, cfg.unary_bits)
    return ElementCommand(w.m, (w.m + 1) % cfg.M, therm_sel, therm_en, c2c_sel, c2c_en,
                          n1, n2, cfg.N)


def decode_step(inp: DecoderInput, latch: BeamLatch, cfg: DecoderConfig):
    """One decoder cycle; returns ``(command, latch)``.

    With the control bit set the input is captured as the beam weight and the
    element outputs that weight alone.  With it clear the stored weight is
    held and combined with the input modulation.
    """
    if inp.ctrl:
        latch = _latch_from(inp, cfg)
        target = PhasorTarget(latch.amplitude, latch.theta)
    else:
        amp = amplitude_value(inp.amp_code, cfg.k) / cfg.N
        if not latch.valid and not cfg.allow_unlatched:
            raise DecoderError("no beam weight latched")
        beam = latch if latch.valid else BeamLatch.identity()
        # phase sum is exact in binary-angle arithmetic
        beam_code = round(beam.theta / TWO_PI * (1 << cfg.phase_bits)) % (1 << cfg.phase_bits)
        code = (beam_code + inp.phase_code) % (1 << cfg.phase_bits)
        target = PhasorTarget(beam.amplitude * amp, phase_angle(code, cfg.phase_bits))
    return _command(target, cfg), latch


@dataclass
class MPDecoder:
    """Stateful decoder for one element; not safe to drive from two threads."""

    cfg: DecoderConfig = field(default_factory=DecoderConfig)
    latch: BeamLatch = field(default_factory=BeamLatch)

    def step(self, inp: DecoderInput) -> ElementCommand:
        cmd, self.latch = decode_step(inp, self.latch, self.cfg)
        return cmd

    def run(self, inputs):
        return [self.step(i) for i in inputs]


# ---------------------------------------------------------------------------
# vector files


def _hex_width(bits):
    return max(1, math.ceil(bits / 4))


def format_vector(inp: DecoderInput, cmd: ElementCommand, cfg: DecoderConfig) -> str:
    """``ctrl amp phase | selA selB therm_sel therm_en c2c_sel c2c_en`` in hex."""
    lines = (1 << cfg.unary_bits) - 1
    bw = cfg.k - cfg.unary_bits + 1  # includes the full-scale state
    mw = max(1, (cfg.M - 1).bit_length())
    fields_in = [
        f"{int(inp.ctrl):x}",
        f"{inp.amp_code:0{_hex_width(cfg.k)}x}",
        f"{inp.phase_code:0{_hex_width(cfg.phase_bits)}x}",
    ]
    fields_out = [
        f"{cmd.sel_a:0{_hex_width(mw)}x}",
        f"{cmd.sel_b:0{_hex_width(mw)}x}",
        f"{cmd.therm_sel:0{_hex_width(lines)}x}",
        f"{cmd.therm_en:0{_hex_width(lines)}x}",
        f"{cmd.c2c_sel:0{_hex_width(bw)}x}",
        f"{cmd.c2c_en:0{_hex_width(bw)}x}",
    ]
    return " ".join(fields_in) + " | " + " ".join(fields_out)


def parse_vector(line: str):
    left, right = line.split("|")
    ctrl, amp, phase = (int(x, 16) for x in left.split())
    out = tuple(int(x, 16) for x in right.split())
    if len(out) != 6:
        raise ValueError(f"malformed vector line: {line!r}")
    return DecoderInput(amp, phase, bool(ctrl)), out


def write_vectors(path, inputs, cfg: DecoderConfig, latch: BeamLatch | None = None):
    dec = MPDecoder(cfg, latch or BeamLatch())
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# M={cfg.M} k={cfg.k} phase_bits={cfg.phase_bits} "
                 f"unary_bits={cfg.unary_bits} active_bits={cfg.active_bits or cfg.k}\n")
        fh.write("# ctrl amp_code phase_code | selA selB therm_sel therm_en c2c_sel c2c_en"
                 " (hex, MSB first)\n")
        for inp in inputs:
            fh.write(format_vector(inp, dec.step(inp), cfg) + "\n")


def random_inputs(rng: np.random.Generator, count: int, cfg: DecoderConfig, beam_every: int = 16):
    """Random stimulus: a beam-latch cycle followed by ``beam_every - 1`` data cycles."""
    amps = rng.integers(0, 1 << cfg.k, size=count)
    phases = rng.integers(0, 1 << cfg.phase_bits, size=count)
    return [DecoderInput(int(a), int(p), i % beam_every == 0)
            for i, (a, p) in enumerate(zip(amps, phases))]
