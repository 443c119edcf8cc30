"""scikit-learn style wrappers so the transmitter model composes in pipelines.

    >>> from sklearn.pipeline import make_pipeline
    >>> tx = make_pipeline(Detrougher(0.1), MultiphaseTransmitter(n_phases=16, n_bits=9))
    >>> y = tx.fit_transform(x)            # doctest: +SKIP

Inputs are complex arrays, or real arrays with a trailing ``(I, Q)`` axis;
outputs use the same representation as the input.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import core, waveform
from ._validation import as_output, check_bits, check_iq, check_phase_count


class MultiphaseTransmitter(TransformerMixin, BaseEstimator):
    """Ideal quantised transmitter applied sample by sample.

    Parameters
    ----------
    n_phases : int
        Number of basis phases ``M``.
    n_bits : int or None
        Array resolution ``k``; ``None`` disables quantisation.
    mode : {"multiphase", "polar"}
    quant_mode : {"rounding", "exhaustive"}
        Multiphase weight quantiser.
    """

    def __init__(self, n_phases=16, n_bits=9, mode="multiphase", quant_mode="rounding"):
        self.n_phases = n_phases
        self.n_bits = n_bits
        self.mode = mode
        self.quant_mode = quant_mode

    def fit(self, X, y=None):
        check_phase_count(self.n_phases)
        check_bits(self.n_bits, allow_none=True)
        if self.mode not in ("multiphase", "polar"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.quant_mode not in core.QUANT_MODES:
            raise ValueError(f"unknown quant_mode {self.quant_mode!r}")
        check_iq(X, max_amplitude=1.0)
        self.basis_phases_ = core.BasisPhaseSet(int(self.n_phases)).phases
        self.full_scale_ = None if self.n_bits is None else 1 << int(self.n_bits)
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_phases_")
        z, was_real = check_iq(X, max_amplitude=1.0)
        out = waveform.transmit(z.ravel(), self.n_phases, self.n_bits, self.mode, self.quant_mode)
        return as_output(out.reshape(z.shape), was_real)


class PhaseWeightEncoder(TransformerMixin, BaseEstimator):
    """Complex targets to integer ``(m, n1, n2)`` rows and back."""

    def __init__(self, n_phases=16, n_bits=9, quant_mode="rounding"):
        self.n_phases = n_phases
        self.n_bits = n_bits
        self.quant_mode = quant_mode

    def fit(self, X, y=None):
        check_phase_count(self.n_phases)
        check_bits(self.n_bits)
        check_iq(X, max_amplitude=1.0)
        self.full_scale_ = 1 << int(self.n_bits)
        return self

    def transform(self, X):
        check_is_fitted(self, "full_scale_")
        z, _ = check_iq(X, max_amplitude=1.0)
        z = z.ravel()
        m, n1, n2 = core.decompose(np.abs(z), np.angle(z), self.n_phases, self.full_scale_)
        m, q1, q2 = core.quantize_weights(m, n1, n2, self.n_phases, self.full_scale_, self.quant_mode)
        return np.column_stack([m, q1, q2]).astype(np.int64)

    def inverse_transform(self, W):
        check_is_fitted(self, "full_scale_")
        W = np.asarray(W)
        if W.ndim != 2 or W.shape[1] != 3:
            raise ValueError("expected rows of (m, n1, n2)")
        if np.any(W[:, 1:] < 0) or np.any(W[:, 1] + W[:, 2] > self.full_scale_):
            raise ValueError("weights violate 0 <= n1 + n2 <= N")
        return core.reconstruct(W[:, 0], W[:, 1], W[:, 2], self.n_phases, self.full_scale_)


class Detrougher(TransformerMixin, BaseEstimator):
    """Envelope floor at ``floor`` times the peak seen during ``fit``."""

    def __init__(self, floor=0.1):
        self.floor = floor

    def fit(self, X, y=None):
        if not 0 <= self.floor < 1:
            raise ValueError("floor must lie in [0, 1)")
        z, _ = check_iq(X)
        self.peak_ = float(np.abs(z).max())
        return self

    def transform(self, X):
        check_is_fitted(self, "peak_")
        z, was_real = check_iq(X)
        env = np.abs(z)
        unit = np.where(env > 0, z / np.where(env > 0, env, 1), 1.0)
        out = np.maximum(env, self.floor * self.peak_) * unit
        return as_output(out, was_real)
