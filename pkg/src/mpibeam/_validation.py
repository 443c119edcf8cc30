"""Input checks shared by the estimator wrappers."""
import numpy as np


def check_iq(X, *, max_amplitude=None):
    """Coerce ``X`` to a complex array.

    Accepts complex arrays of any shape or real arrays whose last axis has
    length 2 (I, Q).  Returns ``(z, was_real)`` so callers can hand back the
    caller's representation.
    """
    X = np.asarray(X)
    if np.iscomplexobj(X):
        z = X.astype(complex, copy=False)
        was_real = False
    else:
        if X.ndim == 0 or X.shape[-1] != 2:
            raise ValueError("real input must have a trailing (I, Q) axis of length 2, "
                             f"got shape {X.shape}")
        X = X.astype(float, copy=False)
        z = X[..., 0] + 1j * X[..., 1]
        was_real = True
    if z.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(z)):
        raise ValueError("input contains NaN or infinity")
    if max_amplitude is not None and np.any(np.abs(z) > max_amplitude * (1 + 1e-12)):
        raise ValueError(f"input magnitude exceeds {max_amplitude}")
    return z, was_real


def as_output(z, was_real):
    if was_real:
        return np.stack([z.real, z.imag], axis=-1)
    return z


def check_phase_count(M):
    if not isinstance(M, (int, np.integer)) or M < 3:
        raise ValueError(f"n_phases must be an integer >= 3, got {M!r}")


def check_bits(k, *, allow_none=False):
    if k is None and allow_none:
        return
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"n_bits must be a positive integer, got {k!r}")
