import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from mpibeam import Detrougher, MultiphaseTransmitter, PhaseWeightEncoder, core


@pytest.fixture
def z():
    rng = np.random.default_rng(0)
    return 0.95 * rng.uniform(0, 1, 300) * np.exp(1j * rng.uniform(-np.pi, np.pi, 300))


def test_params_and_clone():
    tx = MultiphaseTransmitter(n_phases=8, n_bits=6)
    assert tx.get_params() == {"n_phases": 8, "n_bits": 6, "mode": "multiphase",
                               "quant_mode": "rounding"}
    c = clone(tx).set_params(n_bits=7)
    assert c.n_bits == 7 and tx.n_bits == 6


def test_transmitter_matches_core(z):
    y = MultiphaseTransmitter(16, 9).fit_transform(z)
    assert np.array_equal(y, core.quantize_complex(z, 16, 512))
    assert MultiphaseTransmitter(16, 9).fit(z).full_scale_ == 512


def test_real_iq_layout(z):
    X = np.column_stack([z.real, z.imag])
    Y = MultiphaseTransmitter(16, 9).fit_transform(X)
    assert Y.shape == X.shape
    assert np.allclose(Y[:, 0] + 1j * Y[:, 1], core.quantize_complex(z, 16, 512))


def test_pipeline(z):
    pipe = make_pipeline(Detrougher(0.2), MultiphaseTransmitter(16, 9))
    y = pipe.fit_transform(z)
    assert np.abs(y).min() >= 0.2 * np.abs(z).max() - 1 / 512


def test_encoder_round_trip(z):
    enc = PhaseWeightEncoder(16, 9).fit(z)
    W = enc.transform(z)
    assert W.dtype == np.int64 and W.shape == (z.size, 3)
    assert np.allclose(enc.inverse_transform(W), core.quantize_complex(z, 16, 512))
    with pytest.raises(ValueError):
        enc.inverse_transform([[0, 400, 200]])


def test_validation(z):
    with pytest.raises(NotFittedError):
        MultiphaseTransmitter().transform(z)
    with pytest.raises(ValueError):
        MultiphaseTransmitter(n_phases=2).fit(z)
    with pytest.raises(ValueError):
        MultiphaseTransmitter().fit(z * 2)
    with pytest.raises(ValueError):
        MultiphaseTransmitter().fit(np.ones((4, 3)))
    with pytest.raises(ValueError):
        Detrougher(1.5).fit(z)
