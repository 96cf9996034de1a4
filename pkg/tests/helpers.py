"""Shared test utilities: finite-difference gradient checks and small fixtures."""

from __future__ import annotations

import numpy as np

from affectfusion.dataio import ALL_MODALITIES, FeatureWindow, Modality
from affectfusion.models import init_fc_params, init_lstm_params

TINY_DIMS = {Modality.RGB: 5, Modality.FLOW: 4, Modality.AUDIO: 3}


def tiny_fc_params(rng, modalities=ALL_MODALITIES, projection_dim=6, hidden_dim=5):
    return init_fc_params(rng, modalities, TINY_DIMS, projection_dim, hidden_dim)


def tiny_lstm_params(rng, modalities=ALL_MODALITIES, projection_dim=6, hidden_dim=4):
    return init_lstm_params(rng, modalities, TINY_DIMS, projection_dim, hidden_dim)


def tiny_inputs(rng, batch=None, dims=TINY_DIMS):
    shape = lambda d: (d,) if batch is None else (batch, d)  # noqa: E731
    return {m: rng.uniform(0.0, 1.0, size=shape(d)) for m, d in dims.items()}


def tiny_window(rng, index=0, dims=TINY_DIMS) -> FeatureWindow:
    xs = tiny_inputs(rng, dims=dims)
    return FeatureWindow(
        index=index,
        rgb=xs.get(Modality.RGB),
        flow=xs.get(Modality.FLOW),
        audio=xs.get(Modality.AUDIO),
        label_valence=0.0,
        label_arousal=0.0,
    )


def central_difference(loss_fn, arrays: dict[str, np.ndarray], name: str, flat_index: int,
                       step: float = 1e-5) -> float:
    """Central finite difference of loss_fn wrt one parameter coordinate.

    Perturbs the shared array in place, so loss_fn must read the same array
    objects on every call.
    """
    arr = arrays[name]
    original = arr.flat[flat_index]
    arr.flat[flat_index] = original + step
    loss_plus = loss_fn()
    arr.flat[flat_index] = original - step
    loss_minus = loss_fn()
    arr.flat[flat_index] = original
    return (loss_plus - loss_minus) / (2.0 * step)


def assert_grads_match(params, loss_and_grads, n_coords: int, rng,
                       step: float = 1e-5, tol: float = 1e-4):
    """Check analytic gradients against central differences at random coordinates.

    Relative error uses max(|analytic|, |numeric|, 1e-6) as denominator so
    genuinely-zero gradients are not judged against finite-difference noise.
    """
    arrays = dict(params.param_items())
    names = list(arrays)
    loss, grads = loss_and_grads()
    assert np.isfinite(loss)
    worst = 0.0
    for _ in range(n_coords):
        name = names[int(rng.integers(len(names)))]
        idx = int(rng.integers(arrays[name].size))
        numeric = central_difference(lambda: loss_and_grads()[0], arrays, name, idx, step)
        analytic = float(grads[name].flat[idx])
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)
        worst = max(worst, rel)
        assert rel < tol, (
            f"gradient mismatch at {name}[{idx}]: analytic={analytic:.3e} "
            f"numeric={numeric:.3e} rel={rel:.3e}"
        )
    return worst
