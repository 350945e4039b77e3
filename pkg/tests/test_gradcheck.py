"""Finite-difference checks of the whole model's gradient."""
import numpy as np

import kw2sent.numerics as nx
from kw2sent.model import encode_ids, pad_batch

from .conftest import random_instance, tiny_model

# below this norm a group's gradient is numerically indistinguishable from zero
NEGLIGIBLE = 1e-9


def model_gradcheck(model, batch, h: float = 1e-5) -> dict[str, float]:
    """Relative error ||g - g_num|| / (||g|| + ||g_num||) per parameter group.

    Every entry of every group is perturbed (central differences).
    """
    with nx.precision(np.float64):
        model.params.zero_grad()
        with nx.Tape():
            nx.backward(model.forward_loss(batch))
        errors = {}
        for name, t in model.params.items():
            g = np.zeros_like(t.data) if t.grad is None else t.grad
            num = np.zeros_like(t.data)
            for idx in np.ndindex(t.shape):
                old = t.data[idx]
                with nx.no_grad():
                    t.data[idx] = old + h
                    fp = float(model.forward_loss(batch).data)
                    t.data[idx] = old - h
                    fm = float(model.forward_loss(batch).data)
                t.data[idx] = old
                num[idx] = (fp - fm) / (2 * h)
            a, b = np.linalg.norm(g), np.linalg.norm(num)
            errors[name] = 0.0 if max(a, b) < NEGLIGIBLE else float(np.linalg.norm(g - num) / (a + b))
    return errors


def tie_margin(model, KT, TT) -> float:
    """Smallest gap between the best and runner-up keyword-tag cosine."""
    E = model.params["tag_emb"].data
    En = E / np.linalg.norm(E, axis=1, keepdims=True)
    cos = En[TT] @ En[KT].T
    if cos.shape[1] < 2:
        return np.inf
    top = np.sort(cos, axis=1)
    return float((top[:, -1] - top[:, -2]).min())


def gradcheck_instances(n: int, seed: int = 0, vocab_size=20, tag_size=10, **overrides):
    """``n`` (model, batch) pairs with random tag embeddings, away from cosine ties."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        model = tiny_model(vocab_size, tag_size, seed=int(rng.integers(1 << 30)), init_scale=0.5, **overrides)
        if "tag_emb" in model.params:
            model.params["tag_emb"].data[:] = rng.standard_normal((tag_size, tag_size))
        K, KT, TT, Y = random_instance(rng, vocab_size, tag_size)
        if "tag_emb" in model.params and tie_margin(model, KT, TT) < 1e-3:
            continue
        out.append((model, pad_batch([encode_ids(K, KT, TT, Y)])))
    return out


def test_gradcheck_padded_batch():
    rng = np.random.default_rng(11)
    model = tiny_model(init_scale=0.5)
    model.params["tag_emb"].data[:] = rng.standard_normal((10, 10))
    examples = []
    while len(examples) < 3:
        K, KT, TT, Y = random_instance(rng)
        if tie_margin(model, KT, TT) >= 1e-3:
            examples.append(encode_ids(K, KT, TT, Y))
    errors = model_gradcheck(model, pad_batch(examples, extra_template=1))
    assert max(errors.values()) < 1e-4, errors


def test_gradcheck_no_template():
    for model, batch in gradcheck_instances(2, seed=3, no_template=True):
        errors = model_gradcheck(model, batch)
        assert max(errors.values()) < 1e-4, errors
