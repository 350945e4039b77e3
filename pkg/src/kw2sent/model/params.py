from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from ..corpus.vocab import PAD
from ..numerics import Tensor


@dataclass
class ModelConfig:
    """Layer sizes and model-level switches.

    Defaults are the full-size configuration; ``tag_dim`` always equals the
    tag vocabulary size, so it is not a field here.
    """

    word_dim: int = 500
    keyword_dim: int = 500
    template_hidden: int = 100
    decoder_dim: int = 500
    attention_dim: int = 100
    dropout: float = 0.5
    no_template: bool = False
    max_length: int = 30
    init_scale: float = 0.08
    lambda_weight_init: float = 5.0
    lambda_bias_init: float = -2.5

    def __post_init__(self):
        for name in ("word_dim", "keyword_dim", "template_hidden", "decoder_dim", "attention_dim", "max_length"):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


class ModelParams(dict):
    """Learned parameter tensors keyed by name, in a fixed creation order."""

    def copy(self) -> "ModelParams":
        out = ModelParams()
        for name, t in self.items():
            out[name] = Tensor(t.data.copy(), requires_grad=t.requires_grad, name=name)
        return out

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.items()}

    def zero_grad(self) -> None:
        for t in self.values():
            t.grad = None

    def num_parameters(self) -> int:
        return int(sum(t.size for t in self.values()))

    def equal(self, other: "ModelParams") -> bool:
        """Bitwise equality of names, shapes, dtypes and values."""
        if list(self) != list(other):
            return False
        return all(
            a.data.dtype == b.data.dtype and a.shape == b.shape and a.data.tobytes() == b.data.tobytes()
            for a, b in zip(self.values(), other.values())
        )


def param_shapes(config: ModelConfig, vocab_size: int, tag_size: int) -> dict[str, tuple[int, ...]]:
    Dw, Dk, Ht = config.word_dim, config.keyword_dim, config.template_hidden
    Ds, A, V, T = config.decoder_dim, config.attention_dim, vocab_size, tag_size
    shapes: dict[str, tuple[int, ...]] = {
        "word_emb": (V, Dw),
        "kw_w1": (Dw, Dk),
        "kw_b1": (Dk,),
        "kw_w2": (Dk, Dk),
        "kw_b2": (Dk,),
    }
    if config.no_template:
        shapes["nt_context"] = (Dk,)
    else:
        shapes["tag_emb"] = (T, T)
        for d in ("tf", "tb"):
            shapes.update({f"{d}_wx": (T, 3 * Ht), f"{d}_wh": (Ht, 3 * Ht), f"{d}_bx": (3 * Ht,), f"{d}_bh": (3 * Ht,)})
        shapes.update({"tr_w": (2 * Ht, Dk), "tr_b": (Dk,), "match_w": (1,), "match_b": (1,)})
    shapes.update(
        {
            "att_ws": (Ds, A),
            "att_wk": (Dk, A),
            "att_wt": (Dk, A),
            "att_b": (A,),
            "att_v": (A, 1),
            "mix_w": (2 * Dk, Ds),
            "mix_b": (Ds,),
            "init_w": (2 * Dk, Ds),
            "init_b": (Ds,),
            "dec_wx": (Dw + Ds, 3 * Ds),
            "dec_wh": (Ds, 3 * Ds),
            "dec_bx": (3 * Ds,),
            "dec_bh": (3 * Ds,),
            "ro_w": (Dw + 2 * Ds, Ds),
            "ro_b": (Ds,),
            "out_w": (Ds, V),
            "out_b": (V,),
        }
    )
    return shapes


def init_params(
    config: ModelConfig, vocab_size: int, tag_size: int, rng: np.random.Generator, dtype=np.float32
) -> ModelParams:
    """Uniform(-init_scale, init_scale) everywhere, except: identity tag
    embedding, fixed λ weight/bias, and a zero PAD embedding row."""
    params = ModelParams()
    for name, shape in param_shapes(config, vocab_size, tag_size).items():
        if name == "tag_emb":
            data = np.eye(tag_size)
        elif name == "match_w":
            data = np.full(shape, config.lambda_weight_init)
        elif name == "match_b":
            data = np.full(shape, config.lambda_bias_init)
        else:
            data = rng.uniform(-config.init_scale, config.init_scale, size=shape)
            if name == "word_emb":
                data[PAD] = 0.0
        params[name] = Tensor(np.asarray(data, dtype=dtype), requires_grad=True, name=name)
    return params
