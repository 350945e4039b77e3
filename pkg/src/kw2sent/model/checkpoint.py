"""Binary checkpoint format.

Layout: the 8-byte magic ``KW2SENT1``, a little-endian uint32 manifest
length, a UTF-8 JSON manifest, then every parameter as row-major
little-endian float32 in manifest order.  The manifest carries the model
config, vocabulary sizes, flags, parameter names/shapes and embedded copies
of the word and tag vocabularies (plus the keyword tagger, if any).
"""
from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..corpus.tagger import PerceptronTagger
from ..corpus.tags import TagVocabulary
from ..corpus.vocab import WordVocabulary
from ..numerics import Tensor
from .generator import TemplateGenerator
from .params import ModelConfig, ModelParams, param_shapes

MAGIC = b"KW2SENT1"
_LEN = struct.Struct("<I")


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    model: TemplateGenerator
    vocab: WordVocabulary
    tags: TagVocabulary
    tagger: PerceptronTagger | None = None
    extra: dict | None = None


def save_checkpoint(
    path: str | Path,
    model: TemplateGenerator,
    vocab: WordVocabulary,
    tags: TagVocabulary,
    tagger: PerceptronTagger | None = None,
    extra: dict | None = None,
) -> None:
    """Write atomically (temp file then rename) so a crash never leaves a partial file."""
    manifest = {
        "format": 1,
        "config": model.config.to_dict(),
        "vocab_size": model.vocab_size,
        "tag_size": model.tag_size,
        "flags": {"no_template": model.config.no_template},
        "params": [{"name": n, "shape": list(t.shape)} for n, t in model.params.items()],
        "words": vocab.tokens,
        "tags": tags.to_dict(),
        "tagger": tagger.to_dict() if tagger is not None else None,
        "extra": extra or {},
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_LEN.pack(len(blob)))
        fh.write(blob)
        for t in model.params.values():
            fh.write(np.ascontiguousarray(t.data, dtype="<f4").tobytes())
    os.replace(tmp, path)


def load_checkpoint(path: str | Path, expect_no_template: bool | None = None, dtype=np.float32) -> Checkpoint:
    """Read and validate a checkpoint.

    ``expect_no_template`` rejects a checkpoint whose mode flag differs.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc.strerror}") from None
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic/version header)")
    pos = len(MAGIC)
    if len(raw) < pos + _LEN.size:
        raise CheckpointError(f"{path}: truncated header")
    (n,) = _LEN.unpack_from(raw, pos)
    pos += _LEN.size
    try:
        manifest = json.loads(raw[pos : pos + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CheckpointError(f"{path}: corrupt or truncated manifest") from None
    pos += n

    config = ModelConfig.from_dict(manifest["config"])
    if expect_no_template is not None and config.no_template != expect_no_template:
        mode = "no_template" if config.no_template else "template"
        raise CheckpointError(f"{path}: checkpoint is a {mode} model, which this runner does not accept")
    V, T = int(manifest["vocab_size"]), int(manifest["tag_size"])
    expected = param_shapes(config, V, T)
    listed = {p["name"]: tuple(p["shape"]) for p in manifest["params"]}
    if listed != expected:
        bad = sorted(set(listed.items()) ^ set(expected.items()))
        raise CheckpointError(f"{path}: parameter shapes do not match the config: {bad[:4]}")

    params = ModelParams()
    for entry in manifest["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        end = pos + 4 * count
        if end > len(raw):
            raise CheckpointError(f"{path}: truncated parameter data at {entry['name']}")
        data = np.frombuffer(raw, dtype="<f4", count=count, offset=pos).reshape(shape)
        params[entry["name"]] = Tensor(data.astype(dtype), requires_grad=True, name=entry["name"])
        pos = end
    if pos != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - pos} trailing bytes")

    vocab = WordVocabulary(manifest["words"])
    tags = TagVocabulary.from_dict(manifest["tags"])
    if len(vocab) != V or len(tags) != T:
        raise CheckpointError(f"{path}: embedded vocabularies do not match the manifest sizes")
    tagger = PerceptronTagger.from_dict(manifest["tagger"]) if manifest.get("tagger") else None
    return Checkpoint(TemplateGenerator(params, config, V, T), vocab, tags, tagger, manifest.get("extra") or {})
