import json
import struct

import numpy as np
import pytest

from kw2sent.corpus import TagVocabulary, WordVocabulary, train_perceptron_tagger
from kw2sent.corpus.toy import ToyGrammar
from kw2sent.model import MAGIC, CheckpointError, load_checkpoint, save_checkpoint

from .conftest import tiny_model


@pytest.fixture
def setup():
    vocab = WordVocabulary(["w%d" % i for i in range(16)])
    tags = TagVocabulary()
    model = tiny_model(len(vocab), len(tags), seed=3, dtype=np.float32)
    rng = np.random.default_rng(0)
    for t in model.params.values():
        t.data[:] = rng.standard_normal(t.shape).astype(np.float32)
    return model, vocab, tags


def test_round_trip_bitwise(setup, tmp_path):
    model, vocab, tags = setup
    tagger = train_perceptron_tagger(ToyGrammar().generate(20), epochs=1)
    save_checkpoint(tmp_path / "m.ckpt", model, vocab, tags, tagger, extra={"epoch": 4})
    ck = load_checkpoint(tmp_path / "m.ckpt")
    assert ck.model.params.equal(model.params)
    assert ck.model.config == model.config
    assert (ck.model.vocab_size, ck.model.tag_size) == (model.vocab_size, model.tag_size)
    assert ck.vocab == vocab and ck.tags == tags
    assert ck.tagger.to_dict() == tagger.to_dict()
    assert ck.extra == {"epoch": 4}
    assert not (tmp_path / "m.ckpt.tmp").exists()


def test_round_trip_preserves_generation(setup, tmp_path):
    model, vocab, tags = setup
    save_checkpoint(tmp_path / "m.ckpt", model, vocab, tags)
    loaded = load_checkpoint(tmp_path / "m.ckpt").model
    args = ([5, 9], [tags.id("NOUN")], tags.ids(["DT", "NN", "VBD"]))
    assert loaded.generate_greedy(*args) == model.generate_greedy(*args)


def test_file_layout(setup, tmp_path):
    model, vocab, tags = setup
    save_checkpoint(tmp_path / "m.ckpt", model, vocab, tags)
    raw = (tmp_path / "m.ckpt").read_bytes()
    assert raw[:8] == MAGIC
    (n,) = struct.unpack_from("<I", raw, 8)
    manifest = json.loads(raw[12 : 12 + n])
    assert manifest["flags"] == {"no_template": False}
    first = manifest["params"][0]
    count = int(np.prod(first["shape"]))
    data = np.frombuffer(raw, "<f4", count, 12 + n).reshape(first["shape"])
    assert np.array_equal(data, model.params[first["name"]].data)
    assert len(raw) == 12 + n + 4 * model.params.num_parameters()


def test_truncated_file(setup, tmp_path):
    model, vocab, tags = setup
    save_checkpoint(tmp_path / "m.ckpt", model, vocab, tags)
    raw = (tmp_path / "m.ckpt").read_bytes()
    for cut in (4, 10, 40, len(raw) // 2, len(raw) - 1):
        (tmp_path / "cut.ckpt").write_bytes(raw[:cut])
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "cut.ckpt")


def test_trailing_bytes(setup, tmp_path):
    model, vocab, tags = setup
    save_checkpoint(tmp_path / "m.ckpt", model, vocab, tags)
    with open(tmp_path / "m.ckpt", "ab") as fh:
        fh.write(b"\0\0\0\0")
    with pytest.raises(CheckpointError, match="trailing"):
        load_checkpoint(tmp_path / "m.ckpt")


def test_bad_magic(tmp_path):
    (tmp_path / "x.ckpt").write_bytes(b"KW2SENT0" + b"\0" * 20)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(tmp_path / "x.ckpt")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.ckpt")


def _rewrite_manifest(path, edit):
    raw = path.read_bytes()
    (n,) = struct.unpack_from("<I", raw, 8)
    manifest = json.loads(raw[12 : 12 + n])
    edit(manifest)
    blob = json.dumps(manifest).encode()
    path.write_bytes(MAGIC + struct.pack("<I", len(blob)) + blob + raw[12 + n :])


def test_shape_mismatch(setup, tmp_path):
    model, vocab, tags = setup
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, model, vocab, tags)
    _rewrite_manifest(path, lambda m: m["params"][1].update(shape=[8, 9]))
    with pytest.raises(CheckpointError, match="shapes"):
        load_checkpoint(path)


def test_vocab_size_mismatch(setup, tmp_path):
    model, vocab, tags = setup
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, model, vocab, tags)
    _rewrite_manifest(path, lambda m: m["words"].pop())
    with pytest.raises(CheckpointError, match="vocabular"):
        load_checkpoint(path)


def test_mode_flag_check(tmp_path):
    vocab, tags = WordVocabulary(["a", "b"]), TagVocabulary()
    nt = tiny_model(len(vocab), len(tags), no_template=True, dtype=np.float32)
    save_checkpoint(tmp_path / "nt.ckpt", nt, vocab, tags)
    with pytest.raises(CheckpointError, match="no_template"):
        load_checkpoint(tmp_path / "nt.ckpt", expect_no_template=False)
    assert load_checkpoint(tmp_path / "nt.ckpt", expect_no_template=True).model.no_template
