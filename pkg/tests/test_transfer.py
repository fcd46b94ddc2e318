
import numpy as np
import pytest

import priortag.tagger as tg
from priortag.autodiff import Tensor
from priortag.transfer import (AlignmentError, CheckpointIntegrityError,
                               CheckpointFormatError, CheckpointTruncatedError,
                               CheckpointVersionError, DEFAULT_REGULARIZED,
                               TransferConfig, align_prior, load_checkpoint, penalty,
                               read_container, save_checkpoint)

from conftest import make_corpus
from numgrad import central_diff, rel_err

ARCH = dict(word_emb_dim=3, char_emb_dim=2, char_hidden=2, feat_emb_dim=2,
            lstm_hidden=3, dropout_lstm=0.0, dropout_input=0.0)


def params_for(rows, seed=0):
    corpus = make_corpus(rows)
    arch = tg.ArchConfig(**ARCH)
    return tg.init_params(arch, tg.build_alphabet_set(corpus), seed=seed)


@pytest.fixture
def source_params():
    return params_for([[("alpha", "A"), ("beta", "B")], [("Gamma", "A"), ("!", "C")]])


def test_checkpoint_round_trip_bitwise(tmp_path, source_params):
    path = tmp_path / "m.ckpt"
    save_checkpoint(source_params, path)
    back = load_checkpoint(path)
    assert back.arch == source_params.arch
    assert back.alphabets.words == source_params.alphabets.words
    assert back.alphabets.chars == source_params.alphabets.chars
    assert back.alphabets.feats == source_params.alphabets.feats
    assert back.alphabets.tags == source_params.alphabets.tags
    assert back.names() == source_params.names()
    for name in back.names():
        assert np.array_equal(back[name].data, source_params[name].data), name
    # saving the loaded model reproduces the file byte for byte
    path2 = tmp_path / "m2.ckpt"
    save_checkpoint(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_manifest_lists_each_tensor_once(tmp_path, source_params):
    path = tmp_path / "m.ckpt"
    save_checkpoint(source_params, path)
    manifest, arrays = read_container(path)
    names = [e["name"] for e in manifest["tensors"]]
    assert len(names) == len(set(names))
    assert set(names) == set(source_params.names())


def test_single_byte_corruption_detected(tmp_path, source_params):
    path = tmp_path / "m.ckpt"
    save_checkpoint(source_params, path)
    raw = bytearray(path.read_bytes())
    # flip one byte deep inside the blob
    pos = len(raw) - 9
    raw[pos] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointIntegrityError):
        load_checkpoint(path)


def test_manifest_corruption_detected(tmp_path, source_params):
    path = tmp_path / "m.ckpt"
    save_checkpoint(source_params, path)
    raw = bytearray(path.read_bytes())
    raw[30] ^= 0x01  # somewhere inside the manifest JSON
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointIntegrityError):
        load_checkpoint(path)


def test_version_mismatch(tmp_path, source_params):
    path = tmp_path / "m.ckpt"
    save_checkpoint(source_params, path)
    raw = bytearray(path.read_bytes())
    raw[4] = 99  # version field follows the 4-byte magic
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointVersionError):
        load_checkpoint(path)


def test_truncation_detected(tmp_path, source_params):
    path = tmp_path / "m.ckpt"
    save_checkpoint(source_params, path)
    raw = path.read_bytes()
    for cut in (4, len(raw) // 2, len(raw) - 5):
        path.write_bytes(raw[:cut])
        with pytest.raises(CheckpointTruncatedError):
            load_checkpoint(path)


def test_bad_magic(tmp_path, source_params):
    path = tmp_path / "m.ckpt"
    save_checkpoint(source_params, path)
    raw = bytearray(path.read_bytes())
    raw[0] = ord("X")
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_shape_manifest_disagreement(tmp_path, source_params):
    path = tmp_path / "m.ckpt"
    save_checkpoint(source_params, path)
    manifest, arrays = read_container(path)
    # rebuild the file with a lying manifest: swap two tensor names
    from priortag.transfer import write_container
    items = [(e["name"], arrays[e["name"]]) for e in manifest["tensors"]]
    items[0], items[1] = (items[1][0], items[0][1]), (items[0][0], items[1][1])
    payload = {k: manifest[k] for k in ("model_type", "arch", "alphabets")}
    write_container(path, payload, items)
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_align_identical_everything_covered(source_params):
    aligned, mask = align_prior(source_params, source_params)
    assert set(aligned) == set(source_params.names())
    for name in aligned:
        assert np.array_equal(aligned[name], source_params[name].data), name
        assert np.array_equal(mask[name], np.ones_like(mask[name])), name


def test_align_excludes_novel_rows_and_tags(source_params):
    target = params_for([[("beta", "B"), ("delta", "HASHTAG")]], seed=5)
    aligned, mask = align_prior(source_params, target)

    words = target.alphabets.words
    w_mask = mask["word_emb"]
    assert np.array_equal(w_mask[0], np.ones(w_mask.shape[1]))  # shared unseen row
    assert np.array_equal(w_mask[words.index("beta")], np.ones(w_mask.shape[1]))
    assert np.array_equal(w_mask[words.index("delta")], np.zeros(w_mask.shape[1]))
    src_words = source_params.alphabets.words
    assert np.array_equal(
        aligned["word_emb"][words.index("beta")],
        source_params["word_emb"].data[src_words.index("beta")],
    )

    tags = target.alphabets.tags
    assert np.array_equal(mask["out_W"][:, tags.index("B")],
                          np.ones(mask["out_W"].shape[0]))
    assert np.array_equal(mask["out_W"][:, tags.index("HASHTAG")],
                          np.zeros(mask["out_W"].shape[0]))
    assert mask["out_b"][tags.index("B")] == 1.0
    assert mask["out_b"][tags.index("HASHTAG")] == 0.0
    # recurrent tensors are fully covered by name
    assert np.array_equal(mask["lstm1_fw_W"], np.ones_like(mask["lstm1_fw_W"]))


def test_align_dim_mismatch_raises(source_params):
    other = dict(ARCH)
    other["lstm_hidden"] = 4
    target = tg.init_params(
        tg.ArchConfig(**other),
        tg.build_alphabet_set(make_corpus([[("alpha", "A")]])),
        seed=0,
    )
    with pytest.raises(AlignmentError):
        align_prior(source_params, target)


def test_align_tensor_shape_mismatch_names_tensor(source_params):
    target = params_for([[("alpha", "A")]], seed=2)
    doctored = source_params.clone()
    doctored.tensors["lstm2_bw_W"] = Tensor(np.zeros((2, 2)))
    with pytest.raises(AlignmentError) as err:
        align_prior(doctored, target)
    assert "lstm2_bw_W" in str(err.value)


def test_align_restricted_patterns(source_params):
    aligned, mask = align_prior(source_params, source_params, patterns=("out_*",))
    assert set(aligned) == {"out_W", "out_b"}


def test_penalty_zero_at_prior_and_zero_lambda(source_params):
    aligned, mask = align_prior(source_params, source_params)
    value, grads = penalty(source_params, aligned, mask, 0.5)
    assert value == 0.0
    assert all(np.array_equal(g, np.zeros_like(g)) for g in grads.values())
    target = params_for([[("alpha", "A"), ("new", "B")]], seed=9)
    aligned, mask = align_prior(source_params, target)
    value, grads = penalty(target, aligned, mask, 0.0)
    assert value == 0.0
    assert all(np.array_equal(g, np.zeros_like(g)) for g in grads.values())


def test_penalty_closed_form_example():
    # lambda=0.001 and W - W_prior = (1, 2): R = 0.005, grad = (0.002, 0.004)
    params = tg.ParamStore(None, None, {"w": Tensor(np.array([1.0, 2.0]))})
    aligned = {"w": np.zeros(2)}
    mask = {"w": np.ones(2)}
    value, grads = penalty(params, aligned, mask, 0.001)
    assert abs(value - 0.005) < 1e-15
    assert np.allclose(grads["w"], [0.002, 0.004], atol=1e-15)


def test_penalty_gradient_finite_differences(source_params):
    target = params_for([[("beta", "B"), ("delta", "D")]], seed=7)
    aligned, mask = align_prior(source_params, target)
    lam = 0.37
    _, grads = penalty(target, aligned, mask, lam)
    for name in ("word_emb", "out_W", "lstm1_fw_W", "char_bw_b"):
        num = central_diff(
            lambda: penalty(target, aligned, mask, lam)[0], target[name].data
        )
        assert rel_err(grads[name], num) < 1e-6, name
    # excluded entries get exactly zero gradient
    words = target.alphabets.words
    assert np.array_equal(grads["word_emb"][words.index("delta")], np.zeros(3))


def test_transfer_config_validation():
    cfg = TransferConfig(0.001)
    assert cfg.patterns == DEFAULT_REGULARIZED
    with pytest.raises(ValueError):
        TransferConfig(-1.0)
    with pytest.raises(ValueError):
        TransferConfig(float("nan"))
