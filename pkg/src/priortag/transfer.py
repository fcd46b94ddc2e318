"""Prior-weight domain adaptation: checkpointing of source-trained weights and
the penalty lambda * ||W - W_prior||^2 with string-keyed, mask-excluded alignment.

Checkpoint container: a fixed header (magic, version, manifest length, manifest
CRC32), a JSON manifest (names, shapes, offsets, checksums, alphabets, config),
and one packed little-endian float64 blob. Round trips are byte-exact and any
single-byte corruption is detected.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from dataclasses import asdict, dataclass
from fnmatch import fnmatchcase

import numpy as np

from .autodiff import Tensor
from .corpus import TagSet
from .features import FEATURE_TYPES, Alphabet, FeatureAlphabets
from .tagger import AlphabetSet, ArchConfig, ParamStore, expected_shapes

MAGIC = b"PTCK"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQI")  # magic, version, manifest length, manifest crc32

# Everything the adaptation penalty covers by default: both main LSTMs, the
# char LSTM, every embedding matrix, and the output layer.
DEFAULT_REGULARIZED = (
    "word_emb",
    "char_emb",
    "feat_emb_*",
    "char_fw_*",
    "char_bw_*",
    "lstm1_*",
    "lstm2_*",
    "out_*",
)

# A prior is a source-trained ParamStore: same tensor naming scheme, its own alphabets.
PriorWeights = ParamStore


class CheckpointError(Exception):
    """Base class for checkpoint read/write failures."""


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointIntegrityError(CheckpointError):
    pass


class CheckpointFormatError(CheckpointError):
    pass


class AlignmentError(ValueError):
    """Prior and target models disagree structurally."""


@dataclass
class TransferConfig:
    lambda_: float
    patterns: tuple[str, ...] = DEFAULT_REGULARIZED

    def __post_init__(self):
        if not np.isfinite(self.lambda_) or self.lambda_ < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lambda_}")
        self.patterns = tuple(self.patterns)


def write_container(path, payload: dict, arrays) -> None:
    """Write `arrays` (ordered (name, ndarray) pairs) plus payload metadata."""
    entries = []
    blobs = []
    offset = 0
    seen = set()
    for name, arr in arrays:
        if name in seen:
            raise CheckpointFormatError(f"duplicate tensor name: {name}")
        seen.add(name)
        raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append(
            {
                "name": name,
                "shape": list(np.shape(arr)),
                "offset": offset,
                "crc32": zlib.crc32(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    blob = b"".join(blobs)
    manifest = dict(payload)
    manifest["format_version"] = FORMAT_VERSION
    manifest["tensors"] = entries
    manifest["blob_len"] = len(blob)
    manifest["blob_sha256"] = hashlib.sha256(blob).hexdigest()
    mbytes = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, len(mbytes), zlib.crc32(mbytes)))
        fh.write(mbytes)
        fh.write(blob)


def read_container(path):
    """Read and verify a container; returns (manifest, {name: float64 array})."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise CheckpointTruncatedError(f"{path}: file shorter than the fixed header")
    magic, version, mlen, mcrc = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: format version {version}, expected {FORMAT_VERSION}"
        )
    if len(data) < _HEADER.size + mlen:
        raise CheckpointTruncatedError(f"{path}: truncated manifest")
    mbytes = data[_HEADER.size : _HEADER.size + mlen]
    if zlib.crc32(mbytes) != mcrc:
        raise CheckpointIntegrityError(f"{path}: manifest checksum mismatch")
    try:
        manifest = json.loads(mbytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"{path}: unreadable manifest: {exc}") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: manifest format_version {manifest.get('format_version')}"
        )
    blob = data[_HEADER.size + mlen :]
    blob_len = manifest.get("blob_len")
    if len(blob) < blob_len:
        raise CheckpointTruncatedError(
            f"{path}: blob holds {len(blob)} bytes, manifest declares {blob_len}"
        )
    if len(blob) > blob_len:
        raise CheckpointFormatError(f"{path}: {len(blob) - blob_len} trailing bytes")
    if hashlib.sha256(blob).hexdigest() != manifest.get("blob_sha256"):
        raise CheckpointIntegrityError(f"{path}: blob checksum mismatch")

    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for entry in manifest["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if name in arrays:
            raise CheckpointFormatError(f"{path}: duplicate tensor name {name!r}")
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8 if shape else 8
        if entry["offset"] != offset:
            raise CheckpointFormatError(
                f"{path}: tensor {name!r} offset {entry['offset']}, expected {offset}"
            )
        raw = blob[offset : offset + nbytes]
        if len(raw) != nbytes:
            raise CheckpointFormatError(
                f"{path}: tensor {name!r} overruns the blob (shape {shape})"
            )
        if zlib.crc32(raw) != entry["crc32"]:
            raise CheckpointIntegrityError(f"{path}: tensor {name!r} checksum mismatch")
        arrays[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != blob_len:
        raise CheckpointFormatError(
            f"{path}: tensors cover {offset} bytes, blob declares {blob_len}"
        )
    return manifest, arrays


def _alphabets_payload(alphabets: AlphabetSet) -> dict:
    return {
        "words": list(alphabets.words.values),
        "chars": list(alphabets.chars.values),
        "features": {name: list(alphabets.feats[name].values) for name in FEATURE_TYPES},
        "tags": list(alphabets.tags.tags),
    }


def _alphabets_from_payload(payload: dict) -> AlphabetSet:
    feats = FeatureAlphabets(
        {name: Alphabet(payload["features"][name]) for name in FEATURE_TYPES}
    )
    return AlphabetSet(
        Alphabet(payload["words"]), Alphabet(payload["chars"]), feats, TagSet(payload["tags"])
    )


def save_checkpoint(params: ParamStore, path) -> None:
    payload = {
        "model_type": "neural",
        "arch": asdict(params.arch) | {"lexicon_dims": list(params.arch.lexicon_dims)},
        "alphabets": _alphabets_payload(params.alphabets),
    }
    write_container(path, payload, [(n, t.data) for n, t in params.tensors.items()])


def load_checkpoint(path) -> ParamStore:
    manifest, arrays = read_container(path)
    if manifest.get("model_type") != "neural":
        raise CheckpointFormatError(
            f"{path}: model_type {manifest.get('model_type')!r}, expected 'neural'"
        )
    arch_fields = dict(manifest["arch"])
    arch_fields["lexicon_dims"] = tuple(arch_fields.get("lexicon_dims", ()))
    arch = ArchConfig(**arch_fields)
    alphabets = _alphabets_from_payload(manifest["alphabets"])
    expected = expected_shapes(arch, alphabets)
    if set(arrays) != set(expected):
        missing = sorted(set(expected) - set(arrays))
        extra = sorted(set(arrays) - set(expected))
        raise CheckpointFormatError(
            f"{path}: tensor inventory mismatch (missing {missing}, unexpected {extra})"
        )
    tensors = {}
    for name, shape in expected.items():
        if arrays[name].shape != shape:
            raise CheckpointFormatError(
                f"{path}: tensor {name!r} has shape {arrays[name].shape}, "
                f"alphabets and config imply {shape}"
            )
        tensors[name] = Tensor(arrays[name])
    return ParamStore(arch, alphabets, tensors)


def _same_dims(a: ArchConfig, b: ArchConfig) -> bool:
    structural = ("word_emb_dim", "char_emb_dim", "char_hidden", "feat_emb_dim",
                  "lstm_hidden", "lexicon_dims")
    return all(getattr(a, f) == getattr(b, f) for f in structural)


def _align_rows(prior_arr, prior_alpha, target_alpha, shape):
    """Row-keyed alignment for embedding matrices; row 0 is the shared unseen slot."""
    aligned = np.zeros(shape)
    mask = np.zeros(shape)
    aligned[0] = prior_arr[0]
    mask[0] = 1.0
    for i in range(1, shape[0]):
        j = prior_alpha.index(target_alpha.value(i))
        if j > 0:
            aligned[i] = prior_arr[j]
            mask[i] = 1.0
    return aligned, mask


def align_prior(prior: ParamStore, params: ParamStore,
                patterns: tuple[str, ...] = DEFAULT_REGULARIZED):
    """Map prior tensors onto the target's shapes.

    Recurrent/gate tensors match by name (shapes must agree exactly); embedding
    rows and output columns/bias entries match by string key (word, char,
    feature value, tag). Target entries with no source key get mask 0 and thus
    no penalty. Returns (aligned, mask) dicts of target-shaped arrays.
    """
    if not _same_dims(prior.arch, params.arch):
        raise AlignmentError(
            f"prior dims {prior.arch} incompatible with target dims {params.arch}"
        )
    aligned: dict[str, np.ndarray] = {}
    mask: dict[str, np.ndarray] = {}
    pa, ta = prior.alphabets, params.alphabets
    for name, tensor in params.tensors.items():
        if not any(fnmatchcase(name, pat) for pat in patterns):
            continue
        shape = tensor.data.shape
        prior_arr = prior.tensors[name].data
        if name == "word_emb":
            aligned[name], mask[name] = _align_rows(prior_arr, pa.words, ta.words, shape)
        elif name == "char_emb":
            aligned[name], mask[name] = _align_rows(prior_arr, pa.chars, ta.chars, shape)
        elif name.startswith("feat_emb_"):
            feat = name[len("feat_emb_"):]
            aligned[name], mask[name] = _align_rows(
                prior_arr, pa.feats[feat], ta.feats[feat], shape
            )
        elif name == "out_W":
            a = np.zeros(shape)
            m = np.zeros(shape)
            for j, tag in enumerate(ta.tags.tags):
                if tag in pa.tags:
                    a[:, j] = prior_arr[:, pa.tags.index(tag)]
                    m[:, j] = 1.0
            aligned[name], mask[name] = a, m
        elif name == "out_b":
            a = np.zeros(shape)
            m = np.zeros(shape)
            for j, tag in enumerate(ta.tags.tags):
                if tag in pa.tags:
                    a[j] = prior_arr[pa.tags.index(tag)]
                    m[j] = 1.0
            aligned[name], mask[name] = a, m
        else:
            if prior_arr.shape != shape:
                raise AlignmentError(
                    f"tensor {name!r}: prior shape {prior_arr.shape} vs target {shape}"
                )
            aligned[name] = prior_arr
            mask[name] = np.ones(shape)
    return aligned, mask


def penalty(params: ParamStore, aligned: dict, mask: dict, lambda_: float):
    """R = lambda * sum over covered entries of (W - W_prior)^2, plus its gradient
    2*lambda*(W - W_prior) on covered entries (zero elsewhere)."""
    value = 0.0
    grads: dict[str, np.ndarray] = {}
    for name, prior_arr in aligned.items():
        diff = (params.tensors[name].data - prior_arr) * mask[name]
        value += float((diff * diff).sum())
        grads[name] = (2.0 * lambda_) * diff
    return lambda_ * value, grads
