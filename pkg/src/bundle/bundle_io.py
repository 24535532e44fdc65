"""
Model bundle serialization

A bundle is a directory with two files:
  adsala.conf        sorted key=value metadata: host, candidates, transform tables,
                     model family/hyperparameters, selection summary, checksum
  model-<hash>.bin   little-endian, length-prefixed named arrays of the fitted model

The checksum (blake2b, 64 bits) covers the conf body and the model bytes.
"""

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.errors import BundleCorruptionError, BundleError, BundleVersionError
from src.features.transforms import TransformState
from src.models.base import RegressionModel
from src.models.registry import model_from_state

FORMAT_VERSION = 1
CONF_NAME = 'adsala.conf'
MODEL_MAGIC = b'ADSALAMB'
DTYPE_CODES = {0: np.dtype('<f8'), 1: np.dtype('<i8')}
SELECTION_FIELDS = ('rmse_s', 't_eval_s', 'est_speedup_no_overhead', 'est_speedup_with_overhead',
                    'aggregate_speedup', 'mean_speedup')


@dataclass
class ModelBundle:
    """Everything the runtime predictor needs, frozen at install time."""

    host_descriptor: str
    max_threads: int
    candidates: Tuple[int, ...]
    transform: TransformState
    model: RegressionModel
    selection_report: List[Dict] = field(default_factory=list)
    mem_cap_bytes: int = 0
    created_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec='seconds'))
    format_version: int = FORMAT_VERSION
    checksum: Optional[str] = None

    def __post_init__(self):
        self.candidates = tuple(int(c) for c in self.candidates)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def encode_model(state: Dict[str, np.ndarray]) -> bytes:
    """Length-prefixed records sorted by name."""
    chunks = [MODEL_MAGIC, struct.pack('<II', FORMAT_VERSION, len(state))]
    for name in sorted(state):
        array = np.asarray(state[name])
        if np.issubdtype(array.dtype, np.integer):
            code = 1
        elif np.issubdtype(array.dtype, np.floating):
            code = 0
        else:
            raise BundleError(f"Model array '{name}' has unsupported dtype {array.dtype}")
        data = np.ascontiguousarray(array, dtype=DTYPE_CODES[code])
        encoded_name = name.encode('utf-8')
        chunks.append(struct.pack('<H', len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(struct.pack('<BB', code, data.ndim))
        chunks.append(struct.pack(f'<{data.ndim}Q', *data.shape))
        chunks.append(data.tobytes())
    return b''.join(chunks)


def decode_model(payload: bytes) -> Dict[str, np.ndarray]:
    try:
        if payload[:len(MODEL_MAGIC)] != MODEL_MAGIC:
            raise BundleCorruptionError("Model file does not start with the bundle magic")
        offset = len(MODEL_MAGIC)
        version, count = struct.unpack_from('<II', payload, offset)
        offset += 8
        if version != FORMAT_VERSION:
            raise BundleVersionError(version, FORMAT_VERSION)
        state = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from('<H', payload, offset)
            offset += 2
            name = payload[offset:offset + name_len].decode('utf-8')
            offset += name_len
            code, ndim = struct.unpack_from('<BB', payload, offset)
            offset += 2
            dims = struct.unpack_from(f'<{ndim}Q', payload, offset)
            offset += 8 * ndim
            dtype = DTYPE_CODES[code]
            nbytes = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
            if offset + nbytes > len(payload):
                raise BundleCorruptionError(f"Model record '{name}' is truncated")
            state[name] = np.frombuffer(payload, dtype=dtype, count=nbytes // dtype.itemsize,
                                        offset=offset).reshape(dims).copy()
            offset += nbytes
        if offset != len(payload):
            raise BundleCorruptionError("Model file has trailing bytes")
        return state
    except (struct.error, KeyError, UnicodeDecodeError, ValueError) as e:
        raise BundleCorruptionError(f"Model file is malformed: {e}")


def _conf_values(bundle: ModelBundle, model_file: str) -> Dict[str, str]:
    transform = bundle.transform
    values = {
        'format_version': str(bundle.format_version),
        'host': bundle.host_descriptor,
        'max_threads': str(bundle.max_threads),
        'candidates': ','.join(str(c) for c in bundle.candidates),
        'created_at': bundle.created_at,
        'mem_cap_bytes': str(int(bundle.mem_cap_bytes)),
        'schema': ','.join(transform.schema),
        'kept_features': ','.join(transform.kept_features),
        'label_transform': transform.label_transform,
        'model.family': bundle.model.family,
        'model.file': model_file,
        'model.hyperparameters': json.dumps(bundle.model.hyperparameters, sort_keys=True),
        'model.seed': str(bundle.model.seed),
    }
    for name, lmbda, mean, std in zip(transform.schema, transform.lambdas, transform.means, transform.stds):
        values[f'lambda.{name}'] = _fmt(lmbda)
        values[f'mean.{name}'] = _fmt(mean)
        values[f'std.{name}'] = _fmt(std)
    for row in bundle.selection_report:
        for key in SELECTION_FIELDS:
            if key in row:
                values[f"selection.{row['family']}.{key}"] = _fmt(row[key])
    if bundle.selection_report:
        values['selection.chosen'] = bundle.model.family
    return values


def _conf_body(values: Dict[str, str]) -> str:
    return ''.join(f"{key}={values[key]}\n" for key in sorted(values))


def _checksum(body: str, model_bytes: bytes) -> str:
    digest = hashlib.blake2b(digest_size=8)
    digest.update(body.encode('utf-8'))
    digest.update(model_bytes)
    return digest.hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_bundle(bundle: ModelBundle, path: Path) -> None:
    """
    Write a bundle directory.

    The model file name carries a hash of its contents and is written first;
    the conf file is swapped in last, so readers see either the old or the new
    bundle. Superseded model files are removed afterwards.
    """
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        model_bytes = encode_model(bundle.model.get_state())
        model_file = f"model-{hashlib.blake2b(model_bytes, digest_size=8).hexdigest()}.bin"
        body = _conf_body(_conf_values(bundle, model_file))
        checksum = _checksum(body, model_bytes)

        _atomic_write(path / model_file, model_bytes)
        _atomic_write(path / CONF_NAME, f"checksum={checksum}\n{body}".encode('utf-8'))
        bundle.checksum = checksum

        for stale in path.glob('model-*.bin'):
            if stale.name != model_file:
                stale.unlink()
    except OSError as e:
        raise BundleError(f"Could not write bundle to {path}: {e}")


def _parse_conf(text: str, conf_path: Path) -> Tuple[Dict[str, str], str, str]:
    lines = text.splitlines(keepends=True)
    if not lines or not lines[0].startswith('checksum='):
        raise BundleCorruptionError(f"{conf_path}: missing checksum header")
    checksum = lines[0].strip().split('=', 1)[1]
    body = ''.join(lines[1:])
    values = {}
    for number, line in enumerate(lines[1:], 2):
        if not line.endswith('\n') or '=' not in line:
            raise BundleCorruptionError(f"{conf_path}:{number}: malformed line")
        key, value = line.rstrip('\n').split('=', 1)
        values[key] = value
    return values, checksum, body


def load_bundle(path: Path) -> ModelBundle:
    """
    Read and verify a bundle directory (or its adsala.conf).

    Raises:
        BundleError: missing files
        BundleVersionError: unsupported format version
        BundleCorruptionError: checksum mismatch or malformed content
    """
    path = Path(path)
    conf_path = path if path.is_file() else path / CONF_NAME
    if not conf_path.exists():
        raise BundleError(f"No model bundle at {path} (expected {conf_path})")

    try:
        text = conf_path.read_bytes().decode('utf-8')
    except UnicodeDecodeError:
        raise BundleCorruptionError(f"{conf_path}: not valid UTF-8")
    values, checksum, body = _parse_conf(text, conf_path)

    try:
        version = int(values.get('format_version', ''))
    except ValueError:
        raise BundleCorruptionError(f"{conf_path}: format_version is missing or not an integer")
    if version != FORMAT_VERSION:
        raise BundleVersionError(version, FORMAT_VERSION)

    model_path = conf_path.parent / values.get('model.file', '')
    if not values.get('model.file') or not model_path.is_file():
        raise BundleCorruptionError(f"{conf_path}: model file {values.get('model.file')!r} is missing")
    model_bytes = model_path.read_bytes()
    if _checksum(body, model_bytes) != checksum:
        raise BundleCorruptionError(f"Bundle {path} failed checksum verification")

    try:
        schema = tuple(values['schema'].split(','))
        transform = TransformState(
            schema=schema,
            lambdas=[float(values[f'lambda.{name}']) for name in schema],
            means=[float(values[f'mean.{name}']) for name in schema],
            stds=[float(values[f'std.{name}']) for name in schema],
            kept_features=tuple(values['kept_features'].split(',')),
            label_transform=values['label_transform'],
        )
        model = model_from_state(values['model.family'], json.loads(values['model.hyperparameters']),
                                 transform.kept_features, decode_model(model_bytes))
        model.seed = int(values.get('model.seed', 0))

        report: Dict[str, Dict] = {}
        for key, value in values.items():
            if key.startswith('selection.') and key != 'selection.chosen':
                _, family, name = key.split('.', 2)
                report.setdefault(family, {'family': family})[name] = float(value)

        return ModelBundle(
            host_descriptor=values['host'],
            max_threads=int(values['max_threads']),
            candidates=tuple(int(c) for c in values['candidates'].split(',')),
            transform=transform,
            model=model,
            selection_report=[report[f] for f in sorted(report)],
            mem_cap_bytes=int(values.get('mem_cap_bytes', 0)),
            created_at=values.get('created_at', ''),
            format_version=version,
            checksum=checksum,
        )
    except (KeyError, ValueError) as e:
        raise BundleCorruptionError(f"{conf_path}: incomplete or invalid bundle metadata: {e}")
