"""Dataset CSV and checkpoint binary persistence.

Dataset files are plain CSV so external tools can produce and consume them:
optional ``#`` comment lines, a header line ``d=<dim>`` (unlabeled matrix)
or ``d=<dim>,label,C=<classes>`` (labeled dataset), then one sample per row
with full-precision decimal floats and an optional trailing integer label.
A ``# source=<tag>`` comment records where the rows came from.

Checkpoints are a versioned little-endian binary format: magic ``GSA1``,
version u16, kind u8 (1 = classifier parameters, 2 = GAN run), raw float64
blocks with u32 length prefixes, and a trailing CRC32 over everything before
it. The format is bit-exact by construction.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from ..distributions import SOURCE_TAGS, LabeledDataset
from ..errors import CheckpointFormatError, ValidationError
from ..gan import GanCheckpoint, GanConfig, GanRun
from ..neural import MlpParams, TrainConfig

__all__ = [
    "save_dataset",
    "load_dataset",
    "save_checkpoint",
    "load_checkpoint",
    "write_csv",
    "format_cell",
]

_MAGIC = b"GSA1"
_VERSION = 1
_KIND_PARAMS = 1
_KIND_RUN = 2
_HEADS = ("linear", "sigmoid", "softmax")


# ---------------------------------------------------------------------------
# CSV cells
# ---------------------------------------------------------------------------

def format_cell(value) -> str:
    """One CSV cell: 17 significant digits for floats (exact round-trip),
    plain decimal for integers, verbatim for strings."""
    if isinstance(value, (bool, np.bool_)):
        raise ValidationError("format_cell: booleans have no CSV representation")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header: list[str], rows) -> None:
    """Write a report table: one header line, then formatted rows."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# dataset files
# ---------------------------------------------------------------------------

def save_dataset(data, path) -> None:
    """Write a LabeledDataset or a bare sample matrix."""
    lines = []
    if isinstance(data, LabeledDataset):
        lines.append(f"# source={data.source}")
        lines.append(f"d={data.dim},label,C={data.class_count}")
        for row, label in zip(data.x, data.y):
            lines.append(",".join(format(v, ".17g") for v in row) + f",{int(label)}")
    else:
        x = np.asarray(data, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValidationError("save_dataset: need a nonempty 2-D sample matrix")
        lines.append(f"d={x.shape[1]}")
        for row in x:
            lines.append(",".join(format(v, ".17g") for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_header(line: str, path, lineno: int) -> tuple[int, bool, int]:
    parts = [p.strip() for p in line.split(",")]
    if not parts[0].startswith("d="):
        raise ValidationError(f"{path}:{lineno}: header must start with d=<dim>")
    try:
        dim = int(parts[0][2:])
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: bad dimension {parts[0][2:]!r}") from None
    if dim < 1:
        raise ValidationError(f"{path}:{lineno}: dimension must be >= 1")
    if len(parts) == 1:
        return dim, False, 0
    if len(parts) == 3 and parts[1] == "label" and parts[2].startswith("C="):
        try:
            classes = int(parts[2][2:])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad class count {parts[2][2:]!r}") from None
        if classes < 1:
            raise ValidationError(f"{path}:{lineno}: class count must be >= 1")
        return dim, True, classes
    raise ValidationError(
        f"{path}:{lineno}: header must be d=<dim> or d=<dim>,label,C=<classes>"
    )


def load_dataset(path):
    """Read a dataset file; a label column in the header makes it a
    LabeledDataset, otherwise a bare matrix is returned.

    Malformed rows and width mismatches raise naming the offending line.
    ``source`` comes from a ``# source=`` comment when present and valid,
    otherwise defaults to external.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ValidationError(f"load_dataset: cannot read {path}: {e}") from e

    source = "external"
    header = None
    rows: list[np.ndarray] = []
    labels: list[int] = []
    dim, labeled, classes = 0, False, 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comment = line[1:].strip()
            if comment.startswith("source="):
                tag = comment[len("source="):].strip()
                if tag in SOURCE_TAGS:
                    source = tag
            continue
        if header is None:
            header = line
            dim, labeled, classes = _parse_header(line, path, lineno)
            continue
        fields = line.split(",")
        expect = dim + 1 if labeled else dim
        if len(fields) != expect:
            raise ValidationError(
                f"{path}:{lineno}: expected {expect} fields, got {len(fields)}"
            )
        try:
            rows.append(np.array([float(f) for f in fields[:dim]], dtype=np.float64))
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: malformed numeric field") from None
        if labeled:
            try:
                label = int(fields[dim])
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: malformed label field") from None
            if not 0 <= label < classes:
                raise ValidationError(
                    f"{path}:{lineno}: label {label} outside [0, {classes})"
                )
            labels.append(label)

    if header is None:
        raise ValidationError(f"{path}: no header line found")
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    x = np.vstack(rows)
    if not labeled:
        return x
    return LabeledDataset(
        x, np.array(labels, dtype=np.int64), class_count=classes, source=source
    )


# ---------------------------------------------------------------------------
# checkpoint binary
# ---------------------------------------------------------------------------

class _Cursor:
    """Bounds-checked reader over the payload bytes."""

    def __init__(self, buf: bytes, path):
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointFormatError(
                f"{self.path}: truncated file (needed {n} bytes at offset {self.pos})"
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def f64_block(self, count: int) -> np.ndarray:
        raw = self.take(8 * count)
        return np.frombuffer(raw, dtype="<f8", count=count).astype(np.float64)


_OPTIMIZERS = ("sgd", "adam")


def _pack_gan_config(cfg: GanConfig) -> bytes:
    t = cfg.train
    parts = [
        struct.pack("<II", cfg.latent_dim, cfg.data_dim),
        struct.pack("<I", len(cfg.gen_hidden)),
        struct.pack(f"<{len(cfg.gen_hidden)}I", *cfg.gen_hidden) if cfg.gen_hidden else b"",
        struct.pack("<I", len(cfg.disc_hidden)),
        struct.pack(f"<{len(cfg.disc_hidden)}I", *cfg.disc_hidden) if cfg.disc_hidden else b"",
        struct.pack("<III", cfg.total_iterations, cfg.checkpoint_every, cfg.disc_steps),
        struct.pack(
            "<dIIBddddq",
            t.learning_rate,
            t.batch_size,
            t.iterations,
            _OPTIMIZERS.index(t.optimizer),
            t.beta1,
            t.beta2,
            t.eps,
            t.l2,
            t.seed,
        ),
    ]
    return b"".join(parts)


def _unpack_gan_config(cur: _Cursor) -> GanConfig:
    latent_dim, data_dim = cur.u32(), cur.u32()
    gen_hidden = tuple(cur.u32() for _ in range(cur.u32()))
    disc_hidden = tuple(cur.u32() for _ in range(cur.u32()))
    total, every, disc_steps = cur.u32(), cur.u32(), cur.u32()
    lr = cur.f64()
    batch, iters, opt_idx = cur.u32(), cur.u32(), cur.u8()
    if opt_idx >= len(_OPTIMIZERS):
        raise CheckpointFormatError(f"{cur.path}: unknown optimizer code {opt_idx}")
    beta1, beta2, eps, l2 = cur.f64(), cur.f64(), cur.f64(), cur.f64()
    seed = struct.unpack("<q", cur.take(8))[0]
    train = TrainConfig(
        learning_rate=lr,
        batch_size=batch,
        iterations=iters,
        optimizer=_OPTIMIZERS[opt_idx],
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        l2=l2,
        seed=seed,
    )
    return GanConfig(
        latent_dim=latent_dim,
        data_dim=data_dim,
        gen_hidden=gen_hidden,
        disc_hidden=disc_hidden,
        train=train,
        total_iterations=total,
        checkpoint_every=every,
        disc_steps=disc_steps,
    )


def _pack_params(params: MlpParams) -> bytes:
    parts = [struct.pack("<BI", _HEADS.index(params.head), params.n_layers)]
    for w, b in zip(params.weights, params.biases):
        parts.append(struct.pack("<II", w.shape[0], w.shape[1]))
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def _unpack_params(cur: _Cursor) -> MlpParams:
    head_idx = cur.u8()
    if head_idx >= len(_HEADS):
        raise CheckpointFormatError(f"{cur.path}: unknown head code {head_idx}")
    n_layers = cur.u32()
    if n_layers < 1 or n_layers > 1024:
        raise CheckpointFormatError(f"{cur.path}: implausible layer count {n_layers}")
    weights, biases = [], []
    for _ in range(n_layers):
        rows, cols = cur.u32(), cur.u32()
        if rows < 1 or cols < 1:
            raise CheckpointFormatError(f"{cur.path}: zero-size layer")
        weights.append(cur.f64_block(rows * cols).reshape(rows, cols))
        biases.append(cur.f64_block(cols))
    return MlpParams(weights=weights, biases=biases, head=_HEADS[head_idx])


def save_checkpoint(obj, path) -> None:
    """Serialize MlpParams or a GanRun; dispatch is by type."""
    if isinstance(obj, MlpParams):
        kind, payload = _KIND_PARAMS, _pack_params(obj)
    elif isinstance(obj, GanRun):
        parts = [_pack_gan_config(obj.config), struct.pack("<I", len(obj.checkpoints))]
        for cp in obj.checkpoints:
            parts.append(
                struct.pack("<Idd", cp.step, cp.generator_loss, cp.discriminator_loss)
            )
            parts.append(_pack_params(cp.generator))
            parts.append(_pack_params(cp.discriminator))
        kind, payload = _KIND_RUN, b"".join(parts)
    else:
        raise CheckpointFormatError(
            f"save_checkpoint: cannot serialize {type(obj).__name__}"
        )
    body = _MAGIC + struct.pack("<HB", _VERSION, kind) + payload
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def load_checkpoint(path):
    """Read back MlpParams or a GanRun; raises on corruption, never returns
    a partial value."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CheckpointFormatError(f"load_checkpoint: cannot read {path}: {e}") from e
    if len(blob) < 11:
        raise CheckpointFormatError(f"{path}: truncated file (no complete header)")
    if blob[:4] != _MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {blob[:4]!r}")
    version, kind = struct.unpack("<HB", blob[4:7])
    if version != _VERSION:
        raise CheckpointFormatError(
            f"{path}: unsupported version {version}; this build reads version {_VERSION}"
        )
    stored = struct.unpack("<I", blob[-4:])[0]
    if zlib.crc32(blob[:-4]) != stored:
        raise CheckpointFormatError(f"{path}: checksum mismatch, file is corrupt")

    cur = _Cursor(blob[7:-4], path)
    if kind == _KIND_PARAMS:
        out = _unpack_params(cur)
    elif kind == _KIND_RUN:
        config = _unpack_gan_config(cur)
        count = cur.u32()
        if count < 1 or count > 1_000_000:
            raise CheckpointFormatError(f"{path}: implausible checkpoint count {count}")
        checkpoints = []
        for _ in range(count):
            step = cur.u32()
            gen_loss, disc_loss = cur.f64(), cur.f64()
            gen = _unpack_params(cur)
            disc = _unpack_params(cur)
            checkpoints.append(
                GanCheckpoint(
                    step=step,
                    generator=gen,
                    discriminator=disc,
                    generator_loss=gen_loss,
                    discriminator_loss=disc_loss,
                )
            )
        out = GanRun(config=config, checkpoints=checkpoints)
    else:
        raise CheckpointFormatError(f"{path}: unknown kind code {kind}")
    if cur.pos != len(cur.buf):
        raise CheckpointFormatError(
            f"{path}: {len(cur.buf) - cur.pos} trailing bytes after payload"
        )
    return out
