"""Dataset import, export, and splitting.

Two format plugins ship: ``folder`` (one subdirectory per class, PNG images)
and ``text`` (CSV with a ``c,h,w`` header row, then ``label,v1,...,vchw``
rows).  The plugin registry is open for extension; LevelDB/.mat/HDF5 tags are
registered as stubs that fail with "format not built".  Feature vectors
export to the libsvm sparse text convention and re-import bit-exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "SplitSpec",
    "FormatPlugin",
    "DatasetError",
    "FormatNotBuiltError",
    "register_plugin",
    "get_plugin",
    "list_formats",
    "resolve_format",
    "import_folder",
    "import_text",
    "export_text",
    "split",
    "export_libsvm",
    "read_libsvm",
]


class DatasetError(ValueError):
    pass


class FormatNotBuiltError(DatasetError):
    pass


@dataclass
class Dataset:
    """Labeled samples with a fixed (c, h, w) and deterministic ordering."""

    samples: list[tuple[np.ndarray, int]]
    class_names: list[str]
    provenance: str
    checksum: str

    def __post_init__(self):
        shapes = {tuple(t.shape) for t, _ in self.samples}
        if len(shapes) > 1:
            raise DatasetError(f"samples have mixed shapes: {sorted(shapes)}")
        for _, label in self.samples:
            if not 0 <= label < len(self.class_names):
                raise DatasetError(f"label {label} outside class table of size {len(self.class_names)}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def sample_shape(self) -> tuple[int, int, int]:
        if not self.samples:
            return (0, 0, 0)
        return tuple(self.samples[0][0].shape[1:])

    def features(self) -> np.ndarray:
        if not self.samples:
            return np.zeros((0, 0, 0, 0))
        return np.concatenate([t for t, _ in self.samples], axis=0)

    def labels(self) -> np.ndarray:
        return np.array([label for _, label in self.samples], dtype=np.int64)

    def subset(self, indices, provenance: str) -> "Dataset":
        samples = [self.samples[i] for i in indices]
        digest = hashlib.sha256()
        digest.update(self.checksum.encode())
        digest.update(provenance.encode())
        digest.update(",".join(str(i) for i in indices).encode())
        return Dataset(samples, list(self.class_names), provenance, digest.hexdigest())


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int
    stratified: bool = False


@dataclass(frozen=True)
class FormatPlugin:
    tag: str
    reader: object  # callable(path, progress=None, cancelled=None) -> Dataset
    probe: object  # callable(path) -> bool


_REGISTRY: dict[str, FormatPlugin] = {}


def register_plugin(plugin: FormatPlugin) -> None:
    if plugin.tag in _REGISTRY:
        raise DatasetError(f"format tag '{plugin.tag}' already registered")
    _REGISTRY[plugin.tag] = plugin


def get_plugin(tag: str) -> FormatPlugin:
    if tag not in _REGISTRY:
        raise DatasetError(f"unknown format '{tag}' (available: {', '.join(sorted(_REGISTRY))})")
    return _REGISTRY[tag]


def list_formats() -> list[str]:
    return sorted(_REGISTRY)


def resolve_format(path) -> FormatPlugin:
    """Pick the plugin whose probe accepts the path."""
    for tag in sorted(_REGISTRY):
        plugin = _REGISTRY[tag]
        try:
            if plugin.probe(path):
                return plugin
        except FormatNotBuiltError:
            continue
    raise DatasetError(f"no format plugin recognizes '{path}'")


# ---------------------------------------------------------------------------
# folder import


def _load_png(path: Path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB" if img.mode in ("P", "RGBA", "CMYK") else "L")
            arr = np.asarray(img, dtype=np.float64) / 255.0
    except Exception as exc:
        raise DatasetError(f"unreadable image '{path}': {exc}") from exc
    if arr.ndim == 2:
        arr = arr[None, :, :]
    else:
        arr = arr.transpose(2, 0, 1)
    return arr[None]  # (1, c, h, w)


def import_folder(root, progress=None, cancelled=None) -> Dataset:
    """One subdirectory per class; PNG images scaled to [0, 1]; samples
    ordered by (class, filename)."""
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"'{root}' is not a directory")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise DatasetError(f"'{root}' contains no class subdirectories")
    class_names = [d.name for d in class_dirs]

    files: list[tuple[int, Path]] = []
    for label, cdir in enumerate(class_dirs):
        images = sorted(p for p in cdir.iterdir() if p.suffix.lower() == ".png")
        if not images:
            raise DatasetError(f"class '{cdir.name}' has no samples")
        files.extend((label, p) for p in images)

    samples: list[tuple[np.ndarray, int]] = []
    digest = hashlib.sha256()
    shape = None
    for i, (label, path) in enumerate(files):
        if cancelled is not None and cancelled():
            raise DatasetError("import cancelled")
        tensor = _load_png(path)
        if shape is None:
            shape = tensor.shape
        elif tensor.shape != shape:
            raise DatasetError(
                f"mixed image dimensions: '{path}' is {tensor.shape[1:]},"
                f" expected {shape[1:]}"
            )
        samples.append((tensor, label))
        digest.update(str(path.relative_to(root)).encode())
        digest.update(path.read_bytes())
        if progress is not None:
            progress((i + 1) / len(files))
    return Dataset(samples, class_names, f"folder:{root}", digest.hexdigest())


def _probe_folder(path) -> bool:
    return Path(path).is_dir()


# ---------------------------------------------------------------------------
# text (CSV) import/export


def import_text(path, progress=None, cancelled=None) -> Dataset:
    """CSV with header row `c,h,w`; each data row is a label string followed
    by c*h*w feature values, taken verbatim."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read '{path}': {exc}") from exc
    return _parse_text(raw, provenance=f"text:{path}", progress=progress, cancelled=cancelled)


def _parse_text(raw: str, provenance: str, progress=None, cancelled=None) -> Dataset:
    rows = list(csv.reader(io.StringIO(raw)))
    rows = [(i + 1, row) for i, row in enumerate(rows) if row]
    if not rows:
        raise DatasetError("empty file: missing c,h,w header row")
    header_no, header = rows[0]
    try:
        c, h, w = (int(v) for v in header)
    except ValueError:
        raise DatasetError(f"row {header_no}: header must be three integers c,h,w") from None
    if c < 1 or h < 1 or w < 1:
        raise DatasetError(f"row {header_no}: c,h,w must be positive")
    dim = c * h * w

    parsed: list[tuple[str, np.ndarray]] = []
    body = rows[1:]
    for pos, (row_no, row) in enumerate(body):
        if cancelled is not None and cancelled():
            raise DatasetError("import cancelled")
        label, *fields = row
        if len(fields) != dim:
            raise DatasetError(f"row {row_no}: expected {dim} features, got {len(fields)}")
        try:
            values = np.array([float(v) for v in fields])
        except ValueError:
            raise DatasetError(f"row {row_no}: non-numeric feature value") from None
        parsed.append((label, values.reshape(1, c, h, w)))
        if progress is not None:
            progress((pos + 1) / len(body))

    class_names = sorted({label for label, _ in parsed})
    index = {name: i for i, name in enumerate(class_names)}
    samples = [(tensor, index[label]) for label, tensor in parsed]
    digest = hashlib.sha256(raw.encode("utf-8")).hexdigest()
    return Dataset(samples, class_names, provenance, digest)


def export_text(dataset: Dataset, path) -> None:
    """Write the CSV dialect import_text reads; floats use repr so the
    round trip is bit-exact."""
    c, h, w = dataset.sample_shape
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([c, h, w])
        for tensor, label in dataset.samples:
            writer.writerow([dataset.class_names[label]] + [_fmt_value(v) for v in tensor.ravel()])


def _probe_text(path) -> bool:
    p = Path(path)
    return p.is_file() and p.suffix.lower() in (".csv", ".txt")


# ---------------------------------------------------------------------------
# splitting


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seed-deterministic disjoint, exhaustive split; stratified mode puts
    round(train_fraction * class_count) of every class in train."""
    if len(dataset) < 2:
        raise DatasetError("cannot split a dataset with fewer than 2 samples")
    if not 0 < spec.train_fraction < 1:
        raise DatasetError("train_fraction must be in (0,1)")
    rng = np.random.default_rng(spec.seed)
    n = len(dataset)
    if spec.stratified:
        labels = dataset.labels()
        train_idx: list[int] = []
        test_idx: list[int] = []
        for k, name in enumerate(dataset.class_names):
            members = np.flatnonzero(labels == k)
            count = len(members)
            take = round(spec.train_fraction * count)
            if count and (take == 0 or take == count):
                raise DatasetError(
                    f"stratified split impossible for class '{name}':"
                    f" {take} of {count} samples would land in train"
                )
            order = rng.permutation(count)
            train_idx.extend(members[order[:take]])
            test_idx.extend(members[order[take:]])
    else:
        take = round(spec.train_fraction * n)
        if take == 0 or take == n:
            raise DatasetError(f"split of {n} samples at fraction {spec.train_fraction} leaves one side empty")
        order = rng.permutation(n)
        train_idx, test_idx = list(order[:take]), list(order[take:])

    tag = f"(frac={spec.train_fraction},seed={spec.seed},stratified={spec.stratified})"
    train = dataset.subset(sorted(train_idx), f"{dataset.provenance}#train{tag}")
    test = dataset.subset(sorted(test_idx), f"{dataset.provenance}#test{tag}")
    return train, test


# ---------------------------------------------------------------------------
# libsvm sparse text


def _fmt_value(value: float) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise DatasetError(f"cannot format non-finite value {value!r}")
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def export_libsvm(features, path) -> None:
    """One `<label> <idx>:<value>...` line per sample; indices 1-based
    ascending, zeros omitted, LF endings."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for vector, label in features:
            fh.write(format_libsvm_line(vector, label))
            fh.write("\n")


def format_libsvm_line(vector, label) -> str:
    parts = [str(int(label))]
    for i, value in enumerate(np.asarray(vector).ravel()):
        if value != 0.0:
            parts.append(f"{i + 1}:{_fmt_value(value)}")
    return " ".join(parts)


def read_libsvm(path, n_features: int | None = None) -> list[tuple[np.ndarray, int]]:
    """Read libsvm sparse text back into dense (vector, label) pairs.  The
    width is inferred from the largest index unless n_features is given."""
    entries: list[tuple[int, list[tuple[int, float]]]] = []
    widest = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            try:
                label = int(fields[0])
                pairs = []
                for f in fields[1:]:
                    idx, value = f.split(":", 1)
                    pairs.append((int(idx), float(value)))
            except ValueError as exc:
                raise DatasetError(f"line {line_no}: malformed libsvm entry: {exc}") from exc
            for idx, _ in pairs:
                if idx < 1:
                    raise DatasetError(f"line {line_no}: indices are 1-based, got {idx}")
                widest = max(widest, idx)
            entries.append((label, pairs))
    width = widest if n_features is None else n_features
    out = []
    for label, pairs in entries:
        vec = np.zeros(width)
        for idx, value in pairs:
            if idx > width:
                raise DatasetError(f"feature index {idx} exceeds width {width}")
            vec[idx - 1] = value
        out.append((vec, label))
    return out


# ---------------------------------------------------------------------------
# registry population


def _not_built(tag):
    def reader(path, progress=None, cancelled=None):
        raise FormatNotBuiltError(f"format not built: '{tag}'")

    def probe(path):
        raise FormatNotBuiltError(f"format not built: '{tag}'")

    return FormatPlugin(tag, reader, probe)


register_plugin(FormatPlugin("folder", import_folder, _probe_folder))
register_plugin(FormatPlugin("text", import_text, _probe_text))
for _tag in ("leveldb", "mat", "hdf5"):
    register_plugin(_not_built(_tag))
