"""Filtration banks, per-cloud featurization, and labeled feature files.

A feature vector is the concatenation, in bank order, of one 36-slot block
per filtration. Feature files are plain text::

    #tacofeat v1
    #bank <preset> <hash>
    #dim <n>
    #specs <spec>;<spec>;...
    #config <json>
    label,v1,...,vn
"""

from __future__ import annotations

import hashlib
import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import filtration as filt
from .cubical import build_complex, compute_persistence
from .pc_io import PointCloud, load_cloud
from .vectorize import BLOCK_SIZE, SamplingConfig, vectorize_diagram
from .voxelizer import BinaryImage3D, load_binary_image, voxelize

log = logging.getLogger(__name__)

FEATURE_MAGIC = "#tacofeat"
FEATURE_VERSION = "v1"


class FeatureFileError(ValueError):
    pass


class FeaturizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class FiltrationBank:
    name: str
    specs: Tuple[filt.FiltrationSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        if not self.specs:
            raise ValueError("bank needs at least one filtration")

    def __len__(self) -> int:
        return len(self.specs)

    @property
    def feature_length(self) -> int:
        return BLOCK_SIZE * len(self.specs)

    @property
    def spec_strings(self) -> List[str]:
        return [str(s) for s in self.specs]

    @property
    def hash(self) -> str:
        return hashlib.sha256("\n".join(self.spec_strings).encode()).hexdigest()[:16]

    @classmethod
    def from_strings(cls, name: str, specs: Sequence[str]) -> "FiltrationBank":
        return cls(name, tuple(filt.FiltrationSpec.parse(s) for s in specs))


def _deds():
    return [filt.FiltrationSpec(filt.DENSITY, radius=1.0), filt.FiltrationSpec(filt.DILATION),
            filt.FiltrationSpec(filt.EROSION), filt.FiltrationSpec(filt.SIGNED_DISTANCE)]


def make_bank(name: str, radial_slots: Sequence[int]) -> FiltrationBank:
    """26 heights, the given radial slots, then density, dilation, erosion, signed distance."""
    heights = [filt.FiltrationSpec(filt.HEIGHT, direction=v) for v in filt.height_directions()]
    radials = [filt.FiltrationSpec(filt.RADIAL, slot=s) for s in radial_slots]
    return FiltrationBank(name, tuple(heights + radials + _deds()))


FULL57 = make_bank("FULL57", range(1, 28))
MN40 = make_bank("MN40", range(1, 19))
PRESETS = {b.name: b for b in (FULL57, MN40)}


def get_bank(value) -> FiltrationBank:
    """A preset name, a list of spec strings, or a bank."""
    if isinstance(value, FiltrationBank):
        return value
    if isinstance(value, str):
        try:
            return PRESETS[value.upper()]
        except KeyError:
            raise ValueError(f"unknown bank preset {value!r}; choose from {sorted(PRESETS)}") from None
    return FiltrationBank.from_strings("custom", list(value))


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    bank_hash: str
    source: Optional[str] = None


def featurize_image(img: BinaryImage3D, bank: FiltrationBank, cfg: SamplingConfig = SamplingConfig(),
                    drop_essential: bool = False) -> np.ndarray:
    if not img.voxels.any():
        raise FeaturizationError("binary image has no active voxels")
    blocks = []
    for spec in bank.specs:
        gray = filt.apply_filtration(img, spec)
        dgm = compute_persistence(build_complex(gray))
        if drop_essential:
            dgm = dgm.without_essential()
        blocks.append(vectorize_diagram(dgm, cfg))
    return np.concatenate(blocks)


def featurize_cloud(cloud: PointCloud, voxel_size: float, bank: FiltrationBank,
                    cfg: SamplingConfig = SamplingConfig(), drop_essential: bool = False,
                    source: Optional[str] = None) -> FeatureVector:
    img = voxelize(cloud, voxel_size)
    return FeatureVector(featurize_image(img, bank, cfg, drop_essential), bank.hash, source)


@dataclass
class LabeledDataset:
    X: np.ndarray
    labels: List[str]
    bank_name: str
    bank_hash: str
    specs: List[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    failures: List[Tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64).reshape(len(self.labels), -1)
        for lab in self.labels:
            if "," in lab or "\n" in lab or not lab:
                raise ValueError(f"invalid label {lab!r}")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def classes(self) -> List[str]:
        return sorted(set(self.labels))

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def rows(self):
        for x, lab in zip(self.X, self.labels):
            yield FeatureVector(x, self.bank_hash), lab

    def equals(self, other: "LabeledDataset") -> bool:
        return (self.labels == other.labels and self.bank_hash == other.bank_hash
                and self.bank_name == other.bank_name and np.array_equal(self.X, other.X))


@dataclass(frozen=True)
class _Job:
    item: object
    label: str
    voxel_size: float
    bank: FiltrationBank
    cfg: SamplingConfig
    drop_essential: bool
    mesh_points: int
    seed: int


def _item_name(item) -> str:
    return str(item) if isinstance(item, (str, Path)) else f"<{type(item).__name__}>"


def _run_job(job: _Job):
    try:
        item = job.item
        if isinstance(item, (str, Path)):
            if Path(item).suffix.lower() == ".tbv":
                item = load_binary_image(item)
            else:
                item = load_cloud(item, job.mesh_points, job.seed, job.label)
        if isinstance(item, BinaryImage3D):
            vec = featurize_image(item, job.bank, job.cfg, job.drop_essential)
        else:
            vec = featurize_cloud(item, job.voxel_size, job.bank, job.cfg, job.drop_essential).values
        return vec, None
    except Exception as exc:  # recorded per item, never fatal for the batch
        return None, f"{type(exc).__name__}: {exc}"


def _item_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, i]).generate_state(1)[0])


def featurize_dataset(inputs: Sequence[Tuple[object, str]], workers: int = 1, voxel_size: float = 0.05,
                      bank=MN40, cfg: SamplingConfig = SamplingConfig(), drop_essential: bool = False,
                      mesh_points: int = 2048, seed: int = 0, config: Optional[dict] = None) -> LabeledDataset:
    """Featurize ``(item, label)`` pairs; an item is a file path, a PointCloud or a BinaryImage3D.

    Rows come back in input order whatever the worker count. Items that fail
    are skipped and listed in ``failures``.
    """
    bank = get_bank(bank)
    jobs = [_Job(item, label, voxel_size, bank, cfg, drop_essential, mesh_points, _item_seed(seed, i))
            for i, (item, label) in enumerate(inputs)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_job(j) for j in jobs]

    rows, labels, failures = [], [], []
    for job, (vec, err) in zip(jobs, results):
        if err is not None:
            log.warning("featurization failed for %s: %s", _item_name(job.item), err)
            failures.append((_item_name(job.item), err))
        else:
            rows.append(vec)
            labels.append(job.label)
    if not rows:
        raise FeaturizationError(f"all {len(jobs)} inputs failed; first error: {failures[0][1] if failures else 'none'}")
    X = np.vstack(rows)
    return LabeledDataset(X, labels, bank.name, bank.hash, bank.spec_strings, dict(config or {}), failures)


def read_manifest(path) -> List[Tuple[str, str]]:
    """CSV of ``path,label`` rows; relative paths resolve against the manifest's folder."""
    base = Path(path).parent
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'path,label'")
            p = Path(parts[0])
            if lineno == 1 and parts == ["path", "label"]:
                continue
            out.append((str(p if p.is_absolute() else base / p), parts[1]))
    return out


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_features(ds: LabeledDataset, path) -> None:
    lines = [
        f"{FEATURE_MAGIC} {FEATURE_VERSION}",
        f"#bank {ds.bank_name} {ds.bank_hash}",
        f"#dim {ds.dim}",
        "#specs " + ";".join(ds.specs),
        "#config " + _canonical_json(ds.config),
    ]
    for x, lab in zip(ds.X, ds.labels):
        lines.append(lab + "," + ",".join(format(v, ".17g") for v in x.tolist()))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_features(path, expected_bank_hash: Optional[str] = None) -> LabeledDataset:
    with open(path) as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith(FEATURE_MAGIC + " "):
        raise FeatureFileError(f"{path}: not a feature file (missing '{FEATURE_MAGIC}' magic)")
    version = lines[0].split(None, 1)[1].strip()
    if version != FEATURE_VERSION:
        warnings.warn(f"{path}: feature file version {version}, reader expects {FEATURE_VERSION}")

    header = {}
    body_start = len(lines)
    for i, line in enumerate(lines[1:], 1):
        if not line.startswith("#"):
            body_start = i
            break
        key, _, rest = line[1:].partition(" ")
        header[key] = rest
    try:
        bank_name, bank_hash = header["bank"].split()
        dim = int(header["dim"])
    except (KeyError, ValueError):
        raise FeatureFileError(f"{path}: missing or malformed #bank/#dim header") from None
    specs = [s for s in header.get("specs", "").split(";") if s]
    try:
        config = json.loads(header.get("config", "{}"))
    except json.JSONDecodeError:
        raise FeatureFileError(f"{path}: malformed #config header") from None
    if specs and len(specs) * BLOCK_SIZE != dim:
        raise FeatureFileError(f"{path}: #dim {dim} does not match {len(specs)} filtrations")
    if specs and FiltrationBank.from_strings(bank_name, specs).hash != bank_hash:
        warnings.warn(f"{path}: bank hash {bank_hash} does not match its spec list")
    if expected_bank_hash is not None and bank_hash != expected_bank_hash:
        warnings.warn(f"{path}: bank hash {bank_hash} differs from expected {expected_bank_hash}")

    labels, rows = [], []
    for lineno, line in enumerate(lines[body_start:], body_start + 1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != dim + 1:
            raise FeatureFileError(f"{path}:{lineno}: expected {dim} values, found {len(parts) - 1}")
        try:
            rows.append([float(v) for v in parts[1:]])
        except ValueError:
            raise FeatureFileError(f"{path}:{lineno}: non-numeric feature value") from None
        labels.append(parts[0])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    if not np.all(np.isfinite(X)):
        raise FeatureFileError(f"{path}: non-finite feature values")
    return LabeledDataset(X, labels, bank_name, bank_hash, specs, config)
