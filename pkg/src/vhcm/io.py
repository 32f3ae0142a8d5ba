"""File formats: experiment config, dataset records, model weights."""

import configparser
import csv
import hashlib
import json
import struct
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .grid import Grid, Material, make_grid
from .labeling import Dataset
from .loads import Family, LoadSpec
from .nn import CnnModel, ConvLayer, DenseLayer, Flatten, MaxPool, TrainConfig
from .solver import BoundaryConditions, Dirichlet, Neumann

DATASET_VERSION = 1
MAGIC = b"VHCMNN1"
SPEC_FIELDS = [f.name for f in fields(LoadSpec)]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Everything a run depends on. Keys serialize as ``section.name = value``."""

    grid_length: float = 1.0
    grid_n: int = 256
    grid_m: int = 8
    material_E: float = 1.0
    material_A: float = 1.0
    bc_left: float = 0.0
    bc_right: str = "neumann"
    bc_value: float = 0.0
    eps: float = 0.01
    roster_per_family: int = 151
    roster_polynomial: int = 182
    roster_families: str = "f1,f2"
    roster_negate: bool = True
    split_train: float = 0.75
    split_validation: float = 0.10
    split_test: float = 0.15
    train_learning_rate: float = 0.001
    train_batch_size: int = 32
    train_max_epochs: int = 200
    train_patience: int = 10
    case: str = "window"
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.case not in ("full_domain", "window"):
            raise ConfigError(f"case must be full_domain or window, got {self.case!r}")
        if self.bc_right not in ("neumann", "dirichlet"):
            raise ConfigError(f"bc.right must be neumann or dirichlet, got {self.bc_right!r}")
        if abs(self.split_train + self.split_validation + self.split_test - 1.0) > 1e-9:
            raise ConfigError("split fractions must sum to 1")
        try:
            self.families
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @staticmethod
    def key(name: str) -> str:
        return name.replace("_", ".", 1)

    @property
    def grid(self) -> Grid:
        try:
            return make_grid(self.grid_length, self.grid_n, self.grid_m)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def material(self) -> Material:
        return Material(self.material_E, self.material_A)

    @property
    def bc(self) -> BoundaryConditions:
        right = Neumann(self.bc_value) if self.bc_right == "neumann" else Dirichlet(self.bc_value)
        return BoundaryConditions(Dirichlet(self.bc_left), right)

    @property
    def fractions(self):
        return (self.split_train, self.split_validation, self.split_test)

    @property
    def families(self):
        return tuple(Family(f.strip()) for f in self.roster_families.split(",") if f.strip())

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.train_learning_rate, self.train_batch_size,
                           self.train_max_epochs, self.train_patience, self.seed)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{self.key(f.name)} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, **overrides) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            parser.read_string("[config]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        by_key = {cls.key(f.name): f for f in fields(cls)}
        kw = {}
        for key, raw in parser["config"].items():
            if key not in by_key:
                raise ConfigError(f"unknown config key {key!r}")
            f = by_key[key]
            kw[f.name] = _coerce(f.type, raw, key)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, **overrides)


def _coerce(tp, raw: str, key: str):
    try:
        if tp is bool:
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        return tp(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def _fmt(v) -> str:
    return format(float(v), ".17g")


# dataset file: one header line, one column-name line, then one record per sample

def write_dataset(path, dataset: Dataset, grid: Grid, eps: float) -> None:
    in_w = dataset.inputs.shape[1]
    out_w = dataset.labels.shape[1]
    header = (f"# vhcm-dataset version={DATASET_VERSION} case={dataset.case} length={grid.length!r} "
              f"n={grid.n} m={grid.m} seed={dataset.seed} eps={eps!r} inputs={in_w} labels={out_w}")
    cols = (["split"] + SPEC_FIELDS + ["center"]
            + [f"x{i}" for i in range(in_w)] + [f"y{i}" for i in range(out_w)])
    spec_rows = []
    for s in dataset.specs:
        rec = s.to_record()
        spec_rows.append([rec["family"]] + [
            ("1" if rec[k] else "0") if k == "negated" else _fmt(rec[k]) for k in SPEC_FIELDS[1:]])
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        fh.write(",".join(cols) + "\n")
        for i in range(len(dataset)):
            row = [dataset.split[i]] + spec_rows[dataset.source[i]] + [str(int(dataset.center[i]))]
            row += [_fmt(v) for v in dataset.inputs[i]]
            row += [str(int(v)) for v in dataset.labels[i]]
            fh.write(",".join(row) + "\n")


def read_dataset(path):
    """Returns ``(dataset, header)`` where header holds grid and run metadata."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# vhcm-dataset"):
            raise ConfigError(f"{path} is not a dataset file")
        header = dict(tok.split("=", 1) for tok in first[2:].split()[1:])
        if int(header["version"]) != DATASET_VERSION:
            raise ConfigError(f"unsupported dataset version {header['version']}")
        reader = csv.reader(fh)
        cols = next(reader)
        in_w, out_w = int(header["inputs"]), int(header["labels"])
        ns = len(SPEC_FIELDS)
        split, source, center, xs, ys = [], [], [], [], []
        specs, index = [], {}
        for row in reader:
            split.append(row[0])
            key = tuple(row[1:1 + ns])
            if key not in index:
                index[key] = len(specs)
                specs.append(LoadSpec.from_record(dict(zip(SPEC_FIELDS, key))))
            source.append(index[key])
            center.append(int(row[1 + ns]))
            xs.append(row[2 + ns:2 + ns + in_w])
            ys.append(row[2 + ns + in_w:2 + ns + in_w + out_w])
    ds = Dataset(np.array(xs, dtype=float).reshape(-1, in_w), np.array(ys, dtype=np.int8).reshape(-1, out_w),
                 np.array(split, dtype=str), specs, np.array(source, dtype=np.int64),
                 np.array(center, dtype=np.int64), header["case"], int(header["seed"]))
    header["grid"] = make_grid(float(header["length"]), int(header["n"]), int(header["m"]))
    header["eps"] = float(header["eps"])
    return ds, header


def checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# model weights: magic, little-endian shape headers, then raw float64 arrays

_ACT = {"relu": 0, "sigmoid": 1, "none": 2}


def write_model(path, model: CnnModel, train_config: TrainConfig = None, dataset_sha256: str = None) -> None:
    buf = bytearray(MAGIC)
    buf += struct.pack("<III", model.output_size, model.input_length, len(model.layers))
    for layer in model.layers:
        if isinstance(layer, ConvLayer):
            buf += struct.pack("<BIII", 0, *layer.kernels.shape)
        elif isinstance(layer, MaxPool):
            buf += struct.pack("<B", 1)
        elif isinstance(layer, Flatten):
            buf += struct.pack("<B", 2)
        else:
            buf += struct.pack("<BIIB", 3, *layer.weights.shape, _ACT[layer.activation])
    for p in model.params:
        buf += np.ascontiguousarray(p, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(buf))
    side = {"format": MAGIC.decode(), "input_length": model.input_length,
            "output_size": model.output_size,
            "train_config": asdict(train_config) if train_config else None,
            "dataset_sha256": dataset_sha256}
    Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")


def read_model(path) -> CnnModel:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ConfigError(f"{path} is not a model file")
    off = len(MAGIC)
    out_size, in_len, nlayers = struct.unpack_from("<III", data, off)
    off += 12
    layers, shapes = [], []
    acts = {v: k for k, v in _ACT.items()}
    for _ in range(nlayers):
        (kind,) = struct.unpack_from("<B", data, off)
        off += 1
        if kind == 0:
            shp = struct.unpack_from("<III", data, off)
            off += 12
            layers.append(("conv", shp))
        elif kind == 1:
            layers.append(("pool", None))
        elif kind == 2:
            layers.append(("flatten", None))
        elif kind == 3:
            o, i, a = struct.unpack_from("<IIB", data, off)
            off += 9
            layers.append(("dense", (o, i, acts[a])))
        else:
            raise ConfigError(f"unknown layer kind {kind} in {path}")

    def take(shape):
        nonlocal off
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).astype(float).reshape(shape)
        off += 8 * count
        return arr

    built = []
    for kind, shp in layers:
        if kind == "conv":
            k = take(shp)
            built.append(ConvLayer(k, take((shp[0],))))
        elif kind == "pool":
            built.append(MaxPool())
        elif kind == "flatten":
            built.append(Flatten())
        else:
            o, i, a = shp
            w = take((o, i))
            built.append(DenseLayer(w, take((o,)), a))
    return CnnModel(built, in_len, out_size)


def read_load_csv(path, grid: Grid) -> np.ndarray:
    """Nodal load values from a CSV with either one column (f) or two (x, f)."""
    arr = np.genfromtxt(path, delimiter=",", comments="#")
    if arr.ndim == 2 and np.isnan(arr[0]).all():
        arr = arr[1:]
    if arr.ndim == 1 and np.isnan(arr[0]):
        arr = arr[1:]
    values = arr[:, -1] if arr.ndim == 2 else arr
    if values.size != grid.node_count:
        raise ConfigError(f"{path} has {values.size} load values, grid has {grid.node_count} nodes")
    return values.astype(float)
