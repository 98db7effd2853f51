"""Dataset ingestion, preprocessing, splitting, and a synthetic generator.

The on-disk format is PMLB-style TSV: tab-separated, UTF-8, one header row,
the target column literally named ``target``.  Remote datasets are fetched
once into ``cache_dir/<name>/<name>.tsv`` and reused from there.

Preprocessing follows the source experiments: features are standardized with
the population mean/std and the target is min-max scaled to [0, 1] on the
*whole* dataset, before splitting (a deliberate, documented leakage-style
simplification).
"""

from __future__ import annotations

import csv
import gzip
import math
import urllib.error
import urllib.request
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "SplitDataset",
    "FetchError",
    "DEFAULT_PMLB_URL",
    "load_tsv",
    "write_tsv",
    "fetch_pmlb",
    "preprocess",
    "split",
    "friedman1",
    "friedman_response",
]

DEFAULT_PMLB_URL = "https://github.com/EpistasisLab/pmlb/raw/master/datasets/{name}/{name}.tsv.gz"


class FetchError(RuntimeError):
    """A remote dataset could not be retrieved (and was not cached)."""


@dataclass(eq=False)
class Dataset:
    """Immutable-by-convention feature matrix + target vector.

    ``feature_mean``/``feature_std`` and ``target_min``/``target_max`` record
    the transforms applied by :func:`preprocess` (None on raw data).
    """

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...] = ()
    feature_mean: np.ndarray | None = None
    feature_std: np.ndarray | None = None
    target_min: float | None = None
    target_max: float | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D (samples x features), got shape {self.features.shape}")
        if self.target.ndim != 1 or self.target.size != self.features.shape[0]:
            raise ValueError(
                f"target must be 1-D with one entry per row; got {self.target.shape} "
                f"for {self.features.shape[0]} rows"
            )
        if not self.feature_names:
            self.feature_names = tuple(f"x{i}" for i in range(self.features.shape[1]))
        else:
            self.feature_names = tuple(self.feature_names)
            if len(self.feature_names) != self.features.shape[1]:
                raise ValueError(
                    f"{len(self.feature_names)} feature names for {self.features.shape[1]} columns"
                )

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def rows(self, index) -> "Dataset":
        """Dataset restricted to the given row indices (transforms carried over)."""
        return replace(self, features=self.features[index], target=self.target[index])


@dataclass(eq=False)
class SplitDataset:
    train: Dataset
    test: Dataset
    seed: int
    ratio: float


# ---------------------------------------------------------------------------
# TSV I/O


def load_tsv(path) -> Dataset:
    """Parse a PMLB-style TSV file (header row, a column named ``target``)."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if "target" not in header:
            raise ValueError(f"{path}: no column named 'target' (columns: {header})")
        target_col = header.index("target")
        feature_cols = [i for i in range(len(header)) if i != target_col]
        feature_rows: list[list[float]] = []
        target_rows: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # tolerate a trailing blank line
            if len(row) != len(header):
                raise ValueError(f"{path}: row at line {lineno} has {len(row)} cells, expected {len(header)}")
            parsed = []
            for i in feature_cols + [target_col]:
                cell = row[i].strip()
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: unparseable value {cell!r} at line {lineno}, column {header[i]!r}"
                    ) from None
            feature_rows.append(parsed[:-1])
            target_rows.append(parsed[-1])
    if not feature_rows:
        raise ValueError(f"{path}: no data rows")
    return Dataset(
        features=np.array(feature_rows, dtype=np.float64),
        target=np.array(target_rows, dtype=np.float64),
        feature_names=tuple(header[i] for i in feature_cols),
    )


def write_tsv(dataset: Dataset, path) -> None:
    """Inverse of load_tsv; floats are written with repr precision (lossless)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(list(dataset.feature_names) + ["target"])
        for x, y in zip(dataset.features, dataset.target):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def fetch_pmlb(name: str, cache_dir, base_url: str = DEFAULT_PMLB_URL, timeout: float = 60.0) -> Path:
    """Download (once) and cache a PMLB dataset; returns the local TSV path.

    ``base_url`` is a template with a ``{name}`` placeholder; ``.gz`` payloads
    are decompressed transparently.  A warm cache never touches the network.
    """
    if not name or "/" in name or name in (".", ".."):
        raise ValueError(f"invalid dataset name {name!r}")
    target = Path(cache_dir) / name / f"{name}.tsv"
    if target.exists():
        return target
    url = base_url.format(name=name)
    try:
        with urllib.request.urlopen(url, timeout=timeout) as response:
            payload = response.read()
    except (urllib.error.URLError, OSError) as exc:
        raise FetchError(
            f"could not fetch dataset {name!r} from {url}: {exc}. "
            f"If you are offline, place the file at {target} yourself."
        ) from exc
    if payload[:2] == b"\x1f\x8b":
        try:
            payload = gzip.decompress(payload)
        except (OSError, EOFError) as exc:
            raise FetchError(f"dataset {name!r}: corrupt gzip payload from {url}: {exc}") from exc
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_suffix(".tsv.part")
    tmp.write_bytes(payload)
    tmp.replace(target)
    return target


# ---------------------------------------------------------------------------
# preprocessing / splitting / synthesis


def preprocess(raw: Dataset) -> Dataset:
    """Standardize features (population std) and min-max scale the target to [0, 1].

    Constant features become all-zero columns (with a warning); a constant
    target is an error because min-max scaling is undefined for it.
    """
    if len(raw) < 2:
        raise ValueError("preprocess needs at least 2 rows")
    mean = raw.features.mean(axis=0)
    std = raw.features.std(axis=0)
    features = np.zeros_like(raw.features)
    for j, s in enumerate(std):
        if s == 0.0:
            warnings.warn(
                f"feature {raw.feature_names[j]!r} is constant; standardized to zeros",
                stacklevel=2,
            )
        else:
            features[:, j] = (raw.features[:, j] - mean[j]) / s
    tmin = float(raw.target.min())
    tmax = float(raw.target.max())
    if tmin == tmax:
        raise ValueError(f"target is constant ({tmin}); min-max scaling is undefined")
    target = (raw.target - tmin) / (tmax - tmin)
    return Dataset(
        features=features,
        target=target,
        feature_names=raw.feature_names,
        feature_mean=mean,
        feature_std=std,
        target_min=tmin,
        target_max=tmax,
    )


def split(dataset: Dataset, ratio: float, seed: int) -> SplitDataset:
    """Random split: first round(ratio * n) permuted rows train, rest test."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    n = len(dataset)
    n_train = int(math.floor(ratio * n + 0.5))
    if n_train == 0 or n_train == n:
        raise ValueError(f"split of {n} rows at ratio {ratio} leaves an empty side")
    order = np.random.default_rng(seed).permutation(n)
    return SplitDataset(
        train=dataset.rows(order[:n_train]),
        test=dataset.rows(order[n_train:]),
        seed=int(seed),
        ratio=float(ratio),
    )


def friedman_response(features) -> np.ndarray:
    """Noise-free Friedman #1 response for a (n, >=5) feature matrix."""
    X = np.asarray(features, dtype=np.float64)
    return (
        10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
        + 20.0 * (X[:, 2] - 0.5) ** 2
        + 10.0 * X[:, 3]
        + 5.0 * X[:, 4]
    )


def friedman1(n_samples: int, noise_std: float, seed: int) -> Dataset:
    """Synthetic Friedman #1 regression problem (10 uniform features, 5 used):

        y = 10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4 + Normal(0, noise_std^2)

    Features x5..x9 are pure noise inputs.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n_samples, 10))
    y = friedman_response(X) + rng.normal(0.0, noise_std, size=n_samples)
    return Dataset(features=X, target=y)
