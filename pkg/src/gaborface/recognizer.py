"""Per-person recognition with an ensemble of tiny sigmoid networks.

Each enrolled person gets one network with a single hidden layer and one
output unit; the person whose network responds strongest claims the
sample.  Training is plain per-sample gradient descent on squared error
with seeded shuffling, after min-max normalization fitted on the training
set only.  The whole ensemble is trained in one pass over stacked weight
arrays, which is arithmetically identical to training the networks one by
one (their gradients never interact) but avoids a Python loop per person.

Evaluation sweeps feature kinds against train/test ratios, averaging each
cell over several seeded stratified splits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateTaskError,
    InvalidInputError,
    InvalidParameterError,
    ModelFormatError,
)

MODEL_MAGIC = "gaborface-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 16
    learning_rate: float = 0.05
    epochs: int = 300
    seed: object = 0  # anything numpy's default_rng accepts
    early_stop_loss: float = 1e-4

    def __post_init__(self):
        if self.hidden < 1:
            raise InvalidParameterError(f"hidden units must be >= 1, got {self.hidden!r}")
        if not self.learning_rate > 0:
            raise InvalidParameterError(f"learning rate must be positive, got {self.learning_rate!r}")
        if self.epochs < 1:
            raise InvalidParameterError(f"epochs must be >= 1, got {self.epochs!r}")
        if self.early_stop_loss < 0:
            raise InvalidParameterError("early stop tolerance must be >= 0")


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple[float, ...] = (0.6, 0.5, 0.3)
    combinations: int = 5
    base_seed: int = 0

    def __post_init__(self):
        for f in self.fractions:
            if not 0.0 < f < 1.0:
                raise InvalidParameterError(f"train fraction must lie in (0, 1), got {f!r}")
        if self.combinations < 1:
            raise InvalidParameterError("need at least one split combination")


@dataclass(frozen=True)
class NormStats:
    """Per-dimension min-max scaling fitted on training vectors."""

    low: np.ndarray
    high: np.ndarray

    @classmethod
    def fit(cls, vectors: np.ndarray) -> "NormStats":
        x = _as_matrix(vectors)
        if x.shape[0] == 0:
            raise InvalidInputError("cannot fit normalization on an empty set")
        return cls(low=x.min(axis=0), high=x.max(axis=0))

    def transform(self, vectors: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        if x.shape[1] != self.low.shape[0]:
            raise InvalidInputError(
                f"expected {self.low.shape[0]}-dim vectors, got {x.shape[1]}")
        span = self.high - self.low
        safe = np.where(span > 0, span, 1.0)
        out = (x - self.low) / safe
        # A dimension that never varied in training carries no signal.
        out[:, span <= 0] = 0.0
        return out


def _as_matrix(vectors) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise InvalidInputError(f"expected a 2-d feature matrix, got shape {x.shape}")
    return x


def _sigmoid(z):
    # exp overflow on strongly negative z saturates to the correct limit 0.
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def _stack_forward(w1, b1, w2, b2, x):
    """Forward pass for P stacked networks on one sample.

    Shapes: w1 (P,H,N), b1 (P,H), w2 (P,H), b2 (P,), x (N,).
    Returns (a1, y) with a1 (P,H) and y (P,).
    """
    a1 = _sigmoid(w1 @ x + b1)
    y = _sigmoid(np.einsum("ph,ph->p", w2, a1) + b2)
    return a1, y


def _stack_backward(w1, b1, w2, b2, x, target, a1, y):
    """Gradients of the per-network loss 0.5 * (y - t)^2.

    Returns (loss, gw1, gb1, gw2, gb2) with loss per network.
    """
    err = y - target
    loss = 0.5 * err * err
    dy = err * y * (1.0 - y)
    gb2 = dy
    gw2 = dy[:, None] * a1
    dz1 = (dy[:, None] * w2) * a1 * (1.0 - a1)
    gb1 = dz1
    gw1 = dz1[:, :, None] * x[None, None, :]
    return loss, gw1, gb1, gw2, gb2


@dataclass(frozen=True)
class MlpNet:
    """One person's network: inputs -> hidden sigmoid layer -> one sigmoid."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def __post_init__(self):
        if self.w1.ndim != 2 or self.b1.shape != (self.w1.shape[0],) \
                or self.w2.shape != (self.w1.shape[0],):
            raise InvalidInputError("inconsistent network shapes")

    @property
    def num_inputs(self) -> int:
        return self.w1.shape[1]

    @property
    def num_hidden(self) -> int:
        return self.w1.shape[0]

    def forward(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.num_inputs,):
            raise InvalidInputError(f"expected {self.num_inputs} inputs, got shape {x.shape}")
        _, y = _stack_forward(self.w1[None], self.b1[None], self.w2[None],
                              np.array([self.b2]), x)
        return float(y[0])

    def loss_gradients(self, x, target: float):
        """Loss and gradients for one sample, matching the training math."""
        x = np.asarray(x, dtype=np.float64)
        w1, b1 = self.w1[None], self.b1[None]
        w2, b2 = self.w2[None], np.array([self.b2])
        a1, y = _stack_forward(w1, b1, w2, b2, x)
        loss, gw1, gb1, gw2, gb2 = _stack_backward(
            w1, b1, w2, b2, x, np.array([float(target)]), a1, y)
        return float(loss[0]), gw1[0], gb1[0], gw2[0], float(gb2[0])


@dataclass
class Ensemble:
    """Stacked per-person networks plus everything needed to use them."""

    labels: tuple[str, ...]
    w1: np.ndarray  # (P, H, N)
    b1: np.ndarray  # (P, H)
    w2: np.ndarray  # (P, H)
    b2: np.ndarray  # (P,)
    stats: NormStats
    feature_kind: str = "unknown"
    orientations: int | None = None
    loss_history: np.ndarray | None = field(default=None, compare=False)

    @property
    def num_persons(self) -> int:
        return len(self.labels)

    @property
    def num_inputs(self) -> int:
        return self.w1.shape[2]

    @property
    def num_hidden(self) -> int:
        return self.w1.shape[1]

    def net(self, index: int) -> MlpNet:
        return MlpNet(self.w1[index], self.b1[index], self.w2[index], float(self.b2[index]))


def train(vectors, labels, cfg: TrainConfig | None = None,
          feature_kind: str = "unknown", orientations: int | None = None) -> Ensemble:
    """Train one network per distinct label (sorted order).

    Targets are 1 for the network's own person and 0 for everyone else;
    every network sees every training sample.  Raises
    :class:`DegenerateTaskError` with fewer than two persons.
    """
    cfg = cfg or TrainConfig()
    x = _as_matrix(vectors)
    labels = [str(l) for l in labels]
    if len(labels) != x.shape[0]:
        raise InvalidInputError(f"{x.shape[0]} vectors but {len(labels)} labels")
    names = tuple(sorted(set(labels)))
    if len(names) < 2:
        raise DegenerateTaskError(f"need at least two persons, got {len(names)}")

    stats = NormStats.fit(x)
    xn = stats.transform(x)
    n, dim = xn.shape
    p = len(names)
    h = cfg.hidden
    index = {name: i for i, name in enumerate(names)}
    targets = np.zeros((n, p))
    targets[np.arange(n), [index[l] for l in labels]] = 1.0

    rng = np.random.default_rng(cfg.seed)
    w1 = rng.uniform(-0.5, 0.5, size=(p, h, dim))
    b1 = rng.uniform(-0.5, 0.5, size=(p, h))
    w2 = rng.uniform(-0.5, 0.5, size=(p, h))
    b2 = rng.uniform(-0.5, 0.5, size=p)

    lr = cfg.learning_rate
    grad_w1 = np.empty_like(w1)
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        sq = np.zeros(p)
        for i in order:
            xi = xn[i]
            a1 = _sigmoid(w1 @ xi + b1)
            y = _sigmoid(np.einsum("ph,ph->p", w2, a1) + b2)
            err = y - targets[i]
            sq += err * err
            dy = err * y * (1.0 - y)
            dz1 = (dy[:, None] * w2) * a1 * (1.0 - a1)
            b2 -= lr * dy
            w2 -= (lr * dy)[:, None] * a1
            b1 -= lr * dz1
            np.multiply(dz1[:, :, None], xi[None, None, :], out=grad_w1)
            grad_w1 *= lr
            w1 -= grad_w1
        epoch_loss = 0.5 * sq / n
        history.append(epoch_loss)
        if float(epoch_loss.mean()) <= cfg.early_stop_loss:
            break

    return Ensemble(labels=names, w1=w1, b1=b1, w2=w2, b2=b2, stats=stats,
                    feature_kind=feature_kind, orientations=orientations,
                    loss_history=np.array(history))


def scores_batch(ensemble: Ensemble, vectors) -> np.ndarray:
    """(n, P) network outputs for a batch of raw feature vectors."""
    xn = ensemble.stats.transform(_as_matrix(vectors))
    z1 = np.einsum("phn,bn->bph", ensemble.w1, xn) + ensemble.b1
    a1 = _sigmoid(z1)
    z2 = np.einsum("bph,ph->bp", a1, ensemble.w2) + ensemble.b2
    return _sigmoid(z2)


def predict(ensemble: Ensemble, vector) -> tuple[str, np.ndarray]:
    """Label of the strongest network plus all scores.

    Ties go to the earliest label in the ensemble's sorted order.
    """
    v = np.asarray(vector, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidInputError(f"expected a single vector, got shape {v.shape}")
    if v.shape[0] != ensemble.num_inputs:
        raise InvalidInputError(
            f"expected {ensemble.num_inputs} inputs, got {v.shape[0]}")
    scores = scores_batch(ensemble, v[None, :])[0]
    return ensemble.labels[int(np.argmax(scores))], scores


def evaluate(ensemble: Ensemble, vectors, labels) -> float:
    """Fraction of samples whose strongest network matches the label."""
    x = _as_matrix(vectors)
    labels = [str(l) for l in labels]
    if len(labels) != x.shape[0]:
        raise InvalidInputError(f"{x.shape[0]} vectors but {len(labels)} labels")
    if not labels:
        raise InvalidInputError("cannot evaluate on an empty set")
    scores = scores_batch(ensemble, x)
    predicted = np.argmax(scores, axis=1)
    truth = np.array([ensemble.labels.index(l) if l in ensemble.labels else -1
                      for l in labels])
    return float(np.mean(predicted == truth))


def stratified_split(labels, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Per-person split: round(fraction * n) samples train, rest test.

    `rng` is a numpy Generator (or a seed for one).  Persons are processed
    in sorted label order; each person keeps at least one sample on the
    train side, and at least one on the test side when they have two or
    more.  The two index arrays are sorted and disjoint and cover the
    dataset.
    """
    if not 0.0 < fraction < 1.0:
        raise InvalidParameterError(f"train fraction must lie in (0, 1), got {fraction!r}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    labels = [str(l) for l in labels]
    train_idx, test_idx = [], []
    for name in sorted(set(labels)):
        idx = np.array([i for i, l in enumerate(labels) if l == name])
        n = idx.size
        take = round(fraction * n)
        take = max(1, min(take, n - 1)) if n > 1 else 1
        shuffled = idx[rng.permutation(n)]
        train_idx.extend(shuffled[:take])
        test_idx.extend(shuffled[take:])
    return np.sort(np.array(train_idx, dtype=int)), np.sort(np.array(test_idx, dtype=int))


@dataclass(frozen=True)
class CellResult:
    feature_name: str
    fraction: float
    rates: tuple[float, ...]

    @property
    def mean_rate(self) -> float:
        return float(np.mean(self.rates)) if self.rates else math.nan


@dataclass
class ExperimentResult:
    """Recognition-rate table: feature configurations x train fractions."""

    feature_names: tuple[str, ...]
    fractions: tuple[float, ...]
    cells: dict
    failures: list

    def mean_rate(self, feature_name: str, fraction: float) -> float:
        cell = self.cells.get((feature_name, fraction))
        return cell.mean_rate if cell else math.nan

    def to_csv_text(self) -> str:
        header = ["features"] + [_fraction_label(f) for f in self.fractions]
        lines = [",".join(header)]
        for name in self.feature_names:
            row = [name]
            for f in self.fractions:
                rate = self.mean_rate(name, f)
                row.append("" if math.isnan(rate) else f"{100.0 * rate:.4f}")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="ascii")


def _fraction_label(fraction: float) -> str:
    train = int(round(100 * fraction))
    return f"{train}-{100 - train}"


def run_experiment(feature_sets, labels, split: SplitSpec | None = None,
                   cfg: TrainConfig | None = None) -> ExperimentResult:
    """Sweep feature sets against split ratios.

    `feature_sets` maps a display name to an (n, d) matrix over the same
    n samples labeled by `labels` (insertion order becomes row order).
    Every (ratio, combination) pair reuses one stratified split across all
    feature sets, so rows are compared on identical data.  A failing cell
    is recorded and skipped rather than aborting the sweep.
    """
    split = split or SplitSpec()
    cfg = cfg or TrainConfig()
    labels = [str(l) for l in labels]
    names = list(feature_sets)
    matrices = {name: _as_matrix(feature_sets[name]) for name in names}
    for name, m in matrices.items():
        if m.shape[0] != len(labels):
            raise InvalidInputError(
                f"feature set {name!r} has {m.shape[0]} rows for {len(labels)} labels")

    cells = {}
    failures = []
    for fi, fraction in enumerate(split.fractions):
        splits = []
        for ci in range(split.combinations):
            rng = np.random.default_rng([split.base_seed, int(round(fraction * 100)), ci])
            splits.append(stratified_split(labels, fraction, rng))
        for ri, name in enumerate(names):
            x = matrices[name]
            rates = []
            for ci, (tr, te) in enumerate(splits):
                try:
                    seed = np.random.SeedSequence(
                        [_seed_int(cfg.seed), fi, ci, ri]).generate_state(1)[0]
                    cell_cfg = replace(cfg, seed=int(seed))
                    ens = train(x[tr], [labels[i] for i in tr], cell_cfg,
                                feature_kind=name)
                    rates.append(evaluate(ens, x[te], [labels[i] for i in te]))
                except Exception as exc:  # noqa: BLE001 - cell isolation
                    failures.append((name, fraction, ci, f"{type(exc).__name__}: {exc}"))
            cells[(name, fraction)] = CellResult(name, fraction, tuple(rates))
    return ExperimentResult(tuple(names), tuple(split.fractions), cells, failures)


def _seed_int(seed) -> int:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


def save_model(ensemble: Ensemble, path) -> None:
    """Write the ensemble as versioned plain text.

    Floats are written with repr (shortest exact form), so a load followed
    by a save reproduces the file byte for byte.
    """
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        f"feature_kind {ensemble.feature_kind}",
        f"orientations {'none' if ensemble.orientations is None else ensemble.orientations}",
        f"inputs {ensemble.num_inputs}",
        f"hidden {ensemble.num_hidden}",
        f"persons {ensemble.num_persons}",
    ]
    lines.extend(f"label {name}" for name in ensemble.labels)
    lines.append("norm_low")
    lines.extend(repr(float(v)) for v in ensemble.stats.low)
    lines.append("norm_high")
    lines.extend(repr(float(v)) for v in ensemble.stats.high)
    for k in range(ensemble.num_persons):
        lines.append(f"net {k}")
        for block in (ensemble.w1[k].ravel(), ensemble.b1[k], ensemble.w2[k]):
            lines.extend(repr(float(v)) for v in block)
        lines.append(repr(float(ensemble.b2[k])))
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_model(path) -> Ensemble:
    """Read a model file written by :func:`save_model`."""
    text = Path(path).read_text(encoding="ascii")
    lines = text.splitlines()
    pos = 0

    def next_line(context: str) -> str:
        nonlocal pos
        if pos >= len(lines):
            raise ModelFormatError(context, "unexpected end of file")
        line = lines[pos]
        pos += 1
        return line

    def take_floats(count: int, context: str) -> np.ndarray:
        out = np.empty(count)
        for i in range(count):
            token = next_line(context)
            try:
                out[i] = float(token)
            except ValueError:
                raise ModelFormatError(context, f"bad float {token!r}") from None
        return out

    header = next_line("magic").split()
    if len(header) != 2 or header[0] != MODEL_MAGIC:
        raise ModelFormatError("magic", f"expected {MODEL_MAGIC!r}, got {lines[0]!r}")
    if header[1] != str(MODEL_VERSION):
        raise ModelFormatError("version", f"unsupported version {header[1]!r}")

    fields = {}
    for key in ("feature_kind", "orientations", "inputs", "hidden", "persons"):
        line = next_line(key)
        name, _, value = line.partition(" ")
        if name != key or not value:
            raise ModelFormatError(key, f"expected {key!r} line, got {line!r}")
        fields[key] = value
    try:
        dim = int(fields["inputs"])
        hidden = int(fields["hidden"])
        persons = int(fields["persons"])
    except ValueError as exc:
        raise ModelFormatError("header", str(exc)) from None
    if min(dim, hidden, persons) < 1:
        raise ModelFormatError("header", "non-positive dimensions")
    orientations = None if fields["orientations"] == "none" else int(fields["orientations"])

    names = []
    for _ in range(persons):
        line = next_line("label")
        key, _, value = line.partition(" ")
        if key != "label" or not value:
            raise ModelFormatError("label", f"expected a label line, got {line!r}")
        names.append(value)

    if next_line("norm_low") != "norm_low":
        raise ModelFormatError("norm_low", "marker missing")
    low = take_floats(dim, "norm_low")
    if next_line("norm_high") != "norm_high":
        raise ModelFormatError("norm_high", "marker missing")
    high = take_floats(dim, "norm_high")

    w1 = np.empty((persons, hidden, dim))
    b1 = np.empty((persons, hidden))
    w2 = np.empty((persons, hidden))
    b2 = np.empty(persons)
    for k in range(persons):
        if next_line("net") != f"net {k}":
            raise ModelFormatError("net", f"expected 'net {k}'")
        w1[k] = take_floats(hidden * dim, f"net {k} w1").reshape(hidden, dim)
        b1[k] = take_floats(hidden, f"net {k} b1")
        w2[k] = take_floats(hidden, f"net {k} w2")
        b2[k] = take_floats(1, f"net {k} b2")[0]
    if next_line("end") != "end":
        raise ModelFormatError("end", "trailer missing")

    return Ensemble(labels=tuple(names), w1=w1, b1=b1, w2=w2, b2=b2,
                    stats=NormStats(low=low, high=high),
                    feature_kind=fields["feature_kind"], orientations=orientations)
