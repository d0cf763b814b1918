"""Dataset construction, hold-out splitting and the benchmark suites.

A dataset directory holds ``manifest.csv`` (``path,label,experiment_id,
frame_index,seed``), one PGM per frame under ``maps/`` and optionally the raw
chirp cubes under ``cubes/``. Labels are 1 for human, 0 for robot.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from rdclass import HUMAN, LABEL_NAMES, ROBOT
from rdclass.convnet import ConvNetClassifier, TrainConfig, train as train_convnet
from rdclass.errors import DataError, EmptyTargetError, RdclassError
from rdclass.features import N_FEATURES, buffer_concat, buffered_windows, extract_features
from rdclass.metrics import ConfusionMatrix
from rdclass.models.base import Classifier, LabeledDataset
from rdclass.models.classical import fit_decision_tree, fit_knn, fit_linear_svm, fit_logistic_regression
from rdclass.models.ensemble import fit_gradient_boosting, fit_random_forest
from rdclass.radar_design import RadarConfig, derive_params
from rdclass.rdmap import RDMap, compute_rd_map, load_rd_map, to_network_input, write_pgm
from rdclass.restructure import restructure
from rdclass.simulator import GaitParams, RobotParams, simulate_human, simulate_robot, write_cube
from rdclass.thresholding import quantize_and_denoise

log = logging.getLogger(__name__)

MANIFEST_HEADER = ("path", "label", "experiment_id", "frame_index", "seed")
BALANCE_TOLERANCE = 0.05
CLASSICAL_MODELS = ("decision_tree", "logistic_regression", "linear_svm", "knn")
ENSEMBLE_MODELS = ("random_forest", "gradient_boosting")
SUITES = ("classical", "ensemble", "convnet", "latency")


# -- dataset ----------------------------------------------------------------

@dataclass(frozen=True)
class DatasetConfig:
    n_subjects: int = 10
    runs_per_subject: int = 3
    n_robot_types: int = 2
    runs_per_robot: int = 15
    frames_per_run: int = 35
    snr_db: float = 20.0
    max_aspect_deg: float = 60.0
    save_cubes: bool = False

    def validate(self) -> "DatasetConfig":
        if min(self.n_subjects, self.runs_per_subject, self.n_robot_types, self.runs_per_robot) < 0:
            raise DataError("experiment counts must be non-negative")
        if self.n_robot_types > 2:
            raise DataError("two robot types are modelled (mobile platform, reciprocating arm)")
        if not 0 <= self.max_aspect_deg < 80:
            raise DataError("max_aspect_deg must lie in [0, 80)")
        return self


@dataclass(frozen=True)
class ManifestRow:
    path: str
    label: int
    experiment_id: int
    frame_index: int
    seed: int


@dataclass
class Manifest:
    rows: list[ManifestRow]
    root: Path = Path(".")

    def __len__(self) -> int:
        return len(self.rows)

    def resolve(self, row: ManifestRow) -> Path:
        p = Path(row.path)
        return p if p.is_absolute() else self.root / p

    def experiments(self) -> dict[int, tuple[int, int]]:
        """experiment_id -> (label, frame count)."""
        out: dict[int, list[int]] = {}
        for r in self.rows:
            entry = out.setdefault(r.experiment_id, [r.label, 0])
            if entry[0] != r.label:
                raise DataError(f"experiment {r.experiment_id} mixes labels")
            entry[1] += 1
        return {k: (v[0], v[1]) for k, v in sorted(out.items())}

    def subset(self, experiment_ids: Iterable[int]) -> "Manifest":
        keep = set(experiment_ids)
        return Manifest([r for r in self.rows if r.experiment_id in keep], self.root)

    def class_counts(self) -> dict[int, int]:
        counts = {HUMAN: 0, ROBOT: 0}
        for r in self.rows:
            counts[r.label] += 1
        return counts


def write_manifest(path: str | Path, manifest: Manifest) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    for r in manifest.rows:
        w.writerow((r.path, r.label, r.experiment_id, r.frame_index, r.seed))
    Path(path).write_text(buf.getvalue())


def read_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != MANIFEST_HEADER:
        raise DataError(f"{path}: manifest header must be {','.join(MANIFEST_HEADER)}")
    rows = []
    for i, rec in enumerate(reader, start=2):
        try:
            rows.append(ManifestRow(rec["path"], int(rec["label"]), int(rec["experiment_id"]),
                                    int(rec["frame_index"]), int(rec["seed"])))
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}:{i}: malformed manifest row") from exc
        if rows[-1].label not in (HUMAN, ROBOT):
            raise DataError(f"{path}:{i}: label must be 0 or 1")
    if not rows:
        raise DataError(f"{path}: manifest is empty")
    return Manifest(rows, path.parent)


def _rng(master: int, *tags: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(master), *tags])))


def _noise_seed(master: int, experiment_id: int) -> int:
    return int(np.random.SeedSequence([int(master), 2, experiment_id]).generate_state(1, np.uint64)[0])


def _aspect(rng: np.random.Generator, max_deg: float) -> float:
    # exact lateral motion never occurs inside +-60 deg; zero width draws are fine
    return math.radians(rng.uniform(-max_deg, max_deg))


def _start_range(rng, cfg: RadarConfig, travel: float, direction: int, depth: float = 0.0) -> float:
    lo, hi = 0.3 + 0.05, cfg.max_range - 0.3 - 0.05 - depth
    if direction < 0:
        lo += travel
    else:
        hi -= travel
    if hi < lo:
        raise DataError("run does not fit inside the range window; reduce frames_per_run")
    return float(rng.uniform(lo, hi))


def subject_gaits(cfg: RadarConfig, ds: DatasetConfig, master: int) -> list[tuple[int, GaitParams]]:
    """(experiment_id, gait) for every human run; ids 0 .. n_subjects*runs - 1."""
    frame_duration = derive_params(cfg).frame_duration
    out = []
    for s in range(ds.n_subjects):
        sr = _rng(master, 0, s)
        base = dict(
            bulk_velocity=sr.uniform(0.8, 1.5),
            peak_foot_velocity=sr.uniform(3.5, 4.5),
            gait_period=sr.uniform(0.9, 1.2),
            stance_fraction=sr.uniform(0.58, 0.62),
        )
        for run in range(ds.runs_per_subject):
            eid = s * ds.runs_per_subject + run
            rr = _rng(master, 1, eid)
            theta = _aspect(rr, ds.max_aspect_deg)
            direction = int(rr.choice((-1, 1)))
            travel = base["bulk_velocity"] * math.cos(theta) * frame_duration * ds.frames_per_run
            gait = GaitParams(
                **base,
                aspect_angle=theta,
                snr_db=ds.snr_db,
                start_range=_start_range(rr, cfg, travel, direction),
                direction=direction,
                gait_phase=float(rr.uniform(0, 1)),
            )
            out.append((eid, gait))
    return out


def robot_runs(cfg: RadarConfig, ds: DatasetConfig, master: int) -> list[tuple[int, RobotParams]]:
    """(experiment_id, params) for every robot run; ids follow the human ones."""
    derived = derive_params(cfg)
    first = ds.n_subjects * ds.runs_per_subject
    out = []
    for t in range(ds.n_robot_types):
        for run in range(ds.runs_per_robot):
            eid = first + t * ds.runs_per_robot + run
            rr = _rng(master, 1, eid)
            theta = _aspect(rr, ds.max_aspect_deg)
            direction = int(rr.choice((-1, 1)))
            if t == 0:  # mobile platform: long trapezoidal moves
                kw = dict(peak_velocity=rr.uniform(0.4, 1.2), ramp_time=0.5, cruise_time=rr.uniform(1.0, 3.0),
                          dwell_time=rr.uniform(0.0, 0.5), reciprocating=False,
                          offsets=(0.0, 0.15, 0.3, 0.45), amplitudes=(1.0, 0.8, 0.6, 0.7))
            else:  # manipulator arm: short back-and-forth strokes
                kw = dict(peak_velocity=rr.uniform(0.8, 2.0), ramp_time=0.2, cruise_time=rr.uniform(0.2, 0.5),
                          dwell_time=rr.uniform(0.1, 0.3), reciprocating=True,
                          offsets=(0.0, 0.1, 0.2, 0.3), amplitudes=(1.0, 0.6, 0.5, 0.4))
            kw["offsets"] = tuple(o * rr.uniform(0.8, 1.2) for o in kw["offsets"])
            period = 2 * kw["ramp_time"] + kw["cruise_time"] + kw["dwell_time"]
            if kw["reciprocating"]:
                travel = kw["peak_velocity"] * (kw["ramp_time"] + kw["cruise_time"])
            else:
                travel = kw["peak_velocity"] * derived.frame_duration * ds.frames_per_run
            robot = RobotParams(
                **kw,
                aspect_angle=theta,
                snr_db=ds.snr_db,
                direction=direction,
                time_offset=float(rr.uniform(0, period)),
                start_range=0.0,
            )
            depth = math.cos(theta) * max(robot.offsets)
            # reciprocating strokes may start in either direction; leave room both ways
            if kw["reciprocating"]:
                lo, hi = 0.35 + travel, cfg.max_range - 0.35 - depth - travel
                start = float(rr.uniform(lo, hi))
            else:
                start = _start_range(rr, cfg, travel * math.cos(theta), direction, depth)
            out.append((eid, replace(robot, start_range=start)))
    return out


def build_dataset(
    out_dir: str | Path,
    ds: DatasetConfig = DatasetConfig(),
    radar: RadarConfig = RadarConfig(),
    seed: int = 0,
    progress: Callable[[int, int], None] | None = None,
) -> Manifest:
    """Simulate every experiment, write PGM maps (and cubes) plus ``manifest.csv``."""
    ds.validate()
    radar.validate()
    out_dir = Path(out_dir)
    runs: list[tuple[int, object]] = [*subject_gaits(radar, ds, seed), *robot_runs(radar, ds, seed)]
    if ds.frames_per_run <= 0 or not runs:
        raise DataError("dataset configuration yields no frames")
    try:
        (out_dir / "maps").mkdir(parents=True, exist_ok=True)
        if ds.save_cubes:
            (out_dir / "cubes").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create dataset directory {out_dir}: {exc}") from exc
    rows: list[ManifestRow] = []
    truncated = 0
    for i, (eid, params) in enumerate(runs):
        noise_seed = _noise_seed(seed, eid)
        if isinstance(params, GaitParams):
            sim = simulate_human(radar, params, ds.frames_per_run, noise_seed)
        else:
            sim = simulate_robot(radar, params, ds.frames_per_run, noise_seed)
        truncated += sim.truncated
        for cube in sim.frames:
            name = f"e{eid:04d}_f{cube.frame_index:04d}"
            rel = f"maps/{name}.pgm"
            try:
                write_pgm(out_dir / rel, compute_rd_map(cube).pixels)
                if ds.save_cubes:
                    write_cube(out_dir / "cubes" / f"{name}.rdc", cube)
            except OSError as exc:
                raise DataError(f"cannot write frame {name}: {exc}") from exc
            rows.append(ManifestRow(rel, sim.label, eid, cube.frame_index, noise_seed))
        if progress:
            progress(i + 1, len(runs))
    if not rows:
        raise DataError("dataset configuration yields no frames")
    manifest = Manifest(rows, out_dir)
    if truncated:
        log.warning("%d frames truncated because targets left the range window", truncated)
    counts = manifest.class_counts()
    total = sum(counts.values())
    if total and abs(counts[HUMAN] / total - 0.5) > BALANCE_TOLERANCE:
        log.warning("class imbalance: %d human vs %d robot frames", counts[HUMAN], counts[ROBOT])
    try:
        write_manifest(out_dir / "manifest.csv", manifest)
    except OSError as exc:
        raise DataError(f"cannot write manifest: {exc}") from exc
    return manifest


# -- hold-out split -----------------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]

    def set_of(self, experiment_id: int) -> str:
        for name in ("train", "validation", "test"):
            if experiment_id in getattr(self, name):
                return name
        raise KeyError(experiment_id)


def _take_until(ids: Sequence[int], sizes: dict[int, int], target: float, keep: int) -> list[int]:
    """Leading ids whose sizes first reach ``target``; at least ``keep`` ids stay behind."""
    taken, total = [], 0
    for eid in ids:
        if total >= target or len(ids) - len(taken) <= keep:
            break
        taken.append(eid)
        total += sizes[eid]
    return taken


def holdout_split(manifest: Manifest | dict[int, tuple[int, int]], test_fraction: float = 0.2,
                  val_fraction: float = 0.15, seed: int = 0) -> SplitPlan:
    """Whole experiments per class: shuffled, then moved to test until the test
    share of that class first reaches ``test_fraction``; validation likewise from
    the remainder. ``manifest`` may also be a mapping id -> (label, size)."""
    if not (0 < test_fraction < 1 and 0 <= val_fraction < 1):
        raise DataError("fractions must lie in (0, 1)")
    experiments = manifest.experiments() if isinstance(manifest, Manifest) else dict(sorted(manifest.items()))
    rng = _rng(seed, 3)
    train, val, test = [], [], []
    for label in (HUMAN, ROBOT):
        ids = [e for e, (lab, _) in experiments.items() if lab == label]
        if len(ids) < 3:
            raise DataError(f"need at least 3 {LABEL_NAMES[label]} experiments, got {len(ids)}")
        sizes = {e: experiments[e][1] for e in ids}
        ids = [ids[i] for i in rng.permutation(len(ids))]
        t = _take_until(ids, sizes, test_fraction * sum(sizes.values()), keep=2)
        rest = ids[len(t):]
        v = _take_until(rest, sizes, val_fraction * sum(sizes[e] for e in rest), keep=1) if val_fraction else []
        test += t
        val += v
        train += rest[len(v):]
    return SplitPlan(tuple(sorted(train)), tuple(sorted(val)), tuple(sorted(test)))


def write_split(path: str | Path, manifest: Manifest, plan: SplitPlan) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("experiment_id", "label", "frames", "set"))
    for eid, (label, n) in manifest.experiments().items():
        w.writerow((eid, label, n, plan.set_of(eid)))
    Path(path).write_text(buf.getvalue())


# -- derived per-frame data -----------------------------------------------------

@dataclass
class FrameTable:
    """Per-frame derived inputs, in manifest order."""

    labels: np.ndarray
    experiment_ids: np.ndarray
    frame_indices: np.ndarray
    features: np.ndarray | None = None  # (N, 7); NaN rows where no target was found
    profiles: np.ndarray | None = None  # (N, 512)
    images: np.ndarray | None = None  # (N, 200, 200) float32

    def rows(self, experiment_ids: Iterable[int]) -> np.ndarray:
        return np.flatnonzero(np.isin(self.experiment_ids, list(experiment_ids)))


def frame_features(rd: RDMap) -> np.ndarray:
    """Seven features of one map, NaN when nothing survives the noise cut."""
    try:
        return extract_features(quantize_and_denoise(rd)).as_array()
    except EmptyTargetError:
        return np.full(N_FEATURES, np.nan)


def load_frames(manifest: Manifest, features: bool = True, profiles: bool = True, images: bool = True,
                progress: Callable[[int, int], None] | None = None) -> FrameTable:
    rows = manifest.rows
    n = len(rows)
    table = FrameTable(
        np.array([r.label for r in rows], dtype=np.int64),
        np.array([r.experiment_id for r in rows], dtype=np.int64),
        np.array([r.frame_index for r in rows], dtype=np.int64),
        np.empty((n, N_FEATURES)) if features else None,
        np.empty((n, 512)) if profiles else None,
        np.empty((n, 200, 200), dtype=np.float32) if images else None,
    )
    for i, r in enumerate(rows):
        rd = load_rd_map(manifest.resolve(r), r.label, r.experiment_id, r.frame_index)
        if features:
            table.features[i] = frame_features(rd)
        if profiles:
            table.profiles[i] = restructure(rd)
        if images:
            table.images[i] = to_network_input(rd)
        if progress and (i + 1) % 100 == 0:
            progress(i + 1, n)
    return table


def buffered_dataset(table: FrameTable, experiment_ids: Iterable[int], b: int) -> LabeledDataset:
    """Stride-1 buffers of b consecutive frames, never crossing experiments.

    Frames without a target break the run; windows are only built from
    contiguous frame numbers. ``frame_indices`` holds each window's last frame.
    """
    X, y, e, f = [], [], [], []
    for eid in sorted(set(experiment_ids)):
        idx = table.rows([eid])
        idx = idx[np.argsort(table.frame_indices[idx], kind="stable")]
        idx = idx[np.all(np.isfinite(table.features[idx]), axis=1)]
        frames = table.frame_indices[idx]
        for window in buffered_windows(frames.tolist(), b):
            sel = idx[list(window)]
            X.append(buffer_concat(list(table.features[sel]), b))
            y.append(table.labels[sel[0]])
            e.append(eid)
            f.append(table.frame_indices[sel[-1]])
    if not X:
        raise DataError(f"no complete buffers of size {b}")
    return LabeledDataset(np.array(X), np.array(y), np.array(e), np.array(f))


def profile_dataset(table: FrameTable, experiment_ids: Iterable[int]) -> LabeledDataset:
    idx = table.rows(experiment_ids)
    return LabeledDataset(table.profiles[idx], table.labels[idx], table.experiment_ids[idx], table.frame_indices[idx])


def write_feature_csv(path: str | Path, data: LabeledDataset, prefix: str = "f") -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("experiment_id", "frame_index", "label", *(f"{prefix}{j + 1}" for j in range(data.n_features))))
    for eid, fi, lab, row in zip(data.experiment_ids, data.frame_indices, data.labels, data.features):
        w.writerow((int(eid), int(fi), int(lab), *(repr(float(v)) for v in row)))
    Path(path).write_text(buf.getvalue())


# -- benchmark --------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkConfig:
    seeds: str = "0,1,2"  # training seeds, comma separated
    split_seed: int = 0
    test_fraction: float = 0.2
    val_fraction: float = 0.15
    max_buffer: int = 10
    suites: str = "classical,ensemble,convnet,latency"
    # classical
    tree_depth: int = 8
    tree_min_leaf: int = 5
    logreg_l2: float = 1e-3
    logreg_epochs: int = 500
    logreg_lr: float = 0.1
    svm_c: float = 1.0
    svm_epochs: int = 200
    knn_k: int = 5
    # ensembles
    forest_trees: int = 100
    boost_stages: int = 200
    boost_depth: int = 3
    boost_nu: float = 0.1
    # convnet
    cnn_batch: int = 32
    cnn_max_epochs: int = 10
    cnn_patience: int = 4
    cnn_lr: float = 1e-3
    latency_frames: int = 50

    def seed_list(self) -> list[int]:
        try:
            seeds = [int(s) for s in self.seeds.split(",") if s.strip()]
        except ValueError as exc:
            raise DataError(f"bad seed list {self.seeds!r}") from exc
        if not seeds:
            raise DataError("at least one training seed is required")
        return seeds

    def suite_list(self) -> list[str]:
        suites = [s.strip() for s in self.suites.split(",") if s.strip()]
        bad = sorted(set(suites) - set(SUITES))
        if bad:
            raise DataError(f"unknown suites: {', '.join(bad)}")
        return suites


def fit_classical(name: str, data: LabeledDataset, cfg: BenchmarkConfig, seed: int) -> Classifier:
    if name == "decision_tree":
        return fit_decision_tree(data, cfg.tree_depth, cfg.tree_min_leaf)
    if name == "logistic_regression":
        return fit_logistic_regression(data, cfg.logreg_l2, cfg.logreg_epochs, cfg.logreg_lr)
    if name == "linear_svm":
        return fit_linear_svm(data, cfg.svm_c, cfg.svm_epochs, seed)
    if name == "knn":
        return fit_knn(data, cfg.knn_k)
    raise DataError(f"unknown classical model {name!r}")


def fit_ensemble(name: str, data: LabeledDataset, cfg: BenchmarkConfig, seed: int) -> Classifier:
    if name == "random_forest":
        return fit_random_forest(data, cfg.forest_trees, None, None, seed)
    if name == "gradient_boosting":
        return fit_gradient_boosting(data, cfg.boost_stages, cfg.boost_depth, cfg.boost_nu, seed)
    raise DataError(f"unknown ensemble model {name!r}")


def cnn_config(cfg: BenchmarkConfig) -> TrainConfig:
    return TrainConfig(batch_size=cfg.cnn_batch, max_epochs=cfg.cnn_max_epochs,
                       patience=cfg.cnn_patience, lr=cfg.cnn_lr)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


class CsvSink:
    """Rows for one CSV file, written in a single pass at the end."""

    def __init__(self, header: Sequence[str]):
        self.header = tuple(header)
        self.rows: list[tuple] = []

    def add(self, *row) -> None:
        if len(row) != len(self.header):
            raise ValueError("row width does not match header")
        self.rows.append(row)

    def write(self, path: Path) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows([_fmt(v) for v in r] for r in self.rows)
        path.write_text(buf.getvalue())


@dataclass
class BenchmarkResult:
    out_dir: Path
    classical: list[dict] = field(default_factory=list)
    ensemble: list[dict] = field(default_factory=list)
    convnet: list[dict] = field(default_factory=list)
    latency: list[dict] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    def mean_test(self, suite: str, model: str, buffer_size: int | None = None) -> float:
        rows = [r for r in getattr(self, suite) if r["model"] == model
                and (buffer_size is None or r.get("buffer_size") == buffer_size)]
        if not rows:
            raise KeyError((suite, model, buffer_size))
        return float(np.mean([r["test_acc"] for r in rows]))


def _record_predictions(sink: CsvSink, suite: str, model: str, b: int, seed: int, data_labels, eids, fids,
                        scores, predicted):
    for lab, e, f, s, p in zip(data_labels, eids, fids, scores, predicted):
        sink.add(suite, model, b, seed, int(e), int(f), int(lab), float(s), int(p))


def _latency_stats(samples_ms: Sequence[float]) -> tuple[float, float, float]:
    a = np.asarray(samples_ms)
    return float(np.median(a)), float(np.percentile(a, 90)), float(np.percentile(a, 99))


def run_benchmark(
    manifest: Manifest,
    out_dir: str | Path,
    cfg: BenchmarkConfig = BenchmarkConfig(),
    table: FrameTable | None = None,
    echo: Callable[[str], None] | None = None,
) -> BenchmarkResult:
    """Run the selected suites and write their CSVs and ``summary.txt`` to ``out_dir``.

    A failing suite is recorded in the result (and the summary) without
    stopping the others. ``latency.csv`` holds wall-clock timings and is the
    only output that differs between identical runs.
    """
    say = echo or log.info
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    suites = cfg.suite_list()
    seeds = cfg.seed_list()
    plan = holdout_split(manifest, cfg.test_fraction, cfg.val_fraction, cfg.split_seed)
    write_split(out_dir / "split.csv", manifest, plan)
    fit_ids = plan.train + plan.validation  # models without early stopping see both
    if table is None:
        t0 = time.perf_counter()
        table = load_frames(manifest, features="classical" in suites,
                            profiles=bool({"ensemble", "latency"} & set(suites)),
                            images=bool({"convnet", "latency"} & set(suites)))
        say(f"loaded {len(manifest)} frames in {time.perf_counter() - t0:.1f}s")
    result = BenchmarkResult(out_dir)
    preds = CsvSink(("suite", "model", "buffer_size", "seed", "experiment_id", "frame_index", "label", "score", "predicted"))
    confusion = CsvSink(("suite", "model", "seed", "tp", "fp", "fn", "tn", "accuracy"))
    trained: dict[str, Classifier] = {}

    def guarded(name, fn):
        t0 = time.perf_counter()
        try:
            fn()
        except (RdclassError, ValueError, FloatingPointError, MemoryError) as exc:
            result.failures[name] = f"{type(exc).__name__}: {exc}"
            say(f"suite {name} failed: {exc}")
        result.timings[name] = time.perf_counter() - t0

    def classical_suite():
        sink = CsvSink(("model", "buffer_size", "seed", "train_acc", "test_acc", "n_test"))
        for b in range(1, cfg.max_buffer + 1):
            train = buffered_dataset(table, fit_ids, b)
            test = buffered_dataset(table, plan.test, b)
            for name in CLASSICAL_MODELS:
                for seed in seeds:
                    model = fit_classical(name, train, cfg, seed)
                    scores = model.score(test.features)
                    predicted = model.predict(test.features)  # kNN settles even-k ties itself
                    test_acc = float(np.mean(predicted == test.labels))
                    row = dict(model=name, buffer_size=b, seed=seed, train_acc=model.accuracy(train),
                               test_acc=test_acc, n_test=len(test))
                    result.classical.append(row)
                    sink.add(*row.values())
                    _record_predictions(preds, "classical", name, b, seed, test.labels,
                                        test.experiment_ids, test.frame_indices, scores, predicted)
            say("classical b=%d: %s" % (b, ", ".join(
                f"{n}={result.mean_test('classical', n, b):.3f}" for n in CLASSICAL_MODELS)))
        sink.write(out_dir / "classical_buffer.csv")

    def ensemble_suite():
        sink = CsvSink(("model", "seed", "train_acc", "test_acc", "n_test"))
        train = profile_dataset(table, fit_ids)
        test = profile_dataset(table, plan.test)
        for name in ENSEMBLE_MODELS:
            for seed in seeds:
                model = fit_ensemble(name, train, cfg, seed)
                scores = model.score(test.features)
                cm = ConfusionMatrix.from_predictions(test.labels, scores >= 0.5)
                row = dict(model=name, seed=seed, train_acc=model.accuracy(train), test_acc=cm.accuracy,
                           n_test=len(test))
                result.ensemble.append(row)
                sink.add(*row.values())
                confusion.add("ensemble", name, seed, cm.tp, cm.fp, cm.fn, cm.tn, cm.accuracy)
                _record_predictions(preds, "ensemble", name, 1, seed, test.labels,
                                    test.experiment_ids, test.frame_indices, scores, scores >= 0.5)
                trained.setdefault(name, model)
                say(f"{name} seed={seed}: train={row['train_acc']:.4f} test={row['test_acc']:.4f}")
        sink.write(out_dir / "ensemble.csv")

    def convnet_suite():
        hist = CsvSink(("seed", "epoch", "train_loss", "train_acc", "val_loss", "val_acc"))
        summary = CsvSink(("model", "seed", "train_acc", "test_acc", "n_test", "epochs", "best_epoch"))
        tr, va, te = table.rows(plan.train), table.rows(plan.validation), table.rows(plan.test)
        if va.size == 0:
            raise DataError("convnet suite needs a non-empty validation set")
        for seed in seeds:
            params, history = train_convnet(table.images[tr], table.labels[tr], table.images[va],
                                            table.labels[va], cnn_config(cfg), seed)
            model = ConvNetClassifier(params, history)
            for h in history:
                hist.add(seed, h["epoch"], h["train_loss"], h["train_acc"], h["val_loss"], h["val_acc"])
            scores = model.score(table.images[te])
            cm = ConfusionMatrix.from_predictions(table.labels[te], scores >= 0.5)
            train_acc = float(np.mean(model.predict(table.images[tr]) == table.labels[tr]))
            best = max(history, key=lambda h: (h["val_acc"], -h["val_loss"]))["epoch"]
            row = dict(model="convnet", seed=seed, train_acc=train_acc, test_acc=cm.accuracy, n_test=int(te.size),
                       epochs=len(history), best_epoch=best)
            result.convnet.append(row)
            summary.add(*row.values())
            confusion.add("convnet", "convnet", seed, cm.tp, cm.fp, cm.fn, cm.tn, cm.accuracy)
            _record_predictions(preds, "convnet", "convnet", 1, seed, table.labels[te],
                                table.experiment_ids[te], table.frame_indices[te], scores, scores >= 0.5)
            trained.setdefault("convnet", model)
            say(f"convnet seed={seed}: epochs={len(history)} best={best} test={cm.accuracy:.4f}")
        hist.write(out_dir / "convnet_history.csv")
        summary.write(out_dir / "convnet.csv")

    def latency_suite():
        sink = CsvSink(("model", "n", "median_ms", "p90_ms", "p99_ms"))
        test_rows = [r for r in manifest.rows if r.experiment_id in set(plan.test)][: cfg.latency_frames]
        paths = {
            "gradient_boosting": lambda rd, m: m.predict_one(restructure(rd)),
            "convnet": lambda rd, m: m.predict_one(to_network_input(rd).astype(np.float32)),
        }
        for name, path in paths.items():
            model = trained.get(name)
            if model is None:
                if name == "gradient_boosting":
                    model = fit_ensemble(name, profile_dataset(table, fit_ids), cfg, seeds[0])
                else:
                    tr, va = table.rows(plan.train), table.rows(plan.validation)
                    params, _ = train_convnet(table.images[tr], table.labels[tr], table.images[va],
                                              table.labels[va], cnn_config(cfg), seeds[0])
                    model = ConvNetClassifier(params)
            times = []
            for r in test_rows:
                rd = load_rd_map(manifest.resolve(r))
                t0 = time.perf_counter()
                path(rd, model)
                times.append(1e3 * (time.perf_counter() - t0))
            med, p90, p99 = _latency_stats(times)
            result.latency.append(dict(model=name, n=len(times), median_ms=med, p90_ms=p90, p99_ms=p99))
            sink.add(name, len(times), med, p90, p99)
            say(f"latency {name}: median {med:.2f} ms")
        sink.write(out_dir / "latency.csv")

    runners = {"classical": classical_suite, "ensemble": ensemble_suite, "convnet": convnet_suite,
               "latency": latency_suite}
    for name in suites:
        guarded(name, runners[name])
    preds.write(out_dir / "predictions.csv")
    confusion.write(out_dir / "confusion.csv")
    (out_dir / "summary.txt").write_text(format_summary(result, plan))
    return result


def format_summary(result: BenchmarkResult, plan: SplitPlan) -> str:
    lines = [f"split: {len(plan.train)} train / {len(plan.validation)} validation / {len(plan.test)} test experiments"]
    if result.classical:
        lines.append("classical suite (mean test accuracy over seeds):")
        bs = sorted({r["buffer_size"] for r in result.classical})
        for name in CLASSICAL_MODELS:
            accs = " ".join(f"{result.mean_test('classical', name, b):.3f}" for b in bs)
            lines.append(f"  {name:20s} b={bs[0]}..{bs[-1]}: {accs}")
    for suite in ("ensemble", "convnet"):
        models = sorted({r["model"] for r in getattr(result, suite)})
        for name in models:
            rows = [r for r in getattr(result, suite) if r["model"] == name]
            lines.append(
                f"{name}: train {np.mean([r['train_acc'] for r in rows]):.4f}"
                f" test {np.mean([r['test_acc'] for r in rows]):.4f} over {len(rows)} seeds"
            )
    for r in result.latency:
        lines.append(f"latency {r['model']}: median {r['median_ms']:.2f} ms, p90 {r['p90_ms']:.2f} ms")
    for name, msg in result.failures.items():
        lines.append(f"FAILED {name}: {msg}")
    return "\n".join(lines) + "\n"


# -- single-model evaluation and prediction -----------------------------------------

def model_inputs(manifest: Manifest, spec: dict, table: FrameTable | None = None) -> LabeledDataset | tuple:
    """Inputs matching a model file's input spec, for every frame in ``manifest``."""
    kind = spec.get("type")
    if table is None:
        table = load_frames(manifest, features=kind == "features", profiles=kind == "profile",
                            images=kind == "image")
    eids = sorted(set(table.experiment_ids.tolist()))
    if kind == "features":
        return buffered_dataset(table, eids, int(spec.get("buffer_size", 1)))
    if kind == "profile":
        return profile_dataset(table, eids)
    if kind == "image":
        return table.images, table.labels, table.experiment_ids, table.frame_indices
    raise DataError(f"unknown input type {kind!r}")


def evaluate_model(model: Classifier, spec: dict, manifest: Manifest) -> ConfusionMatrix:
    data = model_inputs(manifest, spec)
    if isinstance(data, LabeledDataset):
        X, y = data.features, data.labels
    else:
        X, y = data[0], data[1]
    return ConfusionMatrix.from_predictions(y, model.predict(X))


def input_from_path(path: str | Path, spec: dict) -> np.ndarray:
    """Model input for one frame given a PGM map or a chirp cube file."""
    from rdclass.simulator import read_cube

    path = Path(path)
    head = path.read_bytes()[:4] if path.exists() else b""
    if not head:
        raise DataError(f"cannot read {path}")
    rd = compute_rd_map(read_cube(path)) if head == b"RDC1" else load_rd_map(path)
    kind = spec.get("type")
    if kind == "features":
        if int(spec.get("buffer_size", 1)) != 1:
            raise DataError("buffered feature models need consecutive frames, not a single file")
        return frame_features(rd)
    if kind == "profile":
        return restructure(rd)
    if kind == "image":
        return to_network_input(rd).astype(np.float32)
    raise DataError(f"unknown input type {kind!r}")


def predict_one(model: Classifier, spec: dict, path: str | Path) -> tuple[int, float, float]:
    """(class, score, latency in seconds) for one frame file; the clock covers
    map loading, input preparation and inference."""
    t0 = time.perf_counter()
    x = input_from_path(path, spec)
    if not np.all(np.isfinite(x)):
        raise EmptyTargetError(f"{path}: no target found")
    cls, score = model.predict_one(x)
    return cls, score, time.perf_counter() - t0
