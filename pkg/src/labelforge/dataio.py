"""File formats: LF-matrix CSV datasets, prediction tables, results tables,
and the versioned plain-text model file.

The dataset format is a comma-separated header naming the LF columns plus
an optional ground-truth column (named "y" unless overridden), with every
body cell one of -1, 0, 1 (truth restricted to -1/1). The model file is a
human-diffable key-value record whose floats are written with repr, so a
write -> read -> write round trip is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .infer import Predictions
from .model import Dataset, LabelPrior, ModelParams
from .priors import PriorSpec

MODEL_FORMAT_VERSION = 1

_MODEL_KEYS = (
    "format_version",
    "m",
    "accuracy",
    "coverage",
    "prior_source",
    "prior_strength",
    "prior_p",
    "prior_force_abstain",
    "prior_u",
    "prior_v",
    "prior_means",
    "config_digest",
)

RESULTS_HEADER = "experiment,mode,size,replicate,metric,value"


def _parse_cell(text: str, row: int, column: str, allowed: tuple[int, ...]) -> int:
    text = text.strip()
    try:
        value = int(text)
    except ValueError:
        raise DataError(
            f"row {row}, column {column!r}: cell {text!r} is not an integer"
        ) from None
    if value not in allowed:
        raise DataError(
            f"row {row}, column {column!r}: value {value} not in {set(allowed)}"
        )
    return value


def read_dataset(path, truth_col: str = "y") -> Dataset:
    """Parse a dataset file; the truth column (if present) is split out."""
    text = Path(path).read_text()
    lines = [line for line in text.splitlines() if line.strip() != ""]
    if not lines:
        raise DataError(f"{path}: empty file")
    header = [name.strip() for name in lines[0].split(",")]
    truth_idx = header.index(truth_col) if truth_col in header else None
    lf_idx = [k for k in range(len(header)) if k != truth_idx]
    if not lf_idx:
        raise DataError(f"{path}: no LF columns in header")
    if len(lines) == 1:
        raise DataError(f"{path}: no data rows")

    votes_rows = []
    truth_rows = []
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != len(header):
            raise DataError(
                f"{path}: row {i}: expected {len(header)} fields, got {len(cells)}"
            )
        votes_rows.append(
            [_parse_cell(cells[k], i, header[k], (-1, 0, 1)) for k in lf_idx]
        )
        if truth_idx is not None:
            truth_rows.append(_parse_cell(cells[truth_idx], i, header[truth_idx], (-1, 1)))
    truth = np.array(truth_rows, dtype=np.int64) if truth_idx is not None else None
    return Dataset(np.array(votes_rows, dtype=np.int64), truth)


def write_dataset(path, dataset: Dataset) -> None:
    """Write a dataset in the canonical header layout (lf_0..lf_{m-1}[,y])."""
    header = [f"lf_{j}" for j in range(dataset.m)]
    if dataset.truth is not None:
        header.append("y")
    lines = [",".join(header)]
    for i in range(dataset.n):
        cells = [str(int(v)) for v in dataset.votes[i]]
        if dataset.truth is not None:
            cells.append(str(int(dataset.truth[i])))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_predictions(path, predictions: Predictions) -> None:
    lines = ["index,label,score_pos,abstain_reason"]
    for i, pred in enumerate(predictions):
        lines.append(f"{i},{pred.label},{pred.score_pos!r},{pred.abstain_reason}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_predictions(path) -> Predictions:
    text = Path(path).read_text()
    lines = [line for line in text.splitlines() if line.strip() != ""]
    if not lines:
        raise DataError(f"{path}: empty file")
    if lines[0] != "index,label,score_pos,abstain_reason":
        raise DataError(f"{path}: unexpected predictions header {lines[0]!r}")
    labels, scores, reasons = [], [], []
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != 4:
            raise DataError(f"{path}: row {i}: expected 4 fields, got {len(cells)}")
        labels.append(_parse_cell(cells[1], i, "label", (-1, 0, 1)))
        try:
            scores.append(float(cells[2]))
        except ValueError:
            raise DataError(f"{path}: row {i}: bad score {cells[2]!r}") from None
        reasons.append(cells[3].strip())
    return Predictions(
        labels=np.array(labels, dtype=np.int64),
        score_pos=np.array(scores, dtype=np.float64),
        abstain_reason=np.array(reasons, dtype="<U10"),
    )


def write_results_table(path, rows: list[dict]) -> None:
    """Flat results table; undefined values serialize as NA."""
    lines = [RESULTS_HEADER]
    for row in rows:
        value = row["value"]
        text = "NA" if value is None else repr(float(value))
        lines.append(
            f"{row['experiment']},{row['mode']},{row['size']},{row['replicate']},"
            f"{row['metric']},{text}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ModelFile:
    """Serializable snapshot of fitted parameters plus the prior used."""

    m: int
    accuracy: np.ndarray
    coverage: np.ndarray
    prior_source: str
    prior_strength: float | None
    prior_p: float
    prior_force_abstain: bool
    prior_u: np.ndarray | None
    prior_v: np.ndarray | None
    prior_means: np.ndarray | None
    config_digest: str

    def params(self) -> ModelParams:
        return ModelParams(self.accuracy, self.coverage)

    def label_prior(self) -> LabelPrior:
        return LabelPrior(p=self.prior_p, mv_votes=None, force_abstain=self.prior_force_abstain)


def model_file_from_fit(
    params: ModelParams, prior_spec: PriorSpec | None, config_digest: str
) -> ModelFile:
    if prior_spec is None:
        return ModelFile(
            m=params.m,
            accuracy=params.accuracy,
            coverage=params.coverage,
            prior_source="none",
            prior_strength=None,
            prior_p=0.5,
            prior_force_abstain=False,
            prior_u=None,
            prior_v=None,
            prior_means=None,
            config_digest=config_digest,
        )
    return ModelFile(
        m=params.m,
        accuracy=params.accuracy,
        coverage=params.coverage,
        prior_source=prior_spec.source,
        prior_strength=prior_spec.strength,
        prior_p=prior_spec.label_prior.p,
        prior_force_abstain=prior_spec.label_prior.force_abstain,
        prior_u=prior_spec.accuracy_prior.u,
        prior_v=prior_spec.accuracy_prior.v,
        prior_means=prior_spec.means,
        config_digest=config_digest,
    )


def _vector_text(vec: np.ndarray | None) -> str:
    if vec is None:
        return "none"
    return ",".join(repr(float(x)) for x in vec)


def _vector_parse(text: str) -> np.ndarray | None:
    if text == "none":
        return None
    return np.array([float(x) for x in text.split(",")], dtype=np.float64)


def save_model(path, model: ModelFile) -> None:
    strength = "none" if model.prior_strength is None else repr(float(model.prior_strength))
    fields = {
        "format_version": str(MODEL_FORMAT_VERSION),
        "m": str(model.m),
        "accuracy": _vector_text(model.accuracy),
        "coverage": _vector_text(model.coverage),
        "prior_source": model.prior_source,
        "prior_strength": strength,
        "prior_p": repr(float(model.prior_p)),
        "prior_force_abstain": "true" if model.prior_force_abstain else "false",
        "prior_u": _vector_text(model.prior_u),
        "prior_v": _vector_text(model.prior_v),
        "prior_means": _vector_text(model.prior_means),
        "config_digest": model.config_digest,
    }
    lines = [f"{key}: {fields[key]}" for key in _MODEL_KEYS]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> ModelFile:
    text = Path(path).read_text()
    fields: dict[str, str] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        if ": " not in line:
            raise DataError(f"{path}: malformed model line {line!r}")
        key, value = line.split(": ", 1)
        fields[key] = value
    missing = [key for key in _MODEL_KEYS if key not in fields]
    if missing:
        raise DataError(f"{path}: missing model fields {missing}")
    if fields["format_version"] != str(MODEL_FORMAT_VERSION):
        raise DataError(
            f"{path}: unsupported model format version {fields['format_version']!r}"
        )
    strength_text = fields["prior_strength"]
    model = ModelFile(
        m=int(fields["m"]),
        accuracy=_vector_parse(fields["accuracy"]),
        coverage=_vector_parse(fields["coverage"]),
        prior_source=fields["prior_source"],
        prior_strength=None if strength_text == "none" else float(strength_text),
        prior_p=float(fields["prior_p"]),
        prior_force_abstain=fields["prior_force_abstain"] == "true",
        prior_u=_vector_parse(fields["prior_u"]),
        prior_v=_vector_parse(fields["prior_v"]),
        prior_means=_vector_parse(fields["prior_means"]),
        config_digest=fields["config_digest"],
    )
    if model.accuracy is None or model.coverage is None or model.accuracy.shape[0] != model.m:
        raise DataError(f"{path}: parameter vectors inconsistent with m={model.m}")
    return model
