"""
Speedup estimation and production model selection

A candidate model is scored by the speedup it would deliver over always using
the maximum thread count, charged with its own evaluation time:
s = t_original / (t_adsala + t_eval), with both runtimes taken from measured
test-set timings.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.errors import ContractError, ParameterError
from src.features.engineering import build_feature_matrix
from src.features.transforms import TransformState
from src.harness.timing import TimingDataset
from src.models.base import RegressionModel, schema_fingerprint
from src.models.evaluation import rmse
from src.runtime.predictor import select_threads
from src.utils import console

REPORT_COLUMNS = ['family', 'rmse_s', 't_eval_s', 'est_speedup_no_overhead', 'est_speedup_with_overhead',
                  'aggregate_speedup_no_overhead', 'aggregate_speedup', 'mean_speedup', 'n_shapes',
                  'fallbacks', 'selected']
PER_SHAPE_COLUMNS = ['m', 'k', 'n', 'chosen_threads', 'measured_threads', 't_original_s', 't_adsala_s',
                     'speedup_no_overhead', 'speedup']


@dataclass
class SpeedupEstimate:
    """Test-set accuracy, evaluation cost and estimated speedups of one tuned model."""

    family: str
    rmse_s: float
    t_eval_s: float
    est_speedup_no_overhead: float
    est_speedup_with_overhead: float
    aggregate_speedup: float
    mean_speedup: float
    aggregate_speedup_no_overhead: float = 0.0
    n_shapes: int = 0
    fallbacks: int = 0
    per_shape: Optional[pd.DataFrame] = field(default=None, repr=False, compare=False)

    def as_row(self) -> Dict:
        return {'family': self.family, 'rmse_s': self.rmse_s, 't_eval_s': self.t_eval_s,
                'est_speedup_no_overhead': self.est_speedup_no_overhead,
                'est_speedup_with_overhead': self.est_speedup_with_overhead,
                'aggregate_speedup_no_overhead': self.aggregate_speedup_no_overhead,
                'aggregate_speedup': self.aggregate_speedup, 'mean_speedup': self.mean_speedup,
                'n_shapes': self.n_shapes, 'fallbacks': self.fallbacks}


def speedup_formula(t_original: float, t_adsala: float, t_eval: float = 0.0) -> float:
    """t_original / (t_adsala + t_eval)."""
    if t_original <= 0 or t_adsala <= 0:
        raise ParameterError(f"Runtimes must be positive, got t_original={t_original}, t_adsala={t_adsala}")
    if t_eval < 0:
        raise ParameterError(f"t_eval must be >= 0, got {t_eval}")
    return t_original / (t_adsala + t_eval)


def _nearest(measured: Sequence[int], wanted: int) -> int:
    return min(measured, key=lambda t: (abs(t - wanted), t))


def holdout_rmse(model: RegressionModel, transform: TransformState, test_set: TimingDataset) -> float:
    """RMSE in seconds over every measured (shape, n_threads) of the test set."""
    keys = np.array([record.key for record in test_set.records], dtype=np.int64)
    X = build_feature_matrix(keys[:, 0], keys[:, 1], keys[:, 2], keys[:, 3])
    predicted = transform.label_inverse(model.predict(transform.transform(X),
                                                      schema_fingerprint(transform.kept_features)))
    return rmse(predicted, [record.runtime_s for record in test_set.records])


def estimate_speedup(model: RegressionModel, transform: TransformState, test_set: TimingDataset,
                     candidates: Sequence[int], t_eval_s: float, tie_tolerance: float = 0.01,
                     family: Optional[str] = None) -> SpeedupEstimate:
    """
    Estimate speedups over the max-thread baseline on held-out shapes.

    Args:
        model: Tuned model
        transform: Transform the model was trained behind
        test_set: Measured timings of the test shapes
        candidates: Thread counts the model chooses from
        t_eval_s: Mean evaluation latency charged to every call
        tie_tolerance: Relative tie band of the thread choice
        family: Family name for the report (defaults to model.family)

    Returns:
        SpeedupEstimate with a per-shape table attached
    """
    if not test_set.records:
        raise ContractError("Speedup estimation needs a non-empty test set")
    if t_eval_s < 0:
        raise ParameterError(f"t_eval_s must be >= 0, got {t_eval_s}")
    candidates = sorted(int(c) for c in candidates)
    fingerprint = schema_fingerprint(transform.kept_features)
    baseline_threads = candidates[-1]

    rows = []
    fallbacks = 0
    for shape, measured in test_set.runtimes_by_shape().items():
        counts = sorted(measured)
        base = baseline_threads if baseline_threads in measured else counts[-1]
        chosen = select_threads(model, transform, shape, candidates, tie_tolerance, fingerprint)
        used = chosen
        if chosen not in measured:
            used = _nearest(counts, chosen)
            fallbacks += 1
        t_original, t_adsala = measured[base], measured[used]
        rows.append({'m': shape.m, 'k': shape.k, 'n': shape.n, 'chosen_threads': chosen,
                     'measured_threads': used, 't_original_s': t_original, 't_adsala_s': t_adsala,
                     'speedup_no_overhead': speedup_formula(t_original, t_adsala),
                     'speedup': speedup_formula(t_original, t_adsala, t_eval_s)})
    if fallbacks:
        console.warning(f"{fallbacks} chosen thread count(s) were not measured; "
                        f"used the nearest measured count instead")

    per_shape = pd.DataFrame(rows, columns=PER_SHAPE_COLUMNS)
    total_original = float(per_shape['t_original_s'].sum())
    total_adsala = float(per_shape['t_adsala_s'].sum())
    mean_with = float(per_shape['speedup'].mean())
    return SpeedupEstimate(
        family=family or model.family,
        rmse_s=holdout_rmse(model, transform, test_set),
        t_eval_s=float(t_eval_s),
        est_speedup_no_overhead=float(per_shape['speedup_no_overhead'].mean()),
        est_speedup_with_overhead=mean_with,
        aggregate_speedup=total_original / (total_adsala + t_eval_s * len(per_shape)),
        mean_speedup=mean_with,
        aggregate_speedup_no_overhead=total_original / total_adsala,
        n_shapes=len(per_shape),
        fallbacks=fallbacks,
        per_shape=per_shape,
    )


def select_model(estimates: Sequence[SpeedupEstimate]) -> SpeedupEstimate:
    """Highest mean speedup with overhead; ties go to lower t_eval, then lower RMSE."""
    if not estimates:
        raise ParameterError("No speedup estimates to select from")
    return min(estimates, key=lambda e: (-e.est_speedup_with_overhead, e.t_eval_s, e.rmse_s))


def selection_frame(estimates: Sequence[SpeedupEstimate],
                    chosen: Optional[SpeedupEstimate] = None) -> pd.DataFrame:
    chosen = chosen or (select_model(estimates) if estimates else None)
    rows = [{**e.as_row(), 'selected': chosen is not None and e.family == chosen.family} for e in estimates]
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def write_selection_report(estimates: Sequence[SpeedupEstimate], path: Path,
                           chosen: Optional[SpeedupEstimate] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    selection_frame(estimates, chosen).to_csv(path, index=False, float_format='%.6g')


def format_selection_report(estimates: Sequence[SpeedupEstimate],
                            chosen: Optional[SpeedupEstimate] = None) -> str:
    """Console table of the model comparison."""
    chosen = chosen or select_model(estimates)
    lines = ["", "=" * 80, "MODEL SELECTION", "=" * 80, ""]
    lines.append(f"{'family':<20}{'rmse (s)':>12}{'t_eval (us)':>13}{'s (no ovh)':>12}"
                 f"{'s (mean)':>11}{'s (aggr.)':>11}")
    lines.append("-" * 80)
    for e in estimates:
        marker = ' *' if e.family == chosen.family else ''
        lines.append(f"{e.family:<20}{e.rmse_s:>12.3e}{e.t_eval_s * 1e6:>13.1f}"
                     f"{e.est_speedup_no_overhead:>12.3f}{e.est_speedup_with_overhead:>11.3f}"
                     f"{e.aggregate_speedup:>11.3f}{marker}")
    lines.append("")
    lines.append(f"Selected: {chosen.family} (mean estimated speedup {chosen.mean_speedup:.3f}x "
                 f"over {chosen.n_shapes} test shape(s))")
    return "\n".join(lines)


def selection_rows(estimates: Sequence[SpeedupEstimate]) -> List[Dict]:
    """Per-family summary stored in the bundle metadata."""
    return [{'family': e.family, 'rmse_s': e.rmse_s, 't_eval_s': e.t_eval_s,
             'est_speedup_no_overhead': e.est_speedup_no_overhead,
             'est_speedup_with_overhead': e.est_speedup_with_overhead,
             'aggregate_speedup': e.aggregate_speedup, 'mean_speedup': e.mean_speedup}
            for e in estimates]
