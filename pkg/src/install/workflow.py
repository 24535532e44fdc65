"""
Installation workflow: sample -> gather -> preprocess -> tune -> t_eval -> select -> bundle
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from src.backend.matrix import GemmShape
from src.bundle.bundle_io import ModelBundle, save_bundle
from src.bundle.dataset_io import read_shapes, write_shapes
from src.errors import ContractError, NumericalError, ParameterError
from src.features.engineering import labeled_from_timings
from src.features.pipeline import fit_preprocessing
from src.features.split import stratified_split
from src.harness.gather import gather_dataset
from src.harness.latency import measure_eval_latency
from src.harness.timing import TimingDataset, default_thread_grid
from src.models import registry
from src.models.evaluation import learning_curve, tune
from src.sample.halton import MIB, SamplerConfig, sample_shapes
from src.selection.speedup import (SpeedupEstimate, estimate_speedup, format_selection_report,
                                   select_model, selection_rows, write_selection_report)
from src.utils import console
from src.utils.config_loader import DEFAULT_CONFIG

SHAPES_FILE = 'shapes.csv'
DATASET_FILE = 'timings.csv'
SELECTION_FILE = 'selection_report.csv'
LEARNING_CURVE_FILE = 'learning_curve.csv'


def train_bundle(dataset: TimingDataset, candidates: Optional[Sequence[int]] = None,
                 config: Optional[Dict] = None, families: Optional[Sequence[str]] = None,
                 seed: Optional[int] = None, mem_cap_bytes: int = 0,
                 with_learning_curve: bool = True) -> Tuple[ModelBundle, List[SpeedupEstimate], Dict]:
    """
    Turn a timing dataset into a production bundle without timing any GEMM.

    Args:
        dataset: Measured timings (every shape at every candidate count)
        candidates: Thread counts frozen into the bundle (defaults to the dataset's counts)
        config: Full ADSALA configuration
        families: Model families to tune (defaults to models.families)
        seed: Split, fold and model seed (defaults to models.seed)
        mem_cap_bytes: Footprint cap the shapes were sampled under
        with_learning_curve: Also compute the selected family's learning curve

    Returns:
        Tuple of (bundle, per-family speedup estimates, artifacts dict)
    """
    config = config or DEFAULT_CONFIG
    features_cfg = config['features']
    models_cfg = config['models']
    harness_cfg = config['harness']
    runtime_cfg = config['runtime']
    seed = models_cfg.get('seed', 42) if seed is None else seed
    families = list(families or models_cfg['families'])
    candidates = sorted(int(c) for c in (candidates or dataset.thread_counts()))
    label_transform = features_cfg.get('label_transform', 'log_e')
    unknown = [f for f in families if f not in registry.MODEL_CLASSES]
    if unknown:
        raise ParameterError(f"Unsupported model family: {', '.join(unknown)}")

    labeled = labeled_from_timings(dataset)
    n_shapes = len(dataset.shapes())
    n_strata = max(1, min(int(features_cfg.get('n_strata', 10)), n_shapes))
    train, test = stratified_split(labeled, float(features_cfg.get('test_fraction', 0.30)),
                                   n_strata, seed, group_by_shape=True)
    test_shapes = sorted({GemmShape(*key) for key in test.shape_keys})
    if not test_shapes or len(train) == 0:
        raise ContractError(f"{n_shapes} shape(s) are too few for a train/test split")
    test_set = dataset.restricted_to(test_shapes)
    console.info(f"Split: {len(train)} training row(s), {len(test_shapes)} test shape(s)")

    state, filtered, processed, prep_report = fit_preprocessing(train, features_cfg)
    labels = state.label_forward(filtered.y)

    models = {}
    estimates: List[SpeedupEstimate] = []
    cv_reports = {}
    for family in families:
        console.info(f"Tuning {family}...")
        try:
            best_hp, best_cv, reports = tune(family, processed, filtered.y,
                                             registry.grid_for(family, models_cfg.get('grids')),
                                             folds=int(models_cfg.get('folds', 5)), seed=seed,
                                             label_transform=label_transform,
                                             feature_names=state.kept_features,
                                             n_jobs=int(models_cfg.get('n_jobs', 1)))
            model = registry.fit(family, processed, labels, best_hp, state.kept_features, seed)
        except (ParameterError, NumericalError) as e:
            console.warning(f"{family} skipped: {e}")
            continue
        t_eval = measure_eval_latency(model, state, candidates,
                                      trials=int(harness_cfg.get('eval_trials', 1000)), seed=seed,
                                      tie_tolerance=float(runtime_cfg.get('tie_tolerance', 0.01)))
        estimate = estimate_speedup(model, state, test_set, candidates, t_eval,
                                    float(runtime_cfg.get('tie_tolerance', 0.01)), family)
        console.info(f"  {family}: cv rmse {best_cv.mean_rmse:.3e}s, t_eval {t_eval * 1e6:.1f}us, "
                     f"speedup {estimate.mean_speedup:.3f}x")
        models[family] = model
        estimates.append(estimate)
        cv_reports[family] = reports

    if not estimates:
        raise ParameterError(f"None of the model families {families} could be trained")

    chosen = select_model(estimates)
    model = models[chosen.family]
    bundle = ModelBundle(host_descriptor=dataset.host_descriptor, max_threads=dataset.max_threads,
                         candidates=candidates, transform=state, model=model,
                         selection_report=selection_rows(estimates), mem_cap_bytes=mem_cap_bytes)

    artifacts = {'preprocessing': prep_report, 'cv_reports': cv_reports, 'chosen': chosen,
                 'test_shapes': test_shapes, 'learning_curve': None}
    if with_learning_curve:
        artifacts['learning_curve'] = learning_curve(chosen.family, processed, filtered.y,
                                                     model.hyperparameters, seed=seed,
                                                     label_transform=label_transform,
                                                     feature_names=state.kept_features)
    return bundle, estimates, artifacts


def prepare_shapes(out_dir: Path, count: int, sampler_config: SamplerConfig) -> List[GemmShape]:
    """Sampled shapes, reused from out_dir/shapes.csv when resuming."""
    shapes_path = Path(out_dir) / SHAPES_FILE
    if shapes_path.exists():
        shapes = read_shapes(shapes_path)
        console.info(f"Resuming with {len(shapes)} shape(s) from {shapes_path}")
        if len(shapes) != count:
            console.warning(f"{shapes_path} holds {len(shapes)} shape(s) but {count} were requested; "
                            f"keeping the existing shapes (delete the file to resample)")
        return shapes
    shapes = sample_shapes(count, sampler_config)
    write_shapes(shapes, shapes_path)
    return shapes


def run_install(config: Dict, out_dir: Path, count: int = 1763, cap_mb: Optional[float] = None,
                threads: Optional[Sequence[int]] = None, families: Optional[Sequence[str]] = None,
                isolation: Optional[str] = None, seed: Optional[int] = None,
                bundle_path: Optional[Path] = None) -> Tuple[ModelBundle, List[SpeedupEstimate]]:
    """
    Full installation on this host.

    Interrupted runs resume from out_dir: the shape list and every timing
    already written are reused.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    sampler_config = SamplerConfig.from_config(
        config['sampler'], mem_cap_bytes=None if cap_mb is None else int(float(cap_mb) * MIB))
    shapes = prepare_shapes(out_dir, count, sampler_config)

    harness_cfg = config['harness']
    threads = sorted({int(t) for t in (threads or harness_cfg.get('thread_grid') or default_thread_grid())})
    console.info(f"Thread counts: {', '.join(str(t) for t in threads)}")

    dataset = gather_dataset(shapes, threads, isolation or harness_cfg.get('isolation', 'subprocess'),
                             out_dir / DATASET_FILE, harness_cfg, config['backend'])

    bundle, estimates, artifacts = train_bundle(dataset, threads, config, families, seed,
                                                mem_cap_bytes=sampler_config.mem_cap_bytes)

    publish_install(bundle, estimates, artifacts, out_dir, Path(bundle_path or config['runtime']['bundle_path']))
    return bundle, estimates


def publish_install(bundle: ModelBundle, estimates: List[SpeedupEstimate], artifacts: Dict,
                    out_dir: Path, bundle_path: Path) -> None:
    """Write the selection report, learning curve and bundle, then print the comparison."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_selection_report(estimates, out_dir / SELECTION_FILE, artifacts['chosen'])
    if artifacts['learning_curve'] is not None:
        artifacts['learning_curve'].to_csv(out_dir / LEARNING_CURVE_FILE, index=False, float_format='%.6g')
    save_bundle(bundle, bundle_path)
    print(format_selection_report(estimates, artifacts['chosen']))
    console.success(f"Bundle written to {bundle_path}")
