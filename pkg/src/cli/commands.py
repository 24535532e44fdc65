"""
ADSALA command-line interface

Subcommands: sample, gather, install, bench, predict, report.
"""

import argparse
from pathlib import Path
from typing import List, Optional

from src.backend.matrix import GemmShape
from src.bundle.bundle_io import load_bundle
from src.bundle.dataset_io import read_dataset, read_shapes, write_shapes
from src.errors import AdsalaError, EXIT_ENVIRONMENT_ERROR, EXIT_OK, ParameterError, exit_code_for
from src.harness.gather import affinity_sweep, gather_dataset
from src.install.workflow import publish_install, run_install, train_bundle
from src.report.reporting import (generate_bench_report, generate_dataset_report, read_bench_rows,
                                  run_bench, write_bench_report, format_bench_report)
from src.runtime.predictor import load_predictor, predictor_from_bundle
from src.sample.halton import MIB, SamplerConfig, grid_shapes, sample_shapes
from src.utils import console
from src.utils.config_loader import load_config

DEFAULT_SHAPE_COUNT = 1763
BENCH_SHAPES = 174


def parse_int_list(text: str, name: str = 'list') -> List[int]:
    """'1,2,4-8' -> [1, 2, 4, 5, 6, 7, 8]"""
    values = []
    try:
        for part in text.split(','):
            part = part.strip()
            if not part:
                continue
            if '-' in part:
                lo, hi = (int(v) for v in part.split('-', 1))
                if hi < lo:
                    raise ValueError(part)
                values.extend(range(lo, hi + 1))
            else:
                values.append(int(part))
    except ValueError:
        raise ParameterError(f"Invalid {name}: {text!r} (expected e.g. 1,2,4-8)")
    if not values:
        raise ParameterError(f"Empty {name}: {text!r}")
    return sorted(set(values))


def _sampler_config(config, cap_mb=None, seed=None) -> SamplerConfig:
    return SamplerConfig.from_config(config['sampler'],
                                     mem_cap_bytes=None if cap_mb is None else int(float(cap_mb) * MIB),
                                     scramble_seed=seed)


def cmd_sample(args, config) -> int:
    sampler = _sampler_config(config, args.cap_mb, args.seed)
    if args.grid:
        shapes = grid_shapes(parse_int_list(args.grid, 'grid values'), sampler)
    else:
        shapes = sample_shapes(args.count, sampler)
    write_shapes(shapes, args.out)
    if args.out:
        console.success(f"Wrote {len(shapes)} shape(s) to {args.out}")
    return EXIT_OK


def cmd_gather(args, config) -> int:
    shapes = read_shapes(args.shapes)
    threads = parse_int_list(args.threads, 'thread list')
    harness_cfg = dict(config['harness'])
    if args.repeats is not None:
        harness_cfg['repeats'] = args.repeats
    isolation = 'in_process' if args.in_process else harness_cfg.get('isolation', 'subprocess')

    if args.affinity_sweep:
        policies = [p.strip() for p in args.affinity_sweep.split(',') if p.strip()]
        table = affinity_sweep(shapes, threads, policies, isolation, args.out.parent,
                               harness_cfg, config['backend'])
        table.to_csv(args.out, index=False, float_format='%.9g')
        print(table.to_string(index=False))
        return EXIT_OK

    dataset = gather_dataset(shapes, threads, isolation, args.out, harness_cfg, config['backend'])
    console.success(f"{len(dataset)} record(s) in {args.out}")
    return EXIT_OK


def cmd_install(args, config) -> int:
    families = [f.strip() for f in args.families.split(',')] if args.families else None
    threads = parse_int_list(args.threads, 'thread list') if args.threads else None

    if args.dataset:
        # train from an existing dataset, no timing
        dataset = read_dataset(args.dataset)
        cap = int(float(args.cap_mb if args.cap_mb is not None else config['sampler']['mem_cap_mb']) * MIB)
        bundle, estimates, artifacts = train_bundle(dataset, threads, config, families, args.seed,
                                                    mem_cap_bytes=cap)
        publish_install(bundle, estimates, artifacts, Path(args.out_dir),
                        Path(args.bundle or config['runtime']['bundle_path']))
        return EXIT_OK

    run_install(config, Path(args.out_dir), count=args.count, cap_mb=args.cap_mb, threads=threads,
                families=families, isolation='in_process' if args.in_process else None,
                seed=args.seed, bundle_path=args.bundle)
    return EXIT_OK


def cmd_bench(args, config) -> int:
    bundle_path = Path(args.bundle or config['runtime']['bundle_path'])
    bundle = load_bundle(bundle_path)
    predictor = predictor_from_bundle(bundle, runtime_config=config['runtime'])
    try:
        if args.shapes:
            shapes = read_shapes(args.shapes)
        else:
            cap_mb = args.cap_mb
            if cap_mb is None and bundle.mem_cap_bytes:
                cap_mb = bundle.mem_cap_bytes / MIB
            # a different scramble seed keeps the test draw apart from the training draw
            seed = args.seed if args.seed is not None else config['sampler']['scramble_seed'] + 1
            shapes = sample_shapes(args.count, _sampler_config(config, cap_mb, seed))
        harness_cfg = config['harness']
        report = run_bench(predictor, shapes, repeats=args.repeats or harness_cfg.get('repeats', 10),
                           warmup=harness_cfg.get('warmup', 1), statistic=harness_cfg.get('statistic', 'median'),
                           alignment=config['backend'].get('alignment', 64),
                           buckets=config['report']['footprint_buckets_mb'])
    finally:
        predictor.close()
    for path in write_bench_report(report, Path(args.out_dir)):
        console.info(f"Wrote {path}")
    print(format_bench_report(report))
    return EXIT_OK


def cmd_predict(args, config) -> int:
    predictor = load_predictor(args.bundle, config=config)
    shape = GemmShape(args.m, args.k, args.n)
    if predictor.is_extrapolation(shape):
        console.warning(f"{shape} exceeds the {predictor.max_footprint_bytes / MIB:g} MB footprint cap "
                        f"the model was trained on; prediction is an extrapolation")
    table = predictor.predict_table(shape)
    chosen = int(table.loc[table['chosen'], 'n_threads'].iloc[0])

    print(f"\nShape {shape} ({predictor.model.family})")
    print(f"{'n_threads':>10}  {'predicted runtime (s)':>22}")
    for row in table.itertuples(index=False):
        marker = '  <' if row.chosen else ''
        print(f"{row.n_threads:>10}  {row.predicted_runtime_s:>22.6e}{marker}")
    print(f"\nChosen thread count: {chosen}")
    return EXIT_OK


def cmd_report(args, config) -> int:
    out_dir = Path(args.out_dir)
    if args.dataset:
        paths = generate_dataset_report(read_dataset(args.dataset), out_dir, args.max_min_dim)
    else:
        paths = generate_bench_report(read_bench_rows(args.bench), out_dir,
                                      config['report']['footprint_buckets_mb'])
    for path in paths:
        console.info(f"Wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='adsala',
        description="ADSALA GEMM - machine-learned thread-count selection for SGEMM",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s sample --count 1763 --cap-mb 500 --out shapes.csv
  %(prog)s gather --shapes shapes.csv --threads 1-8 --out timings.csv
  %(prog)s install --count 300 --cap-mb 100
  %(prog)s bench --count 174
  %(prog)s predict 64 2048 64
  %(prog)s report --dataset adsala_install/timings.csv --max-min-dim 1000
        """
    )
    parser.add_argument('--config', type=Path, default=None, help='Configuration file (default: config/adsala.yaml)')
    parser.add_argument('--quiet', action='store_true', help='Only print warnings, errors and results')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('sample', help='Draw GEMM shapes (scrambled Halton or a value grid)')
    p.add_argument('--count', type=int, default=DEFAULT_SHAPE_COUNT, help='Number of shapes (default: 1763)')
    p.add_argument('--cap-mb', type=float, default=None, help='Footprint cap in MB (default: sampler.mem_cap_mb)')
    p.add_argument('--seed', type=int, default=None, help='Scramble seed (default: sampler.scramble_seed)')
    p.add_argument('--grid', type=str, default=None, help='Comma-separated dimension values for a full grid')
    p.add_argument('--out', type=Path, default=None, help='Output CSV (default: stdout)')
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser('gather', help='Time shapes at each thread count')
    p.add_argument('--shapes', type=Path, required=True, help='m,k,n CSV of shapes')
    p.add_argument('--threads', type=str, required=True, help='Thread counts, e.g. 1,2,4-8')
    p.add_argument('--out', type=Path, required=True, help='Dataset CSV (appended to, resumable)')
    p.add_argument('--in-process', action='store_true', help='Time in this process instead of workers')
    p.add_argument('--repeats', type=int, default=None, help='Timed calls per record (default: harness.repeats)')
    p.add_argument('--affinity-sweep', type=str, default=None,
                   help='Compare affinity policies, e.g. cores,threads; writes a summary to --out')
    p.set_defaults(func=cmd_gather)

    p = sub.add_parser('install', help='Sample, gather, train, select and save a bundle')
    p.add_argument('--out-dir', type=Path, default=Path('adsala_install'),
                   help='Working directory for shapes, timings and reports (default: adsala_install)')
    p.add_argument('--count', type=int, default=DEFAULT_SHAPE_COUNT, help='Training shapes (default: 1763)')
    p.add_argument('--cap-mb', type=float, default=None, help='Footprint cap in MB')
    p.add_argument('--threads', type=str, default=None, help='Thread counts (default: harness.thread_grid)')
    p.add_argument('--families', type=str, default=None, help='Comma-separated model families')
    p.add_argument('--in-process', action='store_true', help='Time in this process instead of workers')
    p.add_argument('--seed', type=int, default=None, help='Split, fold and model seed (default: models.seed)')
    p.add_argument('--bundle', type=Path, default=None, help='Bundle directory (default: runtime.bundle_path)')
    p.add_argument('--dataset', type=Path, default=None, help='Train from an existing dataset CSV instead of gathering')
    p.set_defaults(func=cmd_install)

    p = sub.add_parser('bench', help='Compare ADSALA thread selection against max threads')
    p.add_argument('--bundle', type=Path, default=None, help='Bundle directory (default: runtime.bundle_path)')
    p.add_argument('--shapes', type=Path, default=None, help='m,k,n CSV (default: a Halton test draw)')
    p.add_argument('--count', type=int, default=BENCH_SHAPES, help='Test draw size (default: 174)')
    p.add_argument('--cap-mb', type=float, default=None, help="Test draw cap (default: the bundle's cap)")
    p.add_argument('--seed', type=int, default=None, help='Test draw scramble seed')
    p.add_argument('--repeats', type=int, default=None, help='Timed calls per variant (default: harness.repeats)')
    p.add_argument('--out-dir', type=Path, default=Path('adsala_bench'), help='Output directory')
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser('predict', help='Show predicted runtimes and the chosen thread count')
    p.add_argument('m', type=int)
    p.add_argument('k', type=int)
    p.add_argument('n', type=int)
    p.add_argument('--bundle', type=Path, default=None, help='Bundle directory (default: runtime.bundle_path)')
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser('report', help='Write plot-ready CSVs from a dataset or bench rows')
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument('--dataset', type=Path, help='Timing dataset CSV')
    source.add_argument('--bench', type=Path, help='bench_rows.csv from adsala bench')
    p.add_argument('--out-dir', type=Path, default=Path('adsala_report'), help='Output directory')
    p.add_argument('--max-min-dim', type=int, default=None,
                   help='Only shapes with at least one dimension below this value')
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    console.set_quiet(args.quiet)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except AdsalaError as e:
        console.error(str(e))
        return exit_code_for(e)
    except OSError as e:
        console.error(str(e))
        return EXIT_ENVIRONMENT_ERROR
    finally:
        console.set_quiet(False)
