"""
Tests for the adsala command-line interface
"""

import numpy as np
import pandas as pd
import pytest
import yaml

from src.backend.matrix import GemmShape
from src.bundle.bundle_io import CONF_NAME, load_bundle, save_bundle
from src.bundle.dataset_io import write_dataset
from src.cli.commands import build_parser, main, parse_int_list
from src.errors import EXIT_OK, EXIT_USER_ERROR, ParameterError

from conftest import fitted_bundle, synthetic_dataset


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / 'adsala.yaml'
    path.write_text(yaml.safe_dump({
        'backend': {'affinity': 'none'},
        'features': {'lof_threshold': 2.0},
        'harness': {'eval_trials': 50, 'isolation': 'in_process'},
        'models': {'families': ['linear_ols', 'knn'], 'folds': 3, 'grids': {'knn': {'n_neighbors': [3, 5]}}},
    }))
    return path


@pytest.fixture
def timings_file(tmp_path):
    rng = np.random.default_rng(0)
    shapes = [GemmShape(*(int(v) for v in rng.integers(16, 300, size=3))) for _ in range(50)]
    path = tmp_path / 'timings.csv'
    write_dataset(synthetic_dataset(shapes, [1, 2, 4, 8]), path)
    return path


class TestParseIntList:
    def test_ranges_and_duplicates(self):
        assert parse_int_list('1,2,4-6') == [1, 2, 4, 5, 6]
        assert parse_int_list('8, 2 ,2') == [2, 8]

    @pytest.mark.parametrize('text', ['', 'a', '4-2', '1,,x'])
    def test_invalid(self, text):
        with pytest.raises(ParameterError):
            parse_int_list(text)


class TestParser:
    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_report_source_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(['report'])


class TestSample:
    def test_to_stdout(self, capsys):
        assert main(['--quiet', 'sample', '--count', '5', '--cap-mb', '10']) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == 'm,k,n'
        assert len(lines) == 6
        for line in lines[1:]:
            m, k, n = (int(v) for v in line.split(','))
            assert 4 * (m * k + k * n + m * n) <= 10 * 2 ** 20

    def test_grid_to_file(self, tmp_path):
        out = tmp_path / 'grid.csv'
        assert main(['sample', '--grid', '16,32', '--out', str(out)]) == EXIT_OK
        assert len(pd.read_csv(out)) == 8


class TestPredict:
    def test_prints_chosen_count(self, tmp_path, capsys):
        save_bundle(fitted_bundle(), tmp_path / 'bundle')
        code = main(['predict', '64', '128', '32', '--bundle', str(tmp_path / 'bundle')])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert 'Chosen thread count:' in out
        chosen = int(out.strip().splitlines()[-1].split(':')[1])
        assert chosen in (1, 2, 4, 8)

    def test_extrapolation_warning(self, tmp_path, capsys):
        save_bundle(fitted_bundle(), tmp_path / 'bundle')
        assert main(['predict', '4000', '4000', '4000', '--bundle', str(tmp_path / 'bundle')]) == EXIT_OK
        assert 'extrapolation' in capsys.readouterr().err

    def test_missing_bundle(self, tmp_path):
        assert main(['predict', '8', '8', '8', '--bundle', str(tmp_path / 'none')]) == EXIT_USER_ERROR

    def test_invalid_shape(self, tmp_path):
        save_bundle(fitted_bundle(), tmp_path / 'bundle')
        assert main(['predict', '0', '8', '8', '--bundle', str(tmp_path / 'bundle')]) == EXIT_USER_ERROR


class TestReport:
    def test_from_dataset(self, tmp_path, timings_file, capsys):
        out_dir = tmp_path / 'report'
        assert main(['report', '--dataset', str(timings_file), '--out-dir', str(out_dir)]) == EXIT_OK
        histogram = pd.read_csv(out_dir / 'optimal_threads_histogram.csv')
        assert histogram['count'].sum() == 50
        assert 'OPTIMAL THREAD COUNTS' in capsys.readouterr().out

    def test_missing_dataset(self, tmp_path):
        assert main(['report', '--dataset', str(tmp_path / 'missing.csv')]) == EXIT_USER_ERROR

    def test_bad_config_file(self, tmp_path, timings_file):
        assert main(['--config', str(tmp_path / 'nope.yaml'), 'report', '--dataset', str(timings_file)]) == \
            EXIT_USER_ERROR


class TestInstallFromDataset:
    def test_trains_and_writes_bundle(self, tmp_path, timings_file, fast_config, capsys):
        bundle_dir = tmp_path / 'bundle'
        out_dir = tmp_path / 'install'
        code = main(['--config', str(fast_config), 'install', '--dataset', str(timings_file),
                     '--out-dir', str(out_dir), '--bundle', str(bundle_dir), '--cap-mb', '1'])
        assert code == EXIT_OK
        assert (bundle_dir / CONF_NAME).exists()
        bundle = load_bundle(bundle_dir)
        assert bundle.candidates == (1, 2, 4, 8)
        assert bundle.model.family in ('linear_ols', 'knn')
        assert bundle.mem_cap_bytes == 2 ** 20
        assert {row['family'] for row in bundle.selection_report} == {'linear_ols', 'knn'}

        report = pd.read_csv(out_dir / 'selection_report.csv')
        assert report['selected'].sum() == 1
        assert (out_dir / 'learning_curve.csv').exists()
        assert 'MODEL SELECTION' in capsys.readouterr().out

    def test_unknown_family(self, tmp_path, timings_file, fast_config):
        code = main(['--config', str(fast_config), 'install', '--dataset', str(timings_file),
                     '--families', 'svm', '--bundle', str(tmp_path / 'b'), '--out-dir', str(tmp_path / 'o')])
        assert code == EXIT_USER_ERROR
