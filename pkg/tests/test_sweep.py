import pytest

from rotguard.errors import EmptyCorpusError
from rotguard.geometry import save_image
from rotguard.pipeline import Flip180, OraclePredictor
from rotguard.providers import LabelCache, SyntheticProvider, default_degradation_profile
from rotguard.sweep import (
    AngleAggregate,
    SweepConfig,
    SweepRecord,
    aggregate,
    read_records_csv,
    run_sweep,
    write_aggregates_csv,
    write_records_csv,
    write_records_jsonl,
)

from conftest import CountingProvider, structured_image


@pytest.fixture
def corpus(tmp_path):
    corpus_dir = tmp_path / "corpus"
    corpus_dir.mkdir()
    for i in range(3):
        save_image(corpus_dir / f"scene-{i}.png", structured_image(48, 36, seed=i))
    return corpus_dir


def small_config(corpus_dir, **overrides):
    settings = dict(
        corpus_dir=corpus_dir, angle_start=0, angle_stop=350, angle_step=50
    )
    settings.update(overrides)
    return SweepConfig(**settings)


def synthetic_setup(tmp_path, seed=0):
    provider = CountingProvider(SyntheticProvider(default_degradation_profile(seed=seed)))
    cache = LabelCache(tmp_path / "cache")
    predictor = OraclePredictor(input_width=64, input_height=64)
    return provider, cache, predictor


class TestSweepConfig:
    def test_default_angle_grid(self, corpus):
        assert SweepConfig(corpus).angles() == list(range(0, 358, 3))

    def test_step_must_divide_span(self, corpus):
        with pytest.raises(ValueError):
            SweepConfig(corpus, angle_stop=100, angle_step=3)

    def test_angles_must_stay_in_circle(self, corpus):
        with pytest.raises(ValueError):
            SweepConfig(corpus, angle_stop=360)

    def test_unknown_condition_rejected(self, corpus):
        with pytest.raises(ValueError):
            SweepConfig(corpus, conditions=("rotated", "mangled"))


class TestRunSweep:
    def test_completeness(self, corpus, tmp_path):
        provider, cache, predictor = synthetic_setup(tmp_path)
        config = small_config(corpus)
        records = run_sweep(config, provider, cache, predictor)
        assert len(records) == 3 * len(config.angles()) * 2
        assert all(r.error is None for r in records)

    def test_angle_zero_rotated_pe_is_zero(self, corpus, tmp_path):
        provider, cache, predictor = synthetic_setup(tmp_path)
        records = run_sweep(small_config(corpus), provider, cache, predictor)
        zero = [r for r in records if r.applied_angle == 0 and r.condition == "rotated"]
        assert len(zero) == 3
        assert all(r.percentage_error == pytest.approx(0.0, abs=1e-9) for r in zero)

    def test_exact_oracle_zero_residuals(self, corpus, tmp_path):
        provider, cache, predictor = synthetic_setup(tmp_path)
        records = run_sweep(small_config(corpus), provider, cache, predictor)
        corrected = [r for r in records if r.condition == "corrected"]
        assert all(r.residual == 0 for r in corrected)
        assert all(r.predicted_total == r.applied_angle for r in corrected)

    def test_corrected_pe_never_above_rotated(self, corpus, tmp_path):
        provider, cache, predictor = synthetic_setup(tmp_path)
        records = run_sweep(small_config(corpus), provider, cache, predictor)
        for row in aggregate(records):
            assert row.mean_pe_corrected <= row.mean_pe_rotated + 1e-9

    def test_deterministic_across_worker_counts(self, corpus, tmp_path):
        serial_provider, serial_cache, serial_pred = synthetic_setup(tmp_path / "a")
        parallel_provider, parallel_cache, parallel_pred = synthetic_setup(tmp_path / "b")
        serial = run_sweep(
            small_config(corpus, parallelism=1), serial_provider, serial_cache, serial_pred
        )
        parallel = run_sweep(
            small_config(corpus, parallelism=6),
            parallel_provider,
            parallel_cache,
            parallel_pred,
        )
        assert serial == parallel

    def test_warm_cache_issues_zero_provider_calls(self, corpus, tmp_path):
        provider, cache, predictor = synthetic_setup(tmp_path)
        config = small_config(corpus)
        run_sweep(config, provider, cache, predictor)
        cold_calls = provider.calls
        assert cold_calls > 0
        run_sweep(config, provider, cache, predictor)
        assert provider.calls == cold_calls

    def test_rotated_only_without_predictor(self, corpus, tmp_path):
        provider, cache, _ = synthetic_setup(tmp_path)
        records = run_sweep(
            small_config(corpus, conditions=("rotated",)), provider, cache
        )
        assert all(r.condition == "rotated" for r in records)
        assert all(r.predicted_total is None and r.residual is None for r in records)

    def test_corrected_requires_predictor(self, corpus, tmp_path):
        provider, cache, _ = synthetic_setup(tmp_path)
        with pytest.raises(ValueError):
            run_sweep(small_config(corpus), provider, cache, predictor=None)

    def test_empty_corpus(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        provider, cache, predictor = synthetic_setup(tmp_path)
        with pytest.raises(EmptyCorpusError):
            run_sweep(small_config(empty), provider, cache, predictor)

    def test_provider_failure_tallied_not_fatal(self, corpus, tmp_path):
        class FlakyProvider:
            provider_id = "synthetic"

            def __init__(self, inner):
                self.inner = inner
                self.served = 0

            def register_angle(self, digest, angle):
                self.inner.register_angle(digest, angle)

            def label(self, request):
                self.served += 1
                if self.served % 7 == 3:
                    raise RuntimeError("synthetic outage")
                return self.inner.label(request)

        provider = FlakyProvider(SyntheticProvider(default_degradation_profile()))
        cache = LabelCache(tmp_path / "cache")
        predictor = OraclePredictor(input_width=64, input_height=64)
        config = small_config(corpus)
        records = run_sweep(config, provider, cache, predictor)
        assert len(records) == 3 * len(config.angles()) * 2
        failed = [r for r in records if r.error is not None]
        assert failed
        assert all("synthetic outage" in r.error for r in failed)
        assert all(r.percentage_error is None for r in failed)

    def test_flip180_oracle_still_closes_via_second_pass(self, corpus, tmp_path):
        provider, cache, _ = synthetic_setup(tmp_path)
        predictor = OraclePredictor(
            input_width=64, input_height=64, error_modes=(Flip180(1.0), None)
        )
        records = run_sweep(small_config(corpus), provider, cache, predictor)
        corrected = [r for r in records if r.condition == "corrected"]
        assert all(r.residual == 0 for r in corrected)


class TestAggregate:
    def test_single_record_passthrough(self):
        rows = aggregate([SweepRecord("a.png", 90, "rotated", 17.5)])
        assert rows == [AngleAggregate(90, 17.5, None, None, 1)]

    def test_mean_of_two_images(self):
        rows = aggregate(
            [
                SweepRecord("a.png", 90, "rotated", 20.0),
                SweepRecord("b.png", 90, "rotated", 40.0),
            ]
        )
        assert rows[0].mean_pe_rotated == pytest.approx(30.0)
        assert rows[0].n == 2

    def test_errors_excluded(self):
        rows = aggregate(
            [
                SweepRecord("a.png", 90, "rotated", 20.0),
                SweepRecord("b.png", 90, "rotated", None, error="boom"),
            ]
        )
        assert rows[0].mean_pe_rotated == pytest.approx(20.0)
        assert rows[0].n == 1

    def test_empty_input(self):
        assert aggregate([]) == []

    def test_ordered_by_angle(self):
        rows = aggregate(
            [
                SweepRecord("a.png", 180, "rotated", 10.0),
                SweepRecord("a.png", 0, "rotated", 0.0),
            ]
        )
        assert [row.angle for row in rows] == [0, 180]


class TestRecordIO:
    def test_csv_round_trip(self, corpus, tmp_path):
        provider, cache, predictor = synthetic_setup(tmp_path)
        records = run_sweep(small_config(corpus), provider, cache, predictor)
        path = tmp_path / "records.csv"
        write_records_csv(records, path)
        assert read_records_csv(path) == records

    def test_csv_header(self, tmp_path):
        path = tmp_path / "records.csv"
        write_records_csv([], path)
        assert path.read_text().splitlines()[0] == (
            "image_id,applied_angle,condition,percentage_error,"
            "predicted_total,residual,error"
        )

    def test_jsonl_twin(self, tmp_path):
        import json

        records = [
            SweepRecord("a.png", 0, "rotated", 0.0),
            SweepRecord("a.png", 3, "corrected", 1.25, 3, 0),
        ]
        path = tmp_path / "records.jsonl"
        write_records_jsonl(records, path)
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert lines[1]["predicted_total"] == 3
        assert lines[1]["residual"] == 0

    def test_aggregates_csv(self, tmp_path):
        path = tmp_path / "agg.csv"
        write_aggregates_csv([AngleAggregate(0, 0.0, 0.0, 0.0, 3)], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "angle,mean_pe_rotated,mean_pe_corrected,mean_residual,n"
        assert lines[1] == "0,0.0,0.0,0.0,3"

    def test_identical_runs_identical_files(self, corpus, tmp_path):
        provider_a, cache_a, pred_a = synthetic_setup(tmp_path / "a")
        provider_b, cache_b, pred_b = synthetic_setup(tmp_path / "b")
        config = small_config(corpus)
        path_a, path_b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_records_csv(run_sweep(config, provider_a, cache_a, pred_a), path_a)
        write_records_csv(run_sweep(config, provider_b, cache_b, pred_b), path_b)
        assert path_a.read_bytes() == path_b.read_bytes()
