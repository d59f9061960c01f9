"""实验编排测试

测试随机流、实验批次、运行清单、查找表构建与自检套件。
"""

import numpy as np
import orjson
import pandas as pd
import pytest
from structlog.testing import capture_logs

from evolvability_sim.abstract.runner import run_abstract
from evolvability_sim.config.settings import (
    ExperimentConfig,
    ModelKind,
    RobotParams,
    TableSettings,
)
from evolvability_sim.core.errors import ConfigurationError, EmptyInputError
from evolvability_sim.harness import experiment
from evolvability_sim.harness.compare import COMPARISON_FILE, compare_batteries
from evolvability_sim.harness.experiment import (
    analyze_directory,
    analyze_outputs,
    run_experiment,
)
from evolvability_sim.harness.manifest import (
    check_manifest,
    read_config,
    read_manifest,
)
from evolvability_sim.harness.seeds import seed_stream
from evolvability_sim.harness.tabulation import TABLE_DIR, build_table, partition
from evolvability_sim.harness.verify import CHECKS, SelfTest

SMALL_MASK = "**0000000000000000"


def abstract_config(tmp_path, **overrides) -> ExperimentConfig:
    data = {
        "model": "abstract-niched",
        "runs": 3,
        "base_seed": 7,
        "output_dir": tmp_path / "abstract",
        "threads": 1,
        "abstract": {"pop_size": 50, "generations": 12, "init_evolvability": 0.2},
        "checkpoints": {"abstract_every": 5},
    }
    data.update(overrides)
    return ExperimentConfig.model_validate(data)


def robot_table_config(tmp_path) -> ExperimentConfig:
    return ExperimentConfig(
        model=ModelKind.ROBOT_NICHED,
        output_dir=tmp_path / "table_build",
        robot=RobotParams(timesteps=40),
        table=TableSettings(mask=SMALL_MASK, shard_size=4),
    )


class TestSeeds:
    """测试随机流"""

    @pytest.mark.unit
    def test_matches_spawn(self):
        """测试与SeedSequence.spawn得到的流相同"""
        children = np.random.SeedSequence(42).spawn(4)
        for run_index, child in enumerate(children):
            expected = np.random.Generator(np.random.PCG64(child)).random(5)
            assert np.array_equal(seed_stream(42, run_index).random(5), expected)

    @pytest.mark.unit
    def test_substreams_differ(self):
        """测试辅助流与主流不同"""
        main = seed_stream(1, 0).random(5)
        assert not np.array_equal(main, seed_stream(1, 0, substream=1).random(5))
        assert not np.array_equal(main, seed_stream(1, 1).random(5))

    @pytest.mark.unit
    def test_negative_rejected(self):
        """测试负数种子"""
        with pytest.raises(ValueError):
            seed_stream(-1)


class TestAbstractExperiment:
    """测试抽象模型实验批次"""

    @pytest.mark.integration
    def test_outputs(self, tmp_path):
        """测试输出文件、清单与汇总"""
        config = abstract_config(tmp_path)
        result = run_experiment(config)
        out = config.output_dir

        assert result.ok
        assert len(result.records) == 3
        for name in (
            "config.json",
            "manifest.json",
            "runs/run_000.csv",
            "runs/run_002_final.csv",
            "aggregate.csv",
            "heatmap.csv",
            "distance_profile.csv",
            "distance_profile_correlation.json",
            "summary.json",
        ):
            assert (out / name).exists(), name
        assert check_manifest(out) == []

        manifest = read_manifest(out)
        assert [run.seed for run in manifest.runs] == [7, 8, 9]
        assert manifest.code_version == "1.0.0"

        aggregate = pd.read_csv(out / "aggregate.csv")
        assert aggregate["checkpoint"].tolist() == [0, 5, 10, 12]

        summary = orjson.loads((out / "summary.json").read_bytes())
        assert summary["runs"] == 3
        assert "final_vs_initial" in summary["niche_mean_evolvability"]

        final = pd.read_csv(out / "runs" / "run_000_final.csv")
        assert list(final.columns) == ["x", "y", "evolvability"]

    @pytest.mark.integration
    def test_reanalyze(self, tmp_path):
        """测试从保存的记录重新分析得到相同的汇总"""
        config = abstract_config(tmp_path)
        run_experiment(config)
        out = config.output_dir
        before = pd.read_csv(out / "aggregate.csv")
        (out / "aggregate.csv").unlink()

        written = analyze_directory(out, read_config(out))
        assert out / "aggregate.csv" in written
        pd.testing.assert_frame_equal(pd.read_csv(out / "aggregate.csv"), before)

    @pytest.mark.unit
    def test_schedule_mismatch_recorded(self, tmp_path):
        """测试检查点序列不一致时跳过汇总表，记录警告并写入summary"""
        config = abstract_config(tmp_path)
        params = {"pop_size": 20, "generations": 12}
        records, finals = [], []
        for run_index, every in enumerate((5, 4)):
            record, pop = run_abstract(
                params, "niched", seed=7, run_index=run_index, checkpoint_every=every
            )
            records.append(record)
            finals.append(pd.DataFrame({"x": pop.x, "y": pop.y, "evolvability": pop.evo}))

        with capture_logs() as logs:
            written = analyze_outputs(config, records, finals, tmp_path)

        assert not (tmp_path / "aggregate.csv").exists()
        assert tmp_path / "summary.json" in written
        summary = orjson.loads((tmp_path / "summary.json").read_bytes())
        assert "检查点序列" in summary["skipped"]["aggregate"]
        assert summary["runs"] == 2
        events = [log for log in logs if log["event"] == "aggregate_skipped"]
        assert len(events) == 1
        assert events[0]["log_level"] == "warning"

    @pytest.mark.integration
    def test_summary_has_no_skipped_section(self, tmp_path):
        """测试所有分析都写出时summary没有skipped项"""
        config = abstract_config(tmp_path, runs=2)
        run_experiment(config)
        summary = orjson.loads((config.output_dir / "summary.json").read_bytes())
        assert "skipped" not in summary

    @pytest.mark.integration
    def test_parallel_matches_serial(self, tmp_path):
        """测试进程池执行与串行执行结果相同"""
        serial = run_experiment(abstract_config(tmp_path / "a"))
        parallel = run_experiment(abstract_config(tmp_path / "b", threads=2))
        for a, b in zip(serial.records, parallel.records):
            assert a.to_frame().equals(b.to_frame())

    @pytest.mark.integration
    def test_failed_run_recorded(self, tmp_path, monkeypatch):
        """测试单次运行失败不中断批次"""
        original = experiment._simulate

        def flaky(config, run_index, *args):
            if run_index == 1:
                raise RuntimeError("injected")
            return original(config, run_index, *args)

        monkeypatch.setattr(experiment, "_simulate", flaky)
        result = run_experiment(abstract_config(tmp_path))

        assert not result.ok
        assert len(result.records) == 2
        summary = result.manifest.failure_summary()
        assert summary["failed"] == 1
        assert summary["failures"][0]["run_index"] == 1
        assert "injected" in summary["failures"][0]["error"]
        assert not (config_dir(tmp_path) / "runs" / "run_001.csv").exists()
        assert check_manifest(config_dir(tmp_path)) == []

    @pytest.mark.unit
    def test_analyze_empty_directory(self, tmp_path):
        """测试没有运行记录的目录"""
        with pytest.raises(EmptyInputError):
            analyze_directory(tmp_path, abstract_config(tmp_path))

    @pytest.mark.unit
    def test_tampered_manifest(self, tmp_path):
        """测试清单校验发现缺失文件"""
        config = abstract_config(tmp_path, runs=1)
        run_experiment(config)
        (config.output_dir / "heatmap.csv").unlink()
        assert any("heatmap.csv" in problem for problem in check_manifest(config.output_dir))


class TestCompareBatteries:
    """测试批次间的配对比较"""

    @staticmethod
    def batteries(tmp_path, **drift_overrides):
        niched = abstract_config(tmp_path, output_dir=tmp_path / "niched")
        drift = abstract_config(
            tmp_path, model="abstract-drift", output_dir=tmp_path / "drift", **drift_overrides
        )
        run_experiment(niched)
        run_experiment(drift)
        return niched.output_dir, drift.output_dir

    @pytest.mark.integration
    def test_compare_niched_with_drift(self, tmp_path):
        """测试按种子配对比较有限容量生态位与漂移"""
        niched, drift = self.batteries(tmp_path)
        result, path = compare_batteries(niched, drift)

        assert path == niched / COMPARISON_FILE
        assert result["paired_seeds"] == [7, 8, 9]
        assert result["unmatched"] == {"a": 0, "b": 0}
        assert result["a"]["model"] == "abstract-niched"
        assert result["b"]["model"] == "abstract-drift"
        assert result["a"]["problems"] == []
        assert set(result["statistics"]) == {
            "pop_mean_evolvability",
            "niche_mean_evolvability",
            "cumulative_individuals",
        }
        entry = result["statistics"]["pop_mean_evolvability"]
        assert entry["a_vs_b"]["n"] == 3
        p = entry["a_vs_b"]["p_one_sided"]
        assert p is None or 0.0 <= p <= 1.0

        saved = orjson.loads(path.read_bytes())
        assert saved["paired_seeds"] == [7, 8, 9]
        assert saved["statistics"]["niche_mean_evolvability"]["a_mean"] == pytest.approx(
            result["statistics"]["niche_mean_evolvability"]["a_mean"]
        )

    @pytest.mark.integration
    def test_unpaired_runs_dropped(self, tmp_path):
        """测试只比较种子相同的运行并记录被丢弃的运行数"""
        niched, drift = self.batteries(tmp_path, runs=2)
        out = tmp_path / "reports" / "niched_vs_drift.json"
        with capture_logs() as logs:
            result, path = compare_batteries(niched, drift, out)

        assert path == out and out.exists()
        assert result["paired_seeds"] == [7, 8]
        assert result["unmatched"] == {"a": 1, "b": 0}
        assert any(log["event"] == "unpaired_runs_dropped" for log in logs)

    @pytest.mark.integration
    def test_no_common_seeds(self, tmp_path):
        """测试种子不重合的批次无法配对"""
        niched, drift = self.batteries(tmp_path, base_seed=100)
        with pytest.raises(EmptyInputError):
            compare_batteries(niched, drift)
        assert not (niched / COMPARISON_FILE).exists()


def config_dir(tmp_path):
    return tmp_path / "abstract"


class TestTableBuild:
    """测试查找表构建"""

    @pytest.mark.unit
    def test_partition(self):
        """测试区间划分"""
        assert partition(9, 4) == [(0, 4), (4, 8), (8, 9)]
        assert partition(3, 10) == [(0, 3)]

    @pytest.mark.integration
    def test_build_small_table(self, tmp_path):
        """测试构建、摘要与分片"""
        config = robot_table_config(tmp_path)
        result = build_table(config, threads=1)
        assert result.manifest.space_size == 9
        assert [s.start for s in result.manifest.shards] == [0, 4, 8]
        assert result.summary.size == 9
        assert 1 <= result.summary.min_evolvability <= result.summary.max_evolvability <= 4
        summary = orjson.loads((config.output_dir / "summary.json").read_bytes())
        assert summary["size"] == 9

    @pytest.mark.slow
    def test_thread_count_does_not_change_output(self, tmp_path):
        """测试单进程与双进程构建的分片逐字节相同"""
        shards = []
        for threads in (1, 2):
            config = robot_table_config(tmp_path / f"t{threads}")
            result = build_table(config, threads=threads)
            table_dir = config.output_dir / TABLE_DIR
            shards.append(
                {s.file: (table_dir / s.file).read_bytes() for s in result.manifest.shards}
            )
        assert shards[0] == shards[1]


class TestRobotExperiment:
    """测试基于查找表的实验批次"""

    @pytest.mark.unit
    def test_requires_table(self, tmp_path):
        """测试缺少查找表"""
        config = ExperimentConfig(model=ModelKind.ROBOT_DRIFT, output_dir=tmp_path)
        with pytest.raises(ConfigurationError):
            run_experiment(config)

    @pytest.mark.integration
    def test_mask_mismatch(self, tmp_path):
        """测试查找表掩码与配置不一致"""
        table = build_table(robot_table_config(tmp_path), threads=1)
        config = ExperimentConfig(
            model=ModelKind.ROBOT_NICHED,
            output_dir=tmp_path / "run",
            table_manifest=table.manifest_path,
        )
        with pytest.raises(ConfigurationError):
            run_experiment(config)

    @pytest.mark.integration
    def test_niched_end_to_end(self, tmp_path):
        """测试从构建查找表到实验分析"""
        table = build_table(robot_table_config(tmp_path), threads=1)
        config = ExperimentConfig.model_validate(
            {
                "model": "robot-niched",
                "runs": 2,
                "output_dir": tmp_path / "run",
                "threads": 1,
                "table_manifest": table.manifest_path,
                "table": {"mask": SMALL_MASK},
                "robot_drift": {"generations": 6},
                "analysis": {"heritability_samples": 200},
            }
        )
        result = run_experiment(config)
        out = config.output_dir
        assert result.ok
        assert check_manifest(out) == []

        final = pd.read_csv(out / "runs" / "run_001_final.csv")
        assert list(final.columns) == ["cell", "evolvability"]
        assert final["evolvability"].between(1, 4).all()

        heat = (out / "heatmap.csv").read_text().splitlines()
        assert heat[0] == "origin,0,0"
        assert len(heat) == 21

        heritability = orjson.loads((out / "heritability.json").read_bytes())
        assert heritability["sample_size"] == 200
        assert heritability["mask"] == SMALL_MASK


class TestNeatExperiment:
    """测试实用模型实验批次"""

    @pytest.mark.integration
    @pytest.mark.parametrize("model", ["neat-niched", "neat-random-control"])
    def test_small_batch(self, tmp_path, model):
        """测试小规模实用模型批次"""
        config = ExperimentConfig.model_validate(
            {
                "model": model,
                "runs": 2,
                "output_dir": tmp_path / model,
                "threads": 1,
                "neat": {
                    "evaluation_budget": 20,
                    "evolvability_samples": 3,
                    "estimate_sample_cap": 2,
                },
                "neat_robot": {**RobotParams.practical().model_dump(), "timesteps": 30},
                "checkpoints": {"neat_every": 10},
            }
        )
        result = run_experiment(config)
        out = config.output_dir
        assert result.ok
        assert [r.checkpoints for r in result.records] == [[1, 10, 20]] * 2
        assert (out / "runs" / "run_000_genomes.jsonl").exists()
        assert "final_sample" not in result.manifest.runs[0].metadata
        assert result.manifest.runs[0].metadata["evaluations"] == 20
        assert check_manifest(out) == []


class TestSelfTest:
    """测试自检套件"""

    @pytest.mark.unit
    @pytest.mark.parametrize("name", ["neighborhood", "pearson", "sensor_symmetry"])
    def test_fast_checks(self, name):
        """测试快速自检项通过"""
        result = CHECKS[name]()
        assert result.passed, result.detail

    @pytest.mark.slow
    def test_all_checks(self):
        """测试全部自检项通过"""
        results = SelfTest().run()
        assert [r.name for r in results] == list(CHECKS)
        assert all(r.passed for r in results), [r.to_dict() for r in results if not r.passed]

    @pytest.mark.unit
    def test_failure_is_reported(self, monkeypatch):
        """测试自检项抛出异常时记为失败"""

        def broken():
            raise RuntimeError("boom")

        monkeypatch.setitem(CHECKS, "pearson", broken)
        (result,) = SelfTest().run(["pearson"])
        assert not result.passed
        assert "boom" in result.detail
