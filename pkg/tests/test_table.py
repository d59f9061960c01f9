"""查找表测试

测试两阶段构建、分片文件、清单校验，以及基于查找表的漂移与有限容量模型。
"""

import numpy as np
import orjson
import pytest
from scipy import stats

from evolvability_sim.ann.evolution import (
    heritability,
    mutate_population,
    run_robot_drift,
    run_robot_niched,
)
from evolvability_sim.ann.genome import GenotypeSpace, single_mutation_neighbors
from evolvability_sim.ann.network import FixedAnnController
from evolvability_sim.ann.table import (
    FLAG_VALID,
    HEADER,
    RECORD_DTYPE,
    LookupTable,
    ShardEntry,
    TableManifest,
    evolvability_counts,
    load_table,
    read_shard,
    tabulate,
    verify_coverage,
    write_manifest,
    write_shard,
)
from evolvability_sim.core.errors import ConfigurationError, TableIntegrityError
from evolvability_sim.harness.seeds import seed_stream
from evolvability_sim.maze.geometry import default_maze
from evolvability_sim.maze.robot import evaluate_controller


def direct_cell(maze, robot, genome) -> int:
    return evaluate_controller(maze, FixedAnnController(genome), robot).niche.cell_id


def save_table(directory, table: LookupTable, maze, shard_size: int = 4):
    """把查找表写成分片与清单"""
    records = table.records()
    shards = []
    for index, start in enumerate(range(0, table.size, shard_size)):
        chunk = records[start : start + shard_size]
        name = f"shard_{index:05d}.evlt"
        digest = write_shard(directory / name, start, chunk)
        shards.append(ShardEntry(file=name, start=start, count=chunk.size, digest=digest))
    manifest = TableManifest(
        mask=table.space.mask,
        space_size=table.size,
        shard_size=shard_size,
        maze_digest=maze.digest(),
        steepness=4.9,
        robot={},
        shards=shards,
    )
    return write_manifest(directory / "manifest.json", manifest)


class TestTabulate:
    """测试查找表构建"""

    @pytest.mark.oracle
    def test_small_space_matches_direct_simulation(self, small_space, short_robot):
        """测试3^2空间的每条记录与逐个直接仿真一致"""
        maze = default_maze()
        records = tabulate(maze, short_robot, small_space)
        assert records.size == 9
        for local_id in range(small_space.size):
            genome = small_space.genome(local_id)
            neighbors = single_mutation_neighbors(genome, small_space)
            assert records["niche"][local_id] == direct_cell(maze, short_robot, genome)
            assert records["evolvability"][local_id] == len(
                {direct_cell(maze, short_robot, g) for g in neighbors}
            )
        assert np.all(records["flags"] == FLAG_VALID)

    @pytest.mark.oracle
    def test_neutral_genome_default_space(self, short_robot):
        """测试中性基因组在默认空间中的演化能力"""
        maze = default_maze()
        space = GenotypeSpace()
        records = tabulate(maze, short_robot, space, id_range=(0, 1))
        neighbors = single_mutation_neighbors(space.genome(0), space)
        assert len(neighbors) == 24
        expected = len({direct_cell(maze, short_robot, g) for g in neighbors})
        assert records["evolvability"][0] == expected
        assert 1 <= expected <= 24

    @pytest.mark.unit
    def test_range_matches_whole(self, small_space, short_robot):
        """测试分区间构建与整体构建一致"""
        maze = default_maze()
        whole = tabulate(maze, short_robot, small_space)
        parts = np.concatenate(
            [
                tabulate(maze, short_robot, small_space, (lo, min(lo + 4, 9)))
                for lo in (0, 4, 8)
            ]
        )
        assert np.array_equal(whole, parts)

    @pytest.mark.unit
    def test_range_simulates_only_neighborhood(self, short_robot, monkeypatch):
        """测试区间构建只仿真区间及其邻居"""
        import evolvability_sim.ann.table as table_module

        maze = default_maze()
        space = GenotypeSpace("******000000000000")
        simulated = []
        original = table_module.simulate_niches

        def spy(maze_, robot_, space_, local_ids, *args, **kwargs):
            simulated.append(np.asarray(local_ids).copy())
            return original(maze_, robot_, space_, local_ids, *args, **kwargs)

        monkeypatch.setattr(table_module, "simulate_niches", spy)
        records = tabulate(maze, short_robot, space, id_range=(10, 13))

        ids = np.arange(10, 13)
        expected_ids = np.unique(np.concatenate([ids, space.neighbors(ids).ravel()]))
        assert len(simulated) == 1
        assert np.array_equal(simulated[0], expected_ids)
        assert simulated[0].size < space.size

        niches = original(maze, short_robot, space, np.arange(space.size))
        assert np.array_equal(records["niche"], niches[ids])
        assert np.array_equal(
            records["evolvability"], evolvability_counts(niches, space, ids)
        )

    @pytest.mark.unit
    def test_evolvability_counts_with_index(self, small_space):
        """测试按已排序编号索引的紧凑生态位数组与整体数组结果相同"""
        niches = np.arange(9, dtype=np.uint16) % 4
        ids = np.array([0, 4])
        index = np.unique(np.concatenate([ids, small_space.neighbors(ids).ravel()]))
        compact = evolvability_counts(niches[index], small_space, ids, index=index)
        assert np.array_equal(compact, evolvability_counts(niches, small_space, ids))

    @pytest.mark.unit
    def test_invalid_range(self, small_space, short_robot):
        """测试区间越界"""
        with pytest.raises(ConfigurationError):
            tabulate(default_maze(), short_robot, small_space, (0, 10))

    @pytest.mark.unit
    def test_evolvability_counts(self, small_space):
        """测试由已存生态位统计不同生态位数"""
        niches = np.zeros(9, dtype=np.uint16)
        niches[[1, 3]] = 5
        counts = evolvability_counts(niches, small_space, np.arange(9))
        # 0的邻居为1、2、3、6：生态位 {5, 0, 5, 0}
        assert counts[0] == 2
        assert np.all((counts >= 1) & (counts <= 4))


class TestLookupTable:
    """测试查找表对象"""

    @pytest.mark.unit
    def test_summary(self, synthetic_table):
        """测试分布摘要"""
        summary = synthetic_table.summary()
        assert summary.size == 27
        assert summary.min_evolvability == 1
        assert summary.max_evolvability == 4
        assert sum(summary.histogram.values()) == 27
        assert summary.distinct_niches == 7

    @pytest.mark.unit
    def test_size_mismatch(self, small_space):
        """测试数组大小与空间不一致"""
        with pytest.raises(TableIntegrityError):
            LookupTable(small_space, np.zeros(8), np.zeros(9))

    @pytest.mark.unit
    def test_invalid_record(self, small_space):
        """测试无效记录"""
        records = np.zeros(9, dtype=RECORD_DTYPE)
        with pytest.raises(TableIntegrityError):
            LookupTable.from_records(small_space, records)


class TestShards:
    """测试分片文件与清单"""

    @pytest.mark.unit
    def test_shard_header(self, tmp_path, synthetic_table):
        """测试分片文件头"""
        path = tmp_path / "shard.evlt"
        write_shard(path, 10, synthetic_table.records()[:5])
        raw = path.read_bytes()
        assert len(raw) == HEADER.size + 5 * 4
        assert raw[:4] == b"EVLT"
        start, records = read_shard(path)
        assert start == 10
        assert records["niche"].tolist() == synthetic_table.niches[:5].tolist()

    @pytest.mark.unit
    def test_corrupt_shards(self, tmp_path, synthetic_table):
        """测试魔数错误与长度不一致"""
        path = tmp_path / "shard.evlt"
        write_shard(path, 0, synthetic_table.records()[:5])
        raw = path.read_bytes()

        path.write_bytes(b"NOPE" + raw[4:])
        with pytest.raises(TableIntegrityError):
            read_shard(path)

        path.write_bytes(raw[:-1])
        with pytest.raises(TableIntegrityError):
            read_shard(path)

    @pytest.mark.unit
    def test_coverage(self):
        """测试覆盖校验"""
        verify_coverage([(4, 5), (0, 4)], 9)
        with pytest.raises(TableIntegrityError, match="缺口"):
            verify_coverage([(0, 4), (5, 4)], 9)
        with pytest.raises(TableIntegrityError, match="重叠"):
            verify_coverage([(0, 5), (4, 5)], 9)
        with pytest.raises(TableIntegrityError):
            verify_coverage([(0, 4)], 9)

    @pytest.mark.integration
    def test_load_roundtrip(self, tmp_path, synthetic_table):
        """测试写出后重新加载"""
        maze = default_maze()
        manifest_path = save_table(tmp_path, synthetic_table, maze)
        loaded = load_table(manifest_path, maze)
        assert np.array_equal(loaded.niches, synthetic_table.niches)
        assert np.array_equal(loaded.evolvability, synthetic_table.evolvability)
        assert loaded.space == synthetic_table.space

    @pytest.mark.integration
    def test_load_detects_problems(self, tmp_path, synthetic_table, open_arena):
        """测试迷宫摘要、分片摘要与缺失分片"""
        maze = default_maze()
        manifest_path = save_table(tmp_path, synthetic_table, maze)

        with pytest.raises(TableIntegrityError, match="迷宫摘要"):
            load_table(manifest_path, open_arena)

        shard = tmp_path / "shard_00001.evlt"
        raw = bytearray(shard.read_bytes())
        raw[-1] ^= 0xFF
        shard.write_bytes(bytes(raw))
        with pytest.raises(TableIntegrityError, match="摘要不匹配"):
            load_table(manifest_path)

        shard.unlink()
        with pytest.raises(TableIntegrityError, match="缺失"):
            load_table(manifest_path)

    @pytest.mark.unit
    def test_bad_manifest(self, tmp_path):
        """测试清单结构错误"""
        path = tmp_path / "manifest.json"
        path.write_bytes(orjson.dumps({"mask": "**0000000000000000"}))
        with pytest.raises(TableIntegrityError):
            load_table(path)


class TestRobotModels:
    """测试基于查找表的模型"""

    @pytest.mark.unit
    def test_mutation_probability(self, synthetic_table):
        """测试变异概率为0与1"""
        ids = np.arange(27)
        rng = seed_stream(0)
        assert np.array_equal(mutate_population(ids, synthetic_table, 0.0, rng), ids)
        mutated = mutate_population(ids, synthetic_table, 1.0, rng)
        neighbors = synthetic_table.space.neighbors(ids)
        assert all(mutated[i] in neighbors[i] for i in range(27))

    @pytest.mark.oracle
    def test_single_mutation_uniform(self, synthetic_table):
        """测试单个体以概率1突变时落在6个邻居上均匀分布"""
        ids = np.zeros(30_000, dtype=np.int64)
        mutated = mutate_population(ids, synthetic_table, 1.0, seed_stream(1))
        values, counts = np.unique(mutated, return_counts=True)
        expected = synthetic_table.space.neighbors(ids[:1])[0]
        assert sorted(values.tolist()) == sorted(expected.tolist())
        assert stats.chisquare(counts).pvalue > 1e-4

    @pytest.mark.unit
    def test_drift(self, synthetic_table):
        """测试漂移模型"""
        params = {"pop_size": 100, "generations": 12}
        record, ids = run_robot_drift(synthetic_table, params, seed=3, checkpoint_every=5)
        assert record.checkpoints == [0, 5, 10, 12]
        assert set(record.column("pop_size").tolist()) == {100}
        assert record.final().cumulative_individuals == 100 * 13
        assert ids.size == 100
        assert record.rows[0].occupied_niches == 1

    @pytest.mark.unit
    def test_niched_capacity(self, synthetic_table):
        """测试有限容量模型不超过生态位容量"""
        record, ids = run_robot_niched(synthetic_table, {"generations": 20}, seed=4)
        occupancy = np.bincount(synthetic_table.niche_of(ids).astype(np.int64))
        assert occupancy.max() <= 5
        assert record.final().pop_size == ids.size <= 5 * 7
        assert record.rows[0].pop_size == 1

    @pytest.mark.unit
    def test_reproducible(self, synthetic_table):
        """测试可复现"""
        a, _ = run_robot_niched(synthetic_table, {"generations": 10}, seed=5, run_index=2)
        b, _ = run_robot_niched(synthetic_table, {"generations": 10}, seed=5, run_index=2)
        assert a.to_frame().equals(b.to_frame())
        assert a.seed == 7

    @pytest.mark.unit
    def test_heritability(self, synthetic_table):
        """测试亲子相关"""
        result = heritability(synthetic_table, 500, seed_stream(6))
        assert result.defined
        assert -1.0 <= result.r <= 1.0
        with pytest.raises(ConfigurationError):
            heritability(synthetic_table, 2)

    @pytest.mark.unit
    def test_heritability_undefined_for_constant_table(self, small_space):
        """测试演化能力恒定时相关未定义"""
        table = LookupTable(small_space, np.zeros(9, np.uint16), np.full(9, 3, np.uint8))
        assert not heritability(table, 100).defined
