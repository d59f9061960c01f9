"""实用模型测试

测试可变拓扑基因组、变异算子、批量激活与稳态演化。
"""

import numpy as np
import orjson
import pytest
from scipy import stats

from evolvability_sim.config.settings import ControlMode, NeatParams, RobotParams
from evolvability_sim.harness.seeds import seed_stream
from evolvability_sim.maze.geometry import default_maze
from evolvability_sim.neat.evolution import (
    N_CELLS,
    assign_niche,
    estimate_evolvability,
    evaluate_genomes,
    run_neat_niched,
)
from evolvability_sim.neat.genome import (
    ConnectionGene,
    InnovationTracker,
    NeatGenome,
    NodeRole,
    initial_genome,
)
from evolvability_sim.neat.mutation import (
    _add_connection,
    _add_node,
    mutate_neat,
    perturb_weights,
)
from evolvability_sim.neat.network import NeatBatch, node_order


@pytest.fixture
def founder() -> NeatGenome:
    return initial_genome(seed_stream(0), InnovationTracker())


@pytest.fixture
def short_practical() -> RobotParams:
    """步数较少的6传感器机器人"""
    return RobotParams.practical().model_copy(update={"timesteps": 40})


class TestGenome:
    """测试基因组"""

    @pytest.mark.unit
    def test_initial_topology(self, founder):
        """测试初始拓扑：6输入、偏置、2输出，14个连接"""
        assert len(founder.nodes) == 9
        assert founder.n_inputs == 6
        assert founder.node_ids(NodeRole.BIAS) == [6]
        assert founder.node_ids(NodeRole.OUTPUT) == [7, 8]
        assert founder.hidden_count == 0
        assert len(founder.connections) == 14
        assert [c.innovation for c in founder.connections] == list(range(14))
        assert all(-3.0 <= c.weight <= 3.0 for c in founder.connections)
        founder.validate()

    @pytest.mark.unit
    def test_tracker_continues_after_founder(self):
        """测试追踪器在初始拓扑之后继续编号"""
        tracker = InnovationTracker()
        genome = initial_genome(seed_stream(1), tracker)
        assert tracker.next_innovation == 14
        assert tracker.next_node_id == 9
        assert InnovationTracker.from_genome(genome) == tracker

    @pytest.mark.unit
    def test_json_roundtrip(self, founder):
        """测试JSON序列化"""
        restored = NeatGenome.from_json(founder.to_json())
        assert restored == founder
        assert orjson.loads(founder.to_json())["key"] == founder.key

    @pytest.mark.unit
    def test_validate_rejects_duplicates(self, founder):
        """测试重复的启用连接与越界权重"""
        first = founder.connections[0]
        duplicate = ConnectionGene(first.source, first.target, 0.0, True, 99)
        with pytest.raises(ValueError):
            NeatGenome(founder.key, founder.nodes, founder.connections + (duplicate,)).validate()

        loud = ConnectionGene(first.source, first.target, 3.5, False, 99)
        with pytest.raises(ValueError):
            NeatGenome(founder.key, founder.nodes, founder.connections + (loud,)).validate()


class TestMutation:
    """测试变异算子"""

    @pytest.mark.oracle
    def test_weight_clamp(self):
        """测试10^5个权重2.9在半宽0.5扰动后落在[2.4, 3.0]"""
        params = NeatParams(weight_perturb_prob=1.0)
        weights = perturb_weights(np.full(100_000, 2.9), params, seed_stream(2))
        assert weights.min() >= 2.4
        assert weights.max() == 3.0
        assert np.count_nonzero(weights == 3.0) > 0

    @pytest.mark.unit
    def test_perturb_probability_zero(self):
        """测试扰动概率为0时权重不变"""
        params = NeatParams(weight_perturb_prob=0.0)
        weights = np.linspace(-3.0, 3.0, 50)
        assert np.array_equal(perturb_weights(weights, params, seed_stream(3)), weights)

    @pytest.mark.unit
    def test_add_node(self, founder):
        """测试拆分连接"""
        tracker = InnovationTracker.from_genome(founder)
        child = _add_node(founder, tracker, seed_stream(4))
        assert child.hidden_count == 1
        assert len(child.connections) == 16
        disabled = [c for c in child.connections if not c.enabled]
        assert len(disabled) == 1
        old = disabled[0]
        hidden = child.node_ids(NodeRole.HIDDEN)[0]
        into, out = child.connections[-2:]
        assert (into.source, into.target, into.weight) == (old.source, hidden, 1.0)
        assert (out.source, out.target, out.weight) == (hidden, old.target, old.weight)
        assert [into.innovation, out.innovation] == [14, 15]
        child.validate()

    @pytest.mark.unit
    def test_add_connection(self, founder):
        """测试添加连接：新的节点对，权重在上限内"""
        tracker = InnovationTracker.from_genome(founder)
        child = _add_connection(founder, NeatParams(), tracker, seed_stream(5))
        assert len(child.connections) == 15
        new = child.connections[-1]
        assert (new.source, new.target) not in founder.connected_pairs()
        assert -3.0 <= new.weight <= 3.0
        assert new.innovation == 14
        child.validate()

    @pytest.mark.unit
    def test_add_connection_saturated(self):
        """测试拓扑饱和时不添加连接"""
        tracker = InnovationTracker()
        genome = initial_genome(seed_stream(6), tracker, n_inputs=1)
        rng = seed_stream(7)
        for _ in range(20):
            genome = _add_connection(genome, NeatParams(), tracker, rng)
        # 4个可作源的节点 × 2个输出
        assert len(genome.connections) == 8
        assert _add_connection(genome, NeatParams(), tracker, rng) is genome

    @pytest.mark.unit
    def test_mutate_assigns_new_key(self, founder):
        """测试后代获得新的标识且亲本不变"""
        tracker = InnovationTracker.from_genome(founder)
        params = NeatParams(add_connection_prob=1.0, add_node_prob=1.0)
        child = mutate_neat(founder, params, tracker, seed_stream(8))
        assert child.key != founder.key
        assert len(founder.connections) == 14
        assert child.hidden_count == 1
        child.validate()


class TestNetwork:
    """测试批量激活"""

    @pytest.mark.unit
    def test_node_order(self, founder):
        """测试槽位顺序"""
        child = _add_node(founder, InnovationTracker.from_genome(founder), seed_stream(9))
        assert node_order(child) == list(range(10))

    @pytest.mark.unit
    def test_first_step(self, founder):
        """测试传感器为0时第一步输出只由偏置连接决定"""
        batch = NeatBatch([founder])
        batch.reset(1)
        out = batch.activate(np.zeros((1, 6)))
        bias = {c.target: c.weight for c in founder.connections if c.source == 6}
        expected = [1.0 / (1.0 + np.exp(-4.9 * bias[t])) for t in (7, 8)]
        assert out[0].tolist() == pytest.approx(expected)

    @pytest.mark.unit
    def test_batch_rows_independent(self, founder):
        """测试补齐后的批量激活与单独激活一致"""
        tracker = InnovationTracker.from_genome(founder)
        other = _add_node(founder, tracker, seed_stream(10))
        sensors = seed_stream(11).random((5, 2, 6))
        together = NeatBatch([founder, other])
        alone = NeatBatch([founder])
        together.reset(2)
        alone.reset(1)
        for step in sensors:
            assert together.activate(step)[0] == pytest.approx(alone.activate(step[:1])[0])

    @pytest.mark.unit
    def test_mixed_sensor_counts(self, founder):
        """测试传感器数不一致"""
        small = initial_genome(seed_stream(12), InnovationTracker(), n_inputs=3)
        with pytest.raises(ValueError):
            NeatBatch([founder, small])
        with pytest.raises(ValueError):
            NeatBatch([])


class TestNeatEvolution:
    """测试稳态演化"""

    @pytest.mark.unit
    def test_evaluate_genomes(self, founder, short_practical):
        """测试评估结果在格子范围内且可复现"""
        maze = default_maze()
        cells = evaluate_genomes(maze, [founder, founder], short_practical)
        assert cells[0] == cells[1]
        assert 0 <= cells[0] < N_CELLS

    @pytest.mark.unit
    def test_estimate_bounds(self, founder, short_practical):
        """测试演化能力估计的取值范围"""
        params = NeatParams(evolvability_samples=12)
        estimate = estimate_evolvability(
            founder, default_maze(), params, seed_stream(13), short_practical
        )
        assert 1 <= estimate <= 12

    @pytest.mark.integration
    def test_small_run(self, tmp_path, short_practical):
        """测试小规模运行的检查点、预算与样本记录"""
        params = {
            "evaluation_budget": 30,
            "evolvability_samples": 5,
            "estimate_sample_cap": 3,
        }
        audit = tmp_path / "genomes.jsonl"
        record, population = run_neat_niched(
            default_maze(),
            params,
            seed=2,
            robot=short_practical,
            checkpoint_every=10,
            audit_path=audit,
        )
        assert record.checkpoints == [1, 10, 20, 30]
        assert record.model == "neat-behavior-niche"
        assert record.metadata["evaluations"] == 30
        assert record.metadata["final_pop_size"] == len(population)
        assert record.final().pop_size == len(population)
        assert record.rows[0].pop_size == 1
        assert sum(record.metadata["estimate_evaluations_per_checkpoint"]) == (
            record.metadata["estimate_evaluations"]
        )
        assert len(record.metadata["final_sample"]["cells"]) == min(3, len(population))

        occupancy = np.bincount([ind.niche for ind in population], minlength=N_CELLS)
        assert occupancy.max() <= 5
        assert all(ind.niche == ind.cell for ind in population)

        lines = [orjson.loads(line) for line in audit.read_bytes().splitlines()]
        assert {line["checkpoint"] for line in lines} == {1, 10, 20, 30}
        assert all(1 <= line["evolvability"] <= 5 for line in lines)
        NeatGenome.from_dict(lines[-1]["genome"]).validate()

    @pytest.mark.integration
    def test_random_niche_control(self, short_practical):
        """测试随机对照模式下生态位与行为无关"""
        params = NeatParams(
            evaluation_budget=40,
            evolvability_samples=3,
            estimate_sample_cap=2,
            control_mode=ControlMode.RANDOM_NICHE,
        )
        record, population = run_neat_niched(
            default_maze(), params, seed=3, robot=short_practical, checkpoint_every=20
        )
        assert record.model == "neat-random-niche"
        assert record.checkpoints == [1, 20, 40]
        assert any(ind.niche != ind.cell for ind in population)

    @pytest.mark.unit
    def test_reproducible(self, short_practical):
        """测试相同种子结果一致"""
        params = {"evaluation_budget": 15, "evolvability_samples": 3, "estimate_sample_cap": 2}
        runs = [
            run_neat_niched(default_maze(), params, seed=4, robot=short_practical)[0]
            for _ in range(2)
        ]
        assert runs[0].to_frame().equals(runs[1].to_frame())

    @pytest.mark.unit
    def test_evaluation_batch(self, short_practical):
        """测试批量评估不改变评估总数与检查点"""
        params = {
            "evaluation_budget": 25,
            "evolvability_samples": 3,
            "estimate_sample_cap": 2,
            "evaluation_batch": 4,
        }
        record, _ = run_neat_niched(
            default_maze(), params, seed=5, robot=short_practical, checkpoint_every=10
        )
        assert record.checkpoints == [1, 10, 20, 25]
        assert record.metadata["evaluations"] == 25


class TestNicheAssignment:
    """测试生态位分配"""

    @pytest.mark.unit
    def test_behavior_niche_is_cell(self):
        """测试按行为划分时生态位就是行为格子且不消耗随机数"""
        rng = seed_stream(21)
        reference = seed_stream(21)
        cells = [0, 17, 399]
        assert [assign_niche(c, ControlMode.BEHAVIOR_NICHE, rng) for c in cells] == cells
        assert rng.integers(0, 2**32) == reference.integers(0, 2**32)

    @pytest.mark.unit
    def test_random_niche_uniform(self):
        """测试随机对照的生态位在全部格子上均匀分布（卡方检验）"""
        rng = seed_stream(22)
        draws = 100 * N_CELLS
        niches = [assign_niche(0, ControlMode.RANDOM_NICHE, rng) for _ in range(draws)]
        counts = np.bincount(niches, minlength=N_CELLS)
        assert counts.size == N_CELLS
        assert np.all(counts > 0)
        assert stats.chisquare(counts).pvalue > 1e-3

    @pytest.mark.unit
    def test_random_niche_independent_of_cell(self):
        """测试随机对照的生态位与行为格子无关"""
        fixed_rng, varied_rng = seed_stream(23), seed_stream(23)
        cells = seed_stream(24).integers(0, N_CELLS, size=2000)
        fixed = [assign_niche(5, ControlMode.RANDOM_NICHE, fixed_rng) for _ in cells]
        varied = [assign_niche(int(c), ControlMode.RANDOM_NICHE, varied_rng) for c in cells]
        assert fixed == varied

        # 列联表：格子所在的行与生态位所在的行
        table = np.zeros((20, 20), dtype=np.int64)
        np.add.at(table, (cells // 20, np.asarray(varied) // 20), 1)
        table += 1
        assert stats.chi2_contingency(table).pvalue > 1e-3
