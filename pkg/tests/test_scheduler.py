import threading

import numpy as np
import pytest

from moasha.bench import AnalyticBenchmark, generate_tabular
from moasha.core import Dimension, SearchSpace, sample_configuration
from moasha.executors import SimulatedExecutor, WallClockExecutor
from moasha.pareto import selector_eps_net, selector_nsga_ii
from moasha.scheduler import (
    MOASHA,
    ProtocolError,
    RandomSearch,
    RungTable,
    SynchronousSH,
    budget_ladder,
    max_rung_index,
    run_mo_asha,
    run_random_search,
)

SPACE = SearchSpace((Dimension("x", "real", (0.0, 1.0)), Dimension("z", "real", (0.0, 1.0))))


class UniformCost:
    """Two objectives from the parameters; every evaluation takes exactly ``budget`` seconds."""

    max_budget = 81

    def search_space(self):
        return SPACE

    def evaluate(self, config, budget):
        x, z = config.params["x"], config.params["z"]
        return (x + z / budget, 1 - x + z / budget), float(budget)


class Flaky(UniformCost):
    def evaluate(self, config, budget):
        if config.id % 5 == 3:
            raise RuntimeError("worker crashed")
        return super().evaluate(config, budget)


def test_ladder():
    assert max_rung_index(3, 1, 81) == 4
    assert max_rung_index(3, 1, 80) == 3
    assert budget_ladder(3, 1, 81) == [1, 3, 9, 27, 81]
    # the top rung always runs at R even when R is not a power of eta
    assert budget_ladder(3, 1, 200) == [1, 3, 9, 27, 200]
    assert budget_ladder(3, 1, 81, s=1) == [3, 9, 27, 81]


@pytest.mark.parametrize("args", [(1, 1, 81, 0), (3, 0, 81, 0), (3, 100, 81, 0), (3, 1, 81, -1), (3, 1, 81, 5)])
def test_ladder_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        budget_ladder(*args)


def test_first_job_is_fresh_at_rung_zero():
    s = MOASHA(SPACE, selector_nsga_ii, eta=3, r0=1, R=81)
    job = s.get_job()
    assert (job.config.id, job.rung, job.budget) == (0, 0, 1)


def test_third_completion_triggers_promotion():
    s = MOASHA(SPACE, selector_nsga_ii, eta=3, r0=1, R=81)
    jobs = [s.get_job() for _ in range(3)]
    for job, y in zip(jobs, [(0.5, 0.5), (0.1, 0.2), (0.6, 0.9)]):
        s.report_result(job.config.id, 0, y)
    promo = s.get_job()
    assert (promo.config.id, promo.rung, promo.budget) == (1, 1, 3)
    # floor(3/3) = 1 slot is now used: back to fresh configurations
    nxt = s.get_job()
    assert (nxt.config.id, nxt.rung) == (3, 0)


def test_promotion_waits_for_quota():
    s = MOASHA(SPACE, selector_nsga_ii, eta=3, r0=1, R=81)
    for _ in range(2):
        job = s.get_job()
        s.report_result(job.config.id, 0, (0.1, 0.1))
    assert s.get_job().rung == 0


def test_report_protocol_errors():
    s = MOASHA(SPACE, selector_nsga_ii)
    job = s.get_job()
    s.report_result(job.config.id, 0, (0.1, 0.2))
    before = s.table.populations()
    with pytest.raises(ProtocolError):
        s.report_result(job.config.id, 0, (0.3, 0.4))
    assert s.table.populations() == before
    assert len(s.log) == 1
    with pytest.raises(ProtocolError):
        s.report_result(99, 0, (0.1, 0.2))
    with pytest.raises(ProtocolError):
        s.report_result(job.config.id, 1, (0.1, 0.2))


def test_invalid_result_leaves_job_pending():
    s = MOASHA(SPACE, selector_nsga_ii)
    job = s.get_job()
    with pytest.raises(ValueError):
        s.report_result(job.config.id, 0, (float("inf"), 0.2))
    s.report_result(job.config.id, 0, (0.1, 0.2))
    assert s.table.populations()[0] == 1


def test_asynchronous_counts_to_quiescence():
    s = MOASHA(SPACE, selector_eps_net, eta=3, r0=1, R=81, max_configs=81)
    stats = SimulatedExecutor(workers=1).run(s, UniformCost())
    assert s.table.populations() == [81, 27, 9, 3, 1]
    assert stats.evaluations == 121
    s.table.check_invariants()


def test_synchronous_counts():
    s = SynchronousSH(SPACE, selector_nsga_ii, eta=3, r0=1, R=27, max_configs=27)
    SimulatedExecutor(workers=4).run(s, UniformCost())
    assert s.table.populations() == [27, 9, 3, 1]


def test_synchronous_workers_wait_for_rung():
    s = SynchronousSH(SPACE, selector_nsga_ii, eta=3, r0=1, R=9, bracket_size=3)
    jobs = [s.get_job() for _ in range(3)]
    assert s.get_job() is None
    for job in jobs[:2]:
        s.report_result(job.config.id, 0, (0.5, 0.5))
    assert s.get_job() is None
    s.report_result(jobs[2].config.id, 0, (0.1, 0.1))
    promo = s.get_job()
    assert (promo.config.id, promo.rung) == (jobs[2].config.id, 1)


def test_random_search_budgets_and_stream():
    s = RandomSearch(SPACE, R=81, seed=4, max_configs=20)
    SimulatedExecutor(workers=3).run(s, UniformCost())
    assert len(s.log) == 20
    assert {r.budget for r in s.log} == {81.0}
    rng = np.random.default_rng(4)
    for cid in range(20):
        assert s.configs[cid].params == sample_configuration(SPACE, rng, cid, 4).params


def test_asha_outpaces_random_search():
    bench, T = UniformCost(), 2000.0
    rs = run_random_search(bench, SimulatedExecutor(4, T))
    asha = run_mo_asha(bench, SimulatedExecutor(4, T), selector_nsga_ii)
    # RS finishes about T / cost(R) evaluations per worker
    assert len(rs) == 4 * int(T // 81)
    assert len(asha) > len(rs)


def test_simulated_runs_are_deterministic():
    bench = AnalyticBenchmark("concave", dim=3, sigma=0.1)
    logs = [run_mo_asha(bench, SimulatedExecutor(1, 500), selector_eps_net, seed=2).dumps() for _ in range(2)]
    assert logs[0] == logs[1]


def test_tiny_budget_gives_empty_log():
    s = MOASHA(SPACE, selector_nsga_ii)
    stats = SimulatedExecutor(2, 0.5).run(s, UniformCost())
    assert len(s.log) == 0 and stats.evaluations == 0


def test_in_flight_never_exceeds_workers():
    bench = generate_tabular(500, seed=1, max_budget=27)
    stats = SimulatedExecutor(4, 3000).run(MOASHA(bench.search_space(), selector_eps_net, R=27), bench)
    assert stats.max_in_flight <= 4
    events = sorted([(t0, 1) for _, t0, _ in stats.trace] + [(t1, -1) for _, _, t1 in stats.trace])
    running = np.cumsum([d for _, d in events])
    assert running.max() <= 4
    # a worker runs one evaluation at a time
    for w in range(4):
        spans = sorted((t0, t1) for k, t0, t1 in stats.trace if k == w)
        assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))


def test_failures_are_dropped():
    s = MOASHA(SPACE, selector_nsga_ii, max_configs=30)
    stats = SimulatedExecutor(2).run(s, Flaky())
    assert stats.failures == 6
    assert s.failed == {3, 8, 13, 18, 23, 28}
    assert not any(r.config_id in s.failed for r in s.log)
    assert s.pending == 0
    s.table.check_invariants()


def test_failure_of_unknown_job_is_protocol_error():
    with pytest.raises(ProtocolError):
        MOASHA(SPACE, selector_nsga_ii).report_failure(0, 0)


def test_concurrent_threads_keep_invariants():
    s = MOASHA(SPACE, selector_nsga_ii, R=27)

    def work(k):
        rng = np.random.default_rng(k)
        for _ in range(300):
            job = s.get_job()
            s.report_result(job.config.id, job.rung, tuple(rng.uniform(0, 1, 2)))

    threads = [threading.Thread(target=work, args=(k,)) for k in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(s.log) == 2400
    s.table.check_invariants()


def test_wall_clock_executor_runs():
    s = MOASHA(SPACE, selector_nsga_ii, R=9)
    stats = WallClockExecutor(workers=3, time_budget=0.5, time_scale=1e-3).run(s, UniformCost())
    assert stats.evaluations == len(s.log) > 0
    assert all(r.t_end <= 0.5 for r in s.log)
    s.table.check_invariants()


def test_rung_table_invariant_check_catches_overpromotion():
    table = RungTable(3, 1, 9)
    table.rungs[0].completed = {0: (0, 0), 1: (1, 1)}
    table.rungs[0].promoted = {0}
    with pytest.raises(AssertionError):
        table.check_invariants()
