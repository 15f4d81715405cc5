import numpy as np
import pytest

from feasrepair.core import RunResult, UsageError
from feasrepair.harness import (TABLE_COLUMNS, ExperimentSpec, ExperimentStatistics,
                                alpha_sweep, build_config, emit_fe_ratio, emit_table,
                                emit_trace, fe_ratio, log_log_slope, lower_median,
                                parse_table, run_experiment, run_single, scale_up_study,
                                summarize)


def _res(success, fe, fit=0.0):
    return RunResult(success, fe, fit, np.zeros(2))


def _stats(strategy, problem, fes, runs=None):
    runs = runs or len(fes)
    results = [_res(True, fe) for fe in fes] + [_res(False, 1000, 1.0)] * (runs - len(fes))
    return summarize(results, strategy, "", problem, "boundary")


def test_order_statistics():
    s = summarize([_res(True, 100), _res(True, 300), _res(True, 200)])
    assert (s.success_count, s.fe_best, s.fe_median, s.fe_worst) == (3, 100, 200, 300)


def test_lower_median_even():
    assert lower_median([4, 1, 3, 2]) == 2
    with pytest.raises(UsageError):
        lower_median([])


def test_dnc_contract():
    s = summarize([_res(False, 50, 3.0), _res(False, 50, 1.0), _res(False, 50, 2.0)])
    assert s.dnc and s.success_count == 0
    assert s.fe_best is None and s.fe_median is None and s.fe_worst is None
    assert (s.fit_best, s.fit_median, s.fit_worst) == (1.0, 2.0, 3.0)
    assert s.fe_mean is None


def test_fe_ratio_single_strategy():
    rep = fe_ratio([_stats("a", "p1", [100]), _stats("a", "p2", [5000])])
    assert rep.fe_ratio == {"a": 1.0} and rep.rho == {"a": 2}


def test_fe_ratio_identical_strategies():
    rep = fe_ratio([_stats("a", "p", [100, 200]), _stats("b", "p", [100, 200])])
    assert rep.fe_ratio == {"a": 1.0, "b": 1.0}


def test_fe_ratio_two_strategies():
    rep = fe_ratio([_stats("a", "p", [100]), _stats("b", "p", [300])])
    assert rep.fe_ratio["a"] == pytest.approx(0.5)
    assert rep.fe_ratio["b"] == pytest.approx(1.5)


def test_fe_ratio_unreliable_strategy_excluded():
    rep = fe_ratio([_stats("a", "p", [100] * 46, runs=50), _stats("b", "p", [50] * 45, runs=50)])
    assert rep.rho == {"a": 1, "b": 0}
    assert rep.fe_ratio == {"a": 1.0} and rep.excluded == ["b"] and rep.notes
    text = emit_fe_ratio(rep)
    assert text.splitlines() == ["strategy,rho,fe_ratio", "a,1,1.0", "b,0,"]


def test_fe_ratio_empty():
    with pytest.raises(UsageError):
        fe_ratio([])


def test_header_only_csv():
    assert emit_table([]) == ",".join(TABLE_COLUMNS) + "\n"
    assert parse_table(emit_table([])) == []


def test_dnc_row_format():
    s = summarize([_res(False, 10, 2.5)], "de:random", "", "elp@20", "center")
    line = emit_table([s]).splitlines()[1].split(",")
    row = dict(zip(TABLE_COLUMNS, line))
    assert row["dnc_flag"] == "1"
    assert row["fe_best"] == row["fe_median"] == row["fe_worst"] == ""
    md = emit_table([s], "markdown")
    assert "*2.5*" in md


def test_csv_round_trip():
    stats = [_stats("de:ip-s", "elp@20", [1234, 999, 2000], runs=4),
             summarize([_res(False, 9, 0.1 + 0.2)], "pso:random", "unchanged", "elp@20",
                       "boundary")]
    back = parse_table(emit_table(stats), runs=4)
    assert back[0] == stats[0]
    assert back[1].fit_best == stats[1].fit_best and back[1].dnc


def test_parse_table_rejects_bad_header():
    with pytest.raises(UsageError):
        parse_table("a,b\n1,2\n")


def test_unknown_format():
    with pytest.raises(UsageError):
        emit_table([], "xlsx")


def test_spec_validation():
    with pytest.raises(UsageError):
        ExperimentSpec("elp", runs=0)
    with pytest.raises(UsageError):
        ExperimentSpec("elp", budget=0)
    with pytest.raises(UsageError):
        ExperimentSpec("elp", optimizer="cmaes")
    with pytest.raises(UsageError):
        build_config(ExperimentSpec("elp", overrides={"temperature": 1}))
    with pytest.raises(UsageError):
        build_config(ExperimentSpec("elp", optimizer="de", velocity="zero"))
    with pytest.raises(UsageError):
        run_experiment(ExperimentSpec("nowhere"))


def test_labels_and_defaults():
    spec = ExperimentSpec("elp:center", optimizer="pso", repair="ip-s", alpha=0.1)
    assert spec.strategy_label() == "pso:ip-s@0.1"
    assert spec.velocity_label() == "recomputed"
    assert spec.problem_labels() == ("elp@20", "center")
    tp = ExperimentSpec("tp5")
    prob = tp.resolve_problem()
    assert tp.effective_budget(prob) == 200_000 and tp.effective_threshold(prob) == 1e-3
    box = ExperimentSpec("elp")
    prob = box.resolve_problem()
    assert box.effective_budget(prob) == 1_000_000 and box.effective_threshold(prob) == 1e-10
    assert ExperimentSpec("sphere-elp-0").problem_labels() == ("sphere-elp-0", "")


def test_run_experiment_small():
    spec = ExperimentSpec("elp:boundary", repair="setonboundary", runs=3, n=5, budget=50_000)
    st = run_experiment(spec)
    assert st.success_count == 3
    assert st.fe_best <= st.fe_median <= st.fe_worst <= 50_000
    assert st.fit_best <= st.fit_median <= st.fit_worst
    assert st == run_experiment(spec)


def test_all_dnc_experiment():
    st = run_experiment(ExperimentSpec("elp:center", runs=2, n=5, budget=100))
    assert st.dnc and st.fit_best > 0


def test_run_seed_stream():
    spec = ExperimentSpec("sch:center", runs=1, n=5, budget=2000, threshold=0.0, base_seed=3)
    a = run_single(spec, 2)
    b = run_single(ExperimentSpec("sch:center", runs=1, n=5, budget=2000, threshold=0.0,
                                  base_seed=5), 0)
    assert a.best_fitness == b.best_fitness


def test_trace_csv():
    spec = ExperimentSpec("tp5", runs=1, budget=2000, record_trace=True)
    res = run_single(spec, 0)
    lines = emit_trace(res).splitlines()
    assert lines[0] == "evaluations,best_fitness"
    vals = [float(l.split(",")[1]) for l in lines[1:]]
    fes = [int(l.split(",")[0]) for l in lines[1:]]
    assert vals == sorted(vals, reverse=True) and fes == sorted(fes)
    with pytest.raises(UsageError):
        emit_trace(run_single(ExperimentSpec("tp5", runs=1, budget=100), 0))


def test_alpha_sweep_single_equals_experiment():
    spec = ExperimentSpec("elp", optimizer="de", repair="ip-c", runs=2, n=5, budget=3000)
    (only,) = alpha_sweep(spec, [1.2])
    assert only == run_experiment(spec)
    with pytest.raises(UsageError):
        alpha_sweep(ExperimentSpec("elp", repair="random"), [1.0])


def test_scale_up_small():
    rep = scale_up_study(["elp"], sizes=(3, 6), runs=2, budget=200_000)
    assert [r[:4] for r in rep.rows] == [("elp", 3, 2, 2), ("elp", 6, 2, 2)]
    assert rep.dnc == [] and rep.slopes["elp"] is not None


def test_log_log_slope():
    ns = [20, 50, 100]
    assert log_log_slope(ns, [n ** 1.5 for n in ns]) == pytest.approx(1.5)
    with pytest.raises(UsageError):
        log_log_slope([20], [10])
