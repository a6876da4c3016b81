import pytest

from logcave.experiments import EXPERIMENTS, marshall, run_experiment, uniform_rate, worker_count


def test_experiment_names():
    assert set(EXPERIMENTS) == {"mallows", "marshall", "uniform-rate", "stochastic-order",
                                "pareto", "mixture-affine"}
    with pytest.raises(KeyError):
        run_experiment("nope")


def test_results_independent_of_worker_count():
    a = uniform_rate(seed=3, workers=1, reps=6, ns=(50,))
    b = uniform_rate(seed=3, workers=2, reps=6, ns=(50,))
    assert a.details == b.details
    m = marshall(seed=1, workers=2, reps=3, ns=(30,))
    assert m.passed and m.details["replicates"] == 6


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("LOGCAVE_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("LOGCAVE_THREADS", "zero")
    assert worker_count() == 1
    monkeypatch.delenv("LOGCAVE_THREADS")
    assert worker_count() == 1


def test_stochastic_order_line():
    res = run_experiment("stochastic-order", workers=1)
    assert res.passed
    assert res.line().startswith("[PASS] stochastic-order")
    assert res.to_dict()["pass"] is True
