import numpy as np
import pytest

from bottleflow.core import BottleneckParams, periodic_gain
from bottleflow.exceptions import DomainError
from bottleflow.optimize import ScheduleTemplate, search_schedule
from bottleflow.signals import check_admissible, fast_switching_family


@pytest.fixture
def unit():
    return BottleneckParams(1.0, 1.0, 0.5)


def test_template_balanced():
    tpl = ScheduleTemplate.from_weights(3.0, [0.1, -2.0, 1.0], [0.0, 0.5, -0.3])
    assert sum(tpl.plus) == pytest.approx(1.5, rel=1e-15)
    assert sum(tpl.minus) == pytest.approx(1.5, rel=1e-15)
    assert tpl.n_pairs == 3
    assert tpl.to_signal().period == pytest.approx(3.0, rel=1e-15)


def test_budget_one(unit):
    res = search_schedule(unit, 2.0, 4, budget=1)
    assert len(res.trace) == 1 and res.evaluations == 1
    assert res.best_gain == pytest.approx(periodic_gain(fast_switching_family(unit, 2.0, 4), unit), rel=1e-14)


def test_trace_monotone_and_below_one(unit):
    res = search_schedule(unit, 5.0, 3, budget=300, seed=4)
    assert np.all(np.diff(res.trace) >= 0)
    assert np.all(res.trace < 1)
    assert res.trace[-1] == res.best_gain
    assert res.restarts >= 1


def test_candidates_admissible(unit, monkeypatch):
    import bottleflow.optimize as opt

    seen = []
    real = opt.periodic_gain

    def spy(signal, params, **kw):
        seen.append(signal)
        return real(signal, params, **kw)

    monkeypatch.setattr(opt, "periodic_gain", spy)
    search_schedule(unit, 4.0, 3, budget=150, seed=1)
    assert len(seen) == 150
    for sig in seen:
        assert check_admissible(sig, unit).member
        assert periodic_gain(sig, unit) < 1


def test_deterministic(unit):
    a = search_schedule(unit, 3.0, 2, budget=80, seed=9)
    b = search_schedule(unit, 3.0, 2, budget=80, seed=9)
    np.testing.assert_array_equal(a.trace, b.trace)
    assert a.best_signal == b.best_signal


def test_gain_grows_with_pairs(unit):
    best = [search_schedule(unit, 2.0, k, budget=200, seed=0).best_gain for k in (1, 2, 4, 8)]
    assert all(b < 1 for b in best)
    assert best == sorted(best) and len(set(best)) == 4


def test_invalid(unit):
    with pytest.raises(DomainError):
        search_schedule(unit, 2.0, 2, budget=0)
    with pytest.raises(DomainError):
        search_schedule(unit, 2.0, 0, budget=5)
