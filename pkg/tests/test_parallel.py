import pytest

from drlab.models import get_model
from drlab.drtype import build_hierarchy
from drlab.parallel import parallel_map, thread_count


def test_thread_count(monkeypatch):
    monkeypatch.delenv("DRLAB_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("DRLAB_THREADS", "4")
    assert thread_count() == 4
    for bad in ("0", "many"):
        monkeypatch.setenv("DRLAB_THREADS", bad)
        with pytest.raises(ValueError):
            thread_count()


def test_results_do_not_depend_on_threads(monkeypatch):
    m = get_model("3spin")
    monkeypatch.setenv("DRLAB_THREADS", "1")
    serial = build_hierarchy(m.seed, m.eta, 2, m.policy).densities
    monkeypatch.setenv("DRLAB_THREADS", "4")
    assert parallel_map(lambda x: x * x, range(10)) == [x * x for x in range(10)]
    assert build_hierarchy(m.seed, m.eta, 2, m.policy).densities == serial
