import json

import numpy as np
import pytest

from purekit import _util


def test_streams_are_reproducible_and_distinct():
    a = _util.stream(5, "round", 1, 2).random(4)
    assert np.array_equal(a, _util.stream(5, "round", 1, 2).random(4))
    assert not np.array_equal(a, _util.stream(5, "round", 1, 3).random(4))
    assert not np.array_equal(a, _util.stream(5, "suite", 1, 2).random(4))
    assert not np.array_equal(a, _util.stream(6, "round", 1, 2).random(4))


def test_seed_range():
    assert _util.check_seed(2 ** 64 - 1) == 2 ** 64 - 1
    with pytest.raises(ValueError):
        _util.check_seed(-1)
    with pytest.raises(ValueError):
        _util.check_seed(2 ** 64)


def test_dumps_is_canonical(tmp_path):
    obj = {"b": np.float64(0.1), "a": (np.int64(1), np.arange(2))}
    text = _util.dumps(obj)
    assert text == _util.dumps(json.loads(text))
    assert json.loads(text) == {"a": [1, [0, 1]], "b": 0.1}
    path = tmp_path / "x.json"
    _util.write_json_atomic(str(path), obj)
    assert path.read_text() == text


def test_parallel_map_preserves_order(monkeypatch):
    monkeypatch.setenv("PUREKIT_THREADS", "3")
    assert _util.parallel_map(lambda v: v * v, range(10)) == [v * v for v in range(10)]
