from __future__ import annotations

import csv
import io
import json

import pytest

from expsearch.core import Config
from expsearch.harness import (Runner, WorkloadError, bench, format_op, fuzz, generate_ops,
                               main, parse_line, parse_workload, run_ops, sweep)


def test_simple_workload_answers_predecessor():
    ops = parse_workload("I 5\nS 7\n")
    st = run_ops(ops, check=True)
    assert st.mismatches == 0 and st.ok
    r = Runner(Config())
    for i, op in enumerate(ops):
        r.execute(i, op)
    assert r.set.search(7).key == 5


def test_malformed_line_names_line_number():
    with pytest.raises(WorkloadError) as ei:
        parse_workload("X 5\nI 3\n")
    assert ei.value.line == 1 and "line 1" in str(ei.value)
    with pytest.raises(WorkloadError) as ei:
        parse_workload("# c\nI 3\nI\n")
    assert ei.value.line == 3


def test_parse_round_trip():
    text = "I 0x10\nD 3\nS 7\nL 9\nMIN\nMAX\nTAG a 5\nFS a 8\nFI a 6\nSI 1:ff:0\nSD 2\nSS 3:4\n"
    ops = parse_workload(text)
    again = parse_workload("\n".join(format_op(o) for o in ops))
    assert [(o.opcode, o.arg, o.tag) for o in ops] == [(o.opcode, o.arg, o.tag) for o in again]
    assert parse_line("  # only a comment") is None
    assert ops[0].arg == 16


def test_generated_ops_round_trip():
    ops = list(generate_ops(4, 2000, finger_bias=0.5, string_bias=0.2))
    again = parse_workload("\n".join(format_op(o) for o in ops))
    assert [(o.opcode, o.arg, o.tag) for o in ops] == [(o.opcode, o.arg, o.tag) for o in again]


def test_fuzz_is_deterministic():
    a = fuzz(11, 3000, 500, finger_bias=0.3, string_bias=0.1).as_dict(timing=False)
    b = fuzz(11, 3000, 500, finger_bias=0.3, string_bias=0.1).as_dict(timing=False)
    assert a == b and a["ok"]


def test_finger_bias_reaches_all_paths():
    st = fuzz(2, 20000, 2000, finger_bias=0.9)
    assert st.ok
    for key in ("ladder_builds", "ladder_queries", "finger_ascents", "horizontal_moves",
                "finger_inserts", "locality_checks"):
        assert st.coverage.get(key, 0) > 0, key
    assert st.locality_violations == 0


def test_sweep_serial_and_parallel_agree():
    a = [s.as_dict(timing=False) for s in sweep(range(3), 1500, 500, workers=1)]
    b = [s.as_dict(timing=False) for s in sweep(range(3), 1500, 500, workers=2)]
    assert a == b and all(d["ok"] for d in a)


def test_bench_rows():
    rows = bench([1000, 2000, 4000], ["sorted", "fusion"], repeat=1, queries=100)
    assert len(rows) == 6
    assert sum(r["variant"] == "sorted" for r in rows) == 3


def _cli(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def test_cli_run(tmp_path):
    p = tmp_path / "w.txt"
    p.write_text("I 5\nS 7\nSI a:b\nSS a:c\n")
    code, text = _cli(["run", str(p), "--check"])
    d = json.loads(text)
    assert code == 0 and d["mismatches"] == 0 and d["ok"]


def test_cli_run_parse_error(tmp_path, capsys):
    p = tmp_path / "w.txt"
    p.write_text("BOGUS 5\n")
    code, _ = _cli(["run", str(p)])
    assert code == 2
    assert "line 1" in capsys.readouterr().err


def test_cli_fuzz_replay_bytes(monkeypatch, tmp_path):
    monkeypatch.setenv("XSET_SEED", "6")
    dump = tmp_path / "ops.txt"
    code, a = _cli(["fuzz", "--ops", "2000", "--check-every", "500", "--dump", str(dump)])
    code2, b = _cli(["fuzz", "--seed", "6", "--ops", "2000", "--check-every", "500"])
    assert code == code2 == 0
    da, db = json.loads(a), json.loads(b)
    da.pop("wall_time"), db.pop("wall_time")
    assert da == db and da["seed"] == 6
    code, c = _cli(["run", str(dump), "--check"])
    assert code == 0 and json.loads(c)["mismatches"] == 0


def test_cli_bench_audit_game_counters():
    code, text = _cli(["bench", "--sizes", "500,1000", "--sstruct", "sorted,veb", "--repeat", "1"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0 and len(rows) == 4
    code, text = _cli(["audit", "--n", "3000", "--finger-mode"])
    assert code == 0 and json.loads(text)["report"]["ok"]
    code, text = _cli(["game", "--b", "2", "--rounds", "3000", "--strategy", "adversarial"])
    assert code == 0 and json.loads(text)["ok"]
    code, text = _cli(["counters", "--p", "16", "--q", "3", "--rounds", "2000"])
    assert code == 0 and json.loads(text)["ok"]
    code, _ = _cli(["game", "--strategy", "nope", "--rounds", "10"])
    assert code == 2
