import json
import os
import signal
import socket
import subprocess
import time
import urllib.request
from pathlib import Path

import pytest

import gradehint

FIXTURES = Path(os.environ.get("GRADEHINT_FIXTURES", Path(__file__).resolve().parents[2] / "fixtures"))
BUNDLE = FIXTURES / "bundle"
VARIANTS = BUNDLE / "a02-calculator" / "variants"


def test_bundle_listing():
    tasks = gradehint.load_bundle(BUNDLE)
    assert [t["id"] for t in tasks][:2] == ["a01-user", "a02-calculator"]
    assert len(tasks) == 6
    assert all(t["tests"] for t in tasks)


def test_grade_each_variant():
    outcomes = {}
    for name in ("correct", "failing", "runtime_error", "compile_error"):
        r = gradehint.grade(BUNDLE, "a02-calculator", (VARIANTS / f"{name}.cs").read_text())
        outcomes[name] = r["outcome"]
        if name == "correct":
            assert r["score"] == 100.0
            assert r["fault"] is None
        if name == "runtime_error":
            assert r["fault"]["type"].startswith("System.")
    assert outcomes == {
        "correct": "AllPassed",
        "failing": "TestFailure",
        "runtime_error": "RuntimeError",
        "compile_error": "CompileError",
    }


def test_prompt_matches_golden():
    code = (FIXTURES / "bad_missing_semicolon.cs").read_text()
    tasks = gradehint.load_bundle(BUNDLE)
    assert tasks[0]["id"] == "a01-user"
    p = gradehint.prompt_for(BUNDLE, "a01-user", code)
    assert p["scenario"] == "compile_error"
    assert p["token_estimate"] == gradehint.estimate_tokens(p["text"])
    assert gradehint.prompt_for(BUNDLE, "a02-calculator", (VARIANTS / "correct.cs").read_text()) is None


def test_request_parameters_golden():
    golden = (FIXTURES / "golden" / "request_params.txt").read_text()
    assert gradehint.request_parameters().strip() == golden.strip()


def test_token_estimate():
    assert gradehint.estimate_tokens("") == 8
    assert gradehint.estimate_tokens("abcd") == 9
    assert gradehint.estimate_tokens("abcde") == 10


def test_gate():
    assert gradehint.hint_gate("experimental", True, "CompileError")
    assert not gradehint.hint_gate("control", True, "CompileError")
    assert not gradehint.hint_gate("experimental", False, "TestFailure")
    assert not gradehint.hint_gate("experimental", True, "AllPassed")


def test_statistics():
    r = gradehint.mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert r["method"] == "exact"
    assert r["W"] == 0
    assert r["p"] == pytest.approx(0.1)
    rows = gradehint.benjamini_hochberg([("a", 0.01), ("b", 0.04), ("c", 0.03)], 0.05)
    assert [row["label"] for row in rows] == ["a", "c", "b"]
    assert all(row["rejected"] for row in rows)


def test_errors_carry_codes():
    with pytest.raises(gradehint.GradehintError) as e:
        gradehint.mann_whitney_u([], [1.0])
    assert e.value.code == "EmptySample"
    with pytest.raises(gradehint.GradehintError) as e:
        gradehint.grade(BUNDLE, "nope", "class A {}")
    assert e.value.code == "NotFound"
    with pytest.raises(gradehint.GradehintError):
        gradehint.hint_gate("placebo", True, "CompileError")


def test_simulate_then_analyze(tmp_path):
    log = tmp_path / "events.jsonl"
    summary = gradehint.simulate(BUNDLE, log, students=6, seed=3)
    assert summary["participants"] == 6
    assert summary["submissions"] > 0
    files = gradehint.analyze(log)
    assert set(files) == {"report.json", "curves.csv", "table1.csv", "fig1.csv"}
    assert files == gradehint.analyze(log)
    json.loads(files["report.json"])


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.mark.skipif("GRADEHINT_CLI" not in os.environ, reason="command-line tool not built")
def test_serve_end_to_end(tmp_path):
    auth = tmp_path / "auth.json"
    auth.write_text(json.dumps({
        "tokens": {"t1": {"participant": "p001"}, "adm": {"admin": True}},
        "participants": [{"id": "p001", "pretest": 2}],
    }))
    port = _free_port()
    proc = subprocess.Popen(
        [os.environ["GRADEHINT_CLI"], "serve", "--bundle", str(BUNDLE), "--auth", str(auth), "--port", str(port),
         "--log", str(tmp_path / "events.jsonl"), "--llm", "mock"],
        stderr=subprocess.PIPE)
    base = f"http://127.0.0.1:{port}/v1"

    def call(method, path, token="t1", body=None):
        req = urllib.request.Request(base + path, method=method,
                                     data=None if body is None else json.dumps(body).encode(),
                                     headers={"Authorization": f"Bearer {token}",
                                              "Content-Type": "application/json"})
        with urllib.request.urlopen(req, timeout=5) as resp:
            return resp.status, resp.read()

    try:
        for _ in range(100):
            try:
                status, body = call("GET", "/assignments")
                break
            except OSError:
                time.sleep(0.05)
        else:
            pytest.fail("server did not come up")
        assert status == 200
        assert len(json.loads(body)["assignments"]) == 6
        status, body = call("POST", "/submissions", body={
            "assignment_id": "a02-calculator", "code": (VARIANTS / "correct.cs").read_text()})
        assert status in (200, 201)
        assert json.loads(body)["outcome"] == "AllPassed"
        status, body = call("GET", "/admin/report?file=table1.csv", token="adm")
        assert status == 200
    finally:
        proc.send_signal(signal.SIGTERM)
        proc.wait(timeout=10)
    assert proc.returncode == 0
