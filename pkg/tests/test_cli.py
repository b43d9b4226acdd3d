import json
import shutil
from pathlib import Path

import pytest

from navsec import certs
from navsec.cli import (EXIT_INVALID, EXIT_IO, EXIT_MISMATCH, EXIT_NO_TRUST, EXIT_OK, main,
                        run_suite)

SCENARIOS = Path(__file__).parent.parent / "src" / "navsec" / "scenarios"


def scenario(name):
    return str(SCENARIOS / f"{name}.json")


def test_run_prints_trace(capsys):
    assert main(["run", scenario("honest_p4")]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert json.loads(lines[0])["kind"] == "header"
    assert json.loads(lines[-1])["kind"] == "summary"


def test_run_with_out_writes_trace_and_reports(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    assert main(["run", scenario("single_meacon_5nav"), "--out", str(out)]) == EXIT_OK
    report = capsys.readouterr().out
    assert "MEACONING_DETECTED" in report and "n3" in report
    assert out.read_text().count("\n") > 2


def test_run_failed_expectation_is_exit_1(tmp_path):
    raw = json.loads(Path(scenario("honest_p4")).read_text())
    raw["expect"] = [{"kind": "range", "count": {"min": 999}}]
    p = tmp_path / "s.json"
    p.write_text(json.dumps(raw))
    assert main(["run", str(p), "--out", str(tmp_path / "t")]) == EXIT_MISMATCH


def test_run_invalid_is_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"name": "x", "nodes": [{"id": "a", "role": "pilot"}]}))
    assert main(["run", str(p)]) == EXIT_INVALID
    assert "role must be" in capsys.readouterr().err


def test_run_missing_file_is_exit_3(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == EXIT_IO


@pytest.mark.parametrize("level, kinds", [("verdicts", False), ("events", True)])
def test_log_level_env(monkeypatch, capsys, level, kinds):
    monkeypatch.setenv("NAVSEC_LOG", level)
    main(["run", scenario("honest_p4")])
    got = {json.loads(l)["kind"] for l in capsys.readouterr().out.splitlines()}
    assert ("transmit" in got) is kinds


def test_log_level_debug_adds_payloads(monkeypatch, capsys):
    monkeypatch.setenv("NAVSEC_LOG", "debug")
    main(["run", scenario("honest_p4")])
    assert '"data"' in capsys.readouterr().out


def test_bad_log_level(monkeypatch):
    monkeypatch.setenv("NAVSEC_LOG", "chatty")
    assert main(["run", scenario("honest_p4")]) == EXIT_INVALID


def test_suite_on_bundled_corpus(capsys):
    assert main(["suite", str(SCENARIOS), "--jobs", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    n = len(list(SCENARIOS.glob("*.json")))
    assert out.strip().endswith(f"{n}/{n} passed")


def test_suite_empty_directory(tmp_path, capsys):
    assert main(["suite", str(tmp_path)]) == EXIT_OK
    assert "0/0 passed" in capsys.readouterr().out


def test_suite_lists_corrupt_file_as_invalid(tmp_path, capsys):
    shutil.copy(scenario("honest_p1"), tmp_path / "a.json")
    (tmp_path / "b.json").write_text("{oops")
    assert main(["suite", str(tmp_path)]) == EXIT_MISMATCH
    results = run_suite(tmp_path)
    assert [r["status"] for r in results] == ["PASS", "INVALID"]


def test_suite_not_a_directory(tmp_path):
    assert main(["suite", str(tmp_path / "missing")]) == EXIT_IO


@pytest.fixture
def pki(tmp_path):
    def key(name, seed):
        assert main(["cert", "keygen", "--out", str(tmp_path / f"{name}.key"), "--seed", str(seed),
                     "--public-out", str(tmp_path / f"{name}.pub")]) == EXIT_OK
        return str(tmp_path / f"{name}.key")

    root, inter, nav = key("root", 1), key("inter", 2), key("nav", 3)
    issue = ["cert", "issue", "--valid-from", "0", "--valid-to", "1000000000"]
    assert main(issue + ["--certifier", root, "--subject", "inter", "--subject-key", inter,
                         "--level", "crypto_security_type=remotely_secure", "--out", str(tmp_path / "inter.cert")]) == EXIT_OK
    assert main(issue + ["--certifier", inter, "--subject", "n1", "--subject-key", nav,
                         "--position", "1", "2", "3", "--processing-delay", "1000",
                         "--binary", "--out", str(tmp_path / "n1.cert")]) == EXIT_OK
    return tmp_path


def test_cert_verify(pki, capsys):
    assert main(["cert", "verify", str(pki / "inter.cert"), "--at", "5"]) == EXIT_OK
    assert main(["cert", "verify", str(pki / "n1.cert"), "--at", "2000000000"]) == EXIT_MISMATCH
    assert "Expired" in capsys.readouterr().out


def test_cert_chain_and_revocation(pki, capsys):
    chain = ["cert", "chain", str(pki / "inter.cert"), str(pki / "n1.cert"), "--root", str(pki / "root.pub"),
             "--at", "5"]
    assert main(chain) == EXIT_OK
    assert "trusted: n1" in capsys.readouterr().out
    inter = certs.cert_from_json(json.loads((pki / "inter.cert").read_text()))
    assert main(chain + ["--revoked", inter.digest.hex()]) == EXIT_NO_TRUST
    assert main(["cert", "verify", str(pki / "inter.cert"), "--at", "5", "--revoked", inter.digest.hex()]) == EXIT_MISMATCH


def test_cert_chain_wrong_root(pki):
    assert main(["cert", "chain", str(pki / "n1.cert"), "--root", str(pki / "root.pub"), "--at", "5"]) == EXIT_NO_TRUST


def test_cert_chain_policy_minimum(pki):
    base = ["cert", "chain", str(pki / "inter.cert"), "--root", str(pki / "root.pub"), "--at", "5"]
    assert main(base + ["--minimum", "crypto_security_type=1"]) == EXIT_OK
    assert main(base + ["--minimum", "crypto_security_type=tamper_resistant"]) == EXIT_NO_TRUST
    assert main(base + ["--minimum", "crypto_security_type=9"]) == EXIT_INVALID
    # the minimum binds every link, and the navaid cert carries no such assertion
    assert main(base[:3] + [str(pki / "n1.cert")] + base[3:] + ["--minimum", "crypto_security_type=1"]) == EXIT_NO_TRUST


def test_garbage_certificate_is_exit_3(tmp_path):
    p = tmp_path / "junk.cert"
    p.write_bytes(b"\x00\x01garbage")
    assert main(["cert", "verify", str(p), "--at", "0"]) == EXIT_IO


def test_issue_needs_private_key(pki):
    assert main(["cert", "issue", "--certifier", str(pki / "root.pub"), "--subject", "x",
                 "--subject-key", str(pki / "nav.pub"), "--valid-to", "10", "--out", str(pki / "x")]) == EXIT_IO
