import json
import tempfile
from pathlib import Path

import pytest
from loguru import logger

from test.covers import fixture_path
from tropical_vz.cli import DOCUMENT, DOMAIN, PASS, main


def run(*args: str) -> tuple[int, str]:
    """Run the CLI with ``--out`` and return the exit code and the payload."""
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "payload"
        code = main([*args, "--out", str(out)])
        return code, out.read_text() if out.exists() else ""


def fixture(name: str) -> str:
    return str(fixture_path(name))


def test_validate_exit_codes():
    code, payload = run("validate", fixture("weierstrass_tail"))
    assert code == PASS
    assert json.loads(payload)["passed"] is True
    code, payload = run("validate", fixture("five_branch_legs"))
    assert code == DOMAIN
    assert {v["code"] for v in json.loads(payload)["violations"]} >= {"branch-leg count"}
    assert run("validate", fixture("malformed"))[0] == DOCUMENT
    assert run("validate", fixture("does_not_exist"))[0] == DOCUMENT


def test_enumerate_lists_functions_and_lifts():
    code, payload = run("enumerate", fixture("weierstrass_tail"))
    assert code == PASS
    functions = json.loads(payload)["functions"]
    assert [f["support"] for f in functions] == ["O", "Pt", "Pw"]
    assert functions[0]["D"] == {"O": "1/1"}

    code, payload = run("enumerate", fixture("heavy_core"), "--point", "1,2,3")
    lifts = json.loads(payload)["lifts"]
    logger.info(f"lifts: {lifts}")
    assert code == PASS
    assert [lifted["support"] for lifted in lifts if not lifted["trivial"]] == ["O"]
    assert run("enumerate", fixture("heavy_core"), "--point", "1,2")[0] == DOMAIN


def test_subdivide_and_coarsen():
    code, payload = run("subdivide", fixture("weierstrass_tail"))
    fan = json.loads(payload)
    assert code == PASS
    assert len(fan["cones"]) == 4
    assert fan["discrepancies"] == []
    assert not fan["coarsened"]
    code, payload = run("subdivide", fixture("weierstrass_tail"), "--coarsen")
    assert code == PASS
    assert json.loads(payload)["coarsened"]
    assert run("subdivide", fixture("five_branch_legs"))[0] == DOMAIN


def test_classify_table():
    code, payload = run("classify", fixture("weierstrass_tail"))
    rows = json.loads(payload)
    assert code == PASS
    assert len(rows) == 4
    fibers = {row["fiber"] for row in rows}
    assert {"IsolatedTypeI(m=2)", "IsolatedTypeII(m=2)"} <= fibers
    assert all(row["violations"] == "" for row in rows)


def test_algebra_subcommand():
    code, payload = run("algebra", "--germ", "typeI", "2")
    assert code == PASS
    assert json.loads(payload)["delta"] == 3
    code, payload = run("algebra", "--corpus")
    assert code == PASS
    assert any(row["name"] == "D5" for row in json.loads(payload))
    assert run("algebra", "--germ", "quintic", "1")[0] == DOMAIN
    assert run("algebra", "--germ", "typeI", "two")[0] == DOMAIN
    assert run("algebra", "--germ", "A4", "1", "--truncation", "3")[0] == DOMAIN


def test_export_formats():
    code, dot = run("export", fixture("weierstrass_tail"), "--format", "dot")
    assert code == PASS
    assert "cluster_source" in dot
    assert "cluster_target" in dot
    code, tikz = run("export", fixture("weierstrass_tail"), "--format", "tikz", "--point", "8,1")
    assert code == PASS
    assert tikz.startswith("\\begin{tikzpicture}")
    assert "λ=2/1" in tikz


def test_output_is_deterministic():
    for args in (
        ("subdivide", fixture("weierstrass_tail"), "--coarsen"),
        ("classify", fixture("three_tails"), "--coarsen"),
        ("enumerate", fixture("elliptic_bridge"), "--point", "3,2,8"),
    ):
        first, second = run(*args), run(*args)
        assert first == second, args


def test_bad_arguments_exit_with_two():
    assert main([]) == DOCUMENT
    assert main(["subdivide"]) == DOCUMENT


def test_thread_count_comes_from_the_environment(monkeypatch):
    monkeypatch.setenv("TVZ_THREADS", "1")
    assert run("subdivide", fixture("weierstrass_tail"))[0] == PASS
    monkeypatch.setenv("TVZ_THREADS", "many")
    assert run("subdivide", fixture("weierstrass_tail"))[0] == DOMAIN


def test_payload_goes_to_stdout_without_out(capsys):
    assert main(["validate", fixture("single_vertex")]) == PASS
    captured = capsys.readouterr()
    assert json.loads(captured.out)["cover"] == "single_vertex"


@pytest.mark.parametrize("fmt", ["dot", "tikz"])
def test_export_writes_to_stdout(capsys, fmt):
    assert main(["export", fixture("marked"), "--format", fmt]) == PASS
    assert capsys.readouterr().out.strip()
