from __future__ import annotations

import json
import subprocess
import sys

import pytest

from sgf.cli import emit_dot, main, parse_epsilon
from sgf.errors import InvalidInput
from sgf.graph import from_generators, trivial_group


def run(tmp_path, *argv: str) -> tuple[int, str, str]:
    proc = subprocess.run([sys.executable, "-m", "sgf", *argv], cwd=tmp_path, capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


def test_olshanskii_file_is_deterministic_and_verifies(tmp_path):
    args = ["olshanskii", "--rank", "2", "--subgroup", "A=a", "--subgroup", "B=b", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "c1.json")]) == 0
    assert main(args + ["--out", str(tmp_path / "c2.json")]) == 0
    first = (tmp_path / "c1.json").read_bytes()
    assert first == (tmp_path / "c2.json").read_bytes()
    data = json.loads(first)
    assert data["schema"] == 1 and data["seed"] == 7 and data["index_B_B0"] == 2
    assert main(["verify", str(tmp_path / "c1.json")]) == 0


def test_tampered_certificate_exits_3(tmp_path, capsys):
    path = tmp_path / "c.json"
    assert main(["olshanskii", "--rank", "2", "--subgroup", "A=a", "--subgroup", "B=b", "--out", str(path)]) == 0
    data = json.loads(path.read_text())
    data["index_B_B0"] = 3
    path.write_text(json.dumps(data))
    capsys.readouterr()
    assert main(["verify", str(path)]) == 3
    err = json.loads(capsys.readouterr().err)
    assert "[B:B0] <= epsilon [F:NA]" in err["error"]["failed"]


def test_decimal_epsilon_rejected(capsys):
    code = main(["measure-product", "--rank", "2", "--subgroup", "A=a", "--epsilon", "0.5"])
    assert code == 1
    err = json.loads(capsys.readouterr().err)["error"]
    assert err["code"] == "INVALID_INPUT" and err["field"] == "epsilon"
    assert parse_epsilon("3/6") == parse_epsilon(" 1 / 2 ")
    with pytest.raises(InvalidInput):
        parse_epsilon("1e-3")


@pytest.mark.parametrize("argv, field", [
    (["olshanskii", "--rank", "2", "--subgroup", "A=a"], "subgroups"),
    (["complete", "--rank", "2", "--subgroup", "A=a"], "target"),
    (["info", "--rank", "1", "--subgroup", "A=a"], "rank"),
    (["info", "--rank", "2", "--subgroup", "A=ac"], "subgroups.A"),
    (["verify"], "files"),
])
def test_invalid_input_names_field(argv, field, capsys):
    assert main(argv) == 1
    assert json.loads(capsys.readouterr().err)["error"]["field"] == field


def test_construction_errors_map_to_exit_codes(capsys):
    assert main(["complete", "--rank", "2", "--subgroup", "A=a", "--target", "2", "--avoid", "aa"]) == 1
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "AVOID_IN_SUBGROUP"
    assert main(["olshanskii", "--rank", "2", "--subgroup", "A=a,b", "--subgroup", "B=b"]) == 1


def test_cap_exceeded_exits_2(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SGF_CAPS", "200000,200000,1")
    assert main(["olshanskii", "--rank", "2", "--subgroup", "A=a", "--subgroup", "B=b"]) == 2
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "CAP_EXCEEDED"


def test_spec_file_with_flag_override(tmp_path, capsys):
    spec = {"rank": 2, "command": "measure", "subgroups": {"H": ["b", "aa", "abA"]}}
    (tmp_path / "task.json").write_text(json.dumps(spec))
    assert main(["--spec", str(tmp_path / "task.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["measure"] == {"num": 1, "den": 2}
    assert main(["--spec", str(tmp_path / "task.json"), "--subgroup", "H=a", "--target", "10"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "measure-bound"
    assert out["bound"]["num"] * 10 <= out["bound"]["den"]


def test_all_artifact_kinds_verify(tmp_path):
    files = []
    for name, argv in {
        "mb": ["measure-product", "--rank", "2", "--subgroup", "A=a", "--subgroup", "B=b", "--epsilon", "1/4"],
        "pw": ["product-witness", "--rank", "2", "--subgroup", "A=a", "--subgroup", "B=b"],
        "base": ["base", "--rank", "2", "--subgroup", "A=a", "--subgroup", "B=b", "--subgroup", "C=ab"],
    }.items():
        path = str(tmp_path / f"{name}.json")
        assert main(argv + ["--out", path]) == 0
        files.append(path)
    assert main(["verify", *files, "--out", str(tmp_path / "v.json")]) == 0
    assert json.loads((tmp_path / "v.json").read_text())["ok"]


def test_other_commands(tmp_path, capsys):
    assert main(["intersect", "--rank", "2", "--subgroup", "A=aa", "--subgroup", "B=aaa"]) == 0
    assert json.loads(capsys.readouterr().out)["generators"] == ["aaaaaa"]
    assert main(["join", "--rank", "2", "--subgroup", "A=a", "--subgroup", "B=bb"]) == 0
    assert json.loads(capsys.readouterr().out)["index"] == "infinite"
    assert main(["complete", "--rank", "2", "--subgroup", "A=a", "--target", "2", "--avoid", "b"]) == 0
    assert json.loads(capsys.readouterr().out)["quotient"]["perms"] == {"a": [1, 2], "b": [2, 1]}
    assert main(["lemma", "--rank", "2", "--subgroup", "A=a", "--subgroup", "B=b"]) == 0
    assert json.loads(capsys.readouterr().out)["ok"]
    assert main(["kernel-check", "--rank", "2", "--subgroup", "R=a,bb", "--radius", "3",
                 "--conjugators", "b,a,ab,ba"]) == 0
    assert json.loads(capsys.readouterr().out)["survivors"] == []
    assert main(["info", "--rank", "2", "--subgroup", "H=b,aa,abA"]) == 0
    assert json.loads(capsys.readouterr().out)["subgroups"][0]["index"] == 2


def test_dot_output(tmp_path, capsys):
    assert main(["dot", "--rank", "2", "--subgroup", "H=a,bb"]) == 0
    text = capsys.readouterr().out
    assert text == emit_dot(from_generators(["bb", "a"], 2), "H")
    assert 'v0 -> v0 [label="a"]' in text and text.count('label="b"') == 2
    assert emit_dot(trivial_group(2)).count("->") == 0
    assert emit_dot(from_generators(["a"], 2)).count('[label="a"]') == 1


def test_console_entry_point(tmp_path):
    code, out, _ = run(tmp_path, "info", "--rank", "2", "--subgroup", "H=a")
    assert code == 0 and json.loads(out)["subgroups"][0]["index"] == "infinite"
