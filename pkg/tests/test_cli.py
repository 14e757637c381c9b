import json

import numpy as np
import pytest

from begin import (
    Mask,
    Partition,
    Pmf,
    draw_samples,
    fwht,
    make_ci_pmf,
    partition_to_json,
    prism,
    read_pmf_csv,
    write_pmf_csv,
    write_samples_csv,
)
from begin.cli import main
from begin.engine import test_ci as decide_ci

from conftest import cell_index, random_chain_pmf


@pytest.fixture()
def part111_file(tmp_path):
    path = tmp_path / "part.json"
    path.write_text(partition_to_json(Partition.coordinate_split(1, 1, 1)))
    return str(path)


def write_xor(tmp_path):
    probs = np.zeros(8)
    for a in (1, -1):
        for c in (1, -1):
            probs[cell_index((a, a * c, c))] = 0.25
    path = tmp_path / "xor.csv"
    write_pmf_csv(Pmf(3, probs), str(path))
    return str(path)


def test_verdict_exit_codes(tmp_path, part111_file, capsys):
    ci = tmp_path / "ci.csv"
    assert main(["random", "--mode", "ci", "--dims", "1,1,1", "--seed", "5",
                 "--out", str(ci)]) == 0
    assert main(["test", str(ci), "--partition", part111_file]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["is_ci"] is True
    assert payload["max_offblock_S"] <= 1e-10

    xor = write_xor(tmp_path)
    assert main(["test", xor, "--partition", part111_file]) == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload["is_ci"] is False
    assert payload["max_offblock_S"] == 1.0


def test_verdict_payload_matches_library(tmp_path, part111_file, capsys):
    ci = tmp_path / "ci.csv"
    main(["random", "--mode", "ci", "--dims", "1,1,1", "--seed", "5",
          "--out", str(ci)])
    main(["test", str(ci), "--partition", part111_file])
    payload = json.loads(capsys.readouterr().out)
    verdict = decide_ci(read_pmf_csv(str(ci)), Partition.coordinate_split(1, 1, 1))
    assert payload == verdict.to_json_dict()


def test_malformed_input_exits_two(tmp_path, part111_file, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("bits,prob\n+-,0.5\nxx,0.5\n")
    assert main(["test", str(bad), "--partition", part111_file]) == 2
    assert capsys.readouterr().err.startswith("error:")
    missing = tmp_path / "nope.csv"
    assert main(["test", str(missing), "--partition", part111_file]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_empirical_input_is_advisory(tmp_path, part111_file, capsys):
    samples = tmp_path / "samples.csv"
    write_samples_csv(
        draw_samples(make_ci_pmf(1, 1, 1, seed=5), 200, seed=7), str(samples)
    )
    assert main(["test", str(samples), "--partition", part111_file]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["empirical"] is True
    assert payload["is_ci"] is None
    assert payload["max_offblock_S"] > 0.0


def test_empirical_assert_tol_gives_a_verdict(tmp_path, part111_file, capsys):
    samples = tmp_path / "samples.csv"
    write_samples_csv(
        draw_samples(make_ci_pmf(1, 1, 1, seed=5), 200, seed=7), str(samples)
    )
    assert main(["test", str(samples), "--partition", part111_file,
                 "--assert-tol", "0.2"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["is_ci"] is True
    assert payload["tol"] == 0.2
    assert main(["test", str(samples), "--partition", part111_file,
                 "--assert-tol", "1e-6"]) == 1
    assert json.loads(capsys.readouterr().out)["is_ci"] is False


def test_graph_dot_output(tmp_path, part111_file, capsys):
    xor = write_xor(tmp_path)
    assert main(["graph", xor, "--partition", part111_file]) == 0
    dot = capsys.readouterr().out
    for wing in ("L", "B", "R"):
        assert f"subgraph cluster_{wing} {{" in dot
    assert " -- " in dot


def test_graph_format_follows_extension(tmp_path, part111_file, capsys):
    xor = write_xor(tmp_path)
    out_json = tmp_path / "g.json"
    assert main(["graph", xor, "--partition", part111_file,
                 "--out", str(out_json)]) == 0
    obj = json.loads(out_json.read_text())
    assert sorted(obj) == ["edges", "nodes", "tol", "width"]
    out_dot = tmp_path / "g.dot"
    assert main(["graph", xor, "--partition", part111_file,
                 "--out", str(out_dot)]) == 0
    assert out_dot.read_text().startswith("graph begin {")
    # explicit format beats the extension
    assert main(["graph", xor, "--partition", part111_file,
                 "--out", str(out_json), "--format", "dot"]) == 0
    assert out_json.read_text().startswith("graph begin {")


def test_graph_separates_markov_chain(tmp_path, capsys):
    chain = random_chain_pmf(4, 11)
    csv_path = tmp_path / "chain.csv"
    write_pmf_csv(chain, str(csv_path))
    part = Partition(
        4,
        a_gens=[Mask(0b1000, 4)],
        b_gens=[Mask(0b0100, 4)],
        c_gens=[Mask(0b0010, 4), Mask(0b0001, 4)],
    )
    part_path = tmp_path / "p4.json"
    part_path.write_text(partition_to_json(part))
    assert main(["graph", str(csv_path), "--partition", str(part_path),
                 "--format", "json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert len(obj["nodes"]) == 9
    wings = [n["wing"] for n in obj["nodes"]]
    assert wings.count("B") == 1 and wings.count("L") == 2 and wings.count("R") == 6
    cross = [
        e for e in obj["edges"] if {wings[e[0]], wings[e[1]]} == {"L", "R"}
    ]
    assert cross == []


def test_rank_report(tmp_path, capsys):
    full = tmp_path / "full.csv"
    write_pmf_csv(make_ci_pmf(1, 1, 1, seed=5), str(full))
    assert main(["rank", str(full)]) == 0
    assert capsys.readouterr().out == "rank: 7\nsupport: 8\nidentity: pass\n"
    two = tmp_path / "two.csv"
    write_pmf_csv(Pmf(2, np.array([0.5, 0.0, 0.0, 0.5])), str(two))
    assert main(["rank", str(two)]) == 0
    assert capsys.readouterr().out == "rank: 1\nsupport: 2\nidentity: pass\n"
    point = tmp_path / "point.csv"
    write_pmf_csv(Pmf(2, np.eye(4)[1]), str(point))
    assert main(["rank", str(point)]) == 0
    assert capsys.readouterr().out == "rank: 0\nsupport: 1\nidentity: pass\n"


def test_prism_and_wht_match_library(tmp_path, capsys):
    vec = tmp_path / "v.txt"
    vec.write_text("1\n0.5\n")
    assert main(["prism", str(vec)]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    got = np.array([[float(v) for v in ln.split(",")] for ln in lines])
    np.testing.assert_array_equal(got, prism(np.array([1.0, 0.5])).dense())
    assert main(["wht", str(vec), "--format", "json"]) == 0
    got = json.loads(capsys.readouterr().out)
    np.testing.assert_array_equal(got, fwht(np.array([1.0, 0.5])))


def test_vector_input_accepts_commas_and_comments(tmp_path, capsys):
    vec = tmp_path / "v.txt"
    vec.write_text("# moment vector\n1, 0.25, 0.25, 0.0625\n")
    assert main(["wht", str(vec)]) == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert len(out) == 4
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    assert main(["wht", str(empty)]) == 2


def test_quantize_scan_csv(tmp_path, capsys):
    src = tmp_path / "smooth.json"
    src.write_text(
        '{"kind":"smooth","v_depth":0,"v_probs":[1.0],'
        '"u_mean":[[0.0,1.0]],"w_mean":[[0.0,1.0]]}'
    )
    assert main(["quantize", str(src), "--depths", "1..3"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == (
        "d,is_ci,max_offblock_S,max_offblock_Omega,belief_residual,"
        "rank_B,support_B"
    )
    assert len(lines) == 4
    assert all(ln.split(",")[1] == "false" for ln in lines[1:])


def test_delta_curve_csv(tmp_path, capsys):
    src = tmp_path / "smooth.json"
    src.write_text(
        '{"kind":"smooth","v_depth":0,"v_probs":[1.0],'
        '"u_mean":[[0.0,1.0]],"w_mean":[[0.0,1.0]]}'
    )
    assert main(["delta", str(src), "--depths", "1..4", "--mode", "auto"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "d,delta_rect,delta_exact,delta_upper,bound_rhs"
    assert len(lines) == 5
    assert float(lines[1].split(",")[4]) == 0.015625


def test_random_modes_are_deterministic(tmp_path):
    for argv_tail, name in (
        (["--mode", "ci", "--dims", "1,2,1", "--seed", "9",
          "--zero-prob", "0.3"], "ci.csv"),
        (["--mode", "generic", "--dims", "4", "--seed", "9"], "gen.csv"),
        (["--mode", "ising", "--thetas", "0.4,0.3,0.2,0.5",
          "--chord", "0.6"], "ising.csv"),
    ):
        first = tmp_path / ("a_" + name)
        second = tmp_path / ("b_" + name)
        assert main(["random", *argv_tail, "--out", str(first)]) == 0
        assert main(["random", *argv_tail, "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()


def test_random_argument_validation(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert main(["random", "--mode", "ci", "--dims", "2", "--out", str(out)]) == 2
    assert capsys.readouterr().err.startswith("error:")
    assert main(["random", "--mode", "ising", "--thetas", "1,2",
                 "--out", str(out)]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_round_trip_through_files_is_bit_exact(tmp_path, part111_file, capsys):
    ci = tmp_path / "ci.csv"
    main(["random", "--mode", "ci", "--dims", "1,1,1", "--seed", "12",
          "--zero-prob", "0.3", "--out", str(ci)])
    pmf = read_pmf_csv(str(ci))
    direct = make_ci_pmf(1, 1, 1, seed=12, zero_prob=0.3)
    np.testing.assert_array_equal(pmf.probs, direct.probs)
    main(["test", str(ci), "--partition", part111_file])
    payload = json.loads(capsys.readouterr().out)
    verdict = decide_ci(direct, Partition.coordinate_split(1, 1, 1))
    assert payload == verdict.to_json_dict()


def test_bad_arguments_raise_system_exit():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["quantize", "missing.json"])  # --depths is required
