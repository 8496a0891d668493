"""End-to-end tests of the command-line surface.

Commands run in process through main(argv); reports in the records format
are parsed back as JSON lines and, where an oracle exists, compared against
the library path bit for bit (JSON floats round-trip float64 exactly).
"""

import filecmp
import json

import numpy as np
import numpy.testing as npt
import pytest

from eivbands import dataio, simstudy
from eivbands.bootstrap import simultaneous_bands
from eivbands.cli import main
from eivbands.debias import run_inference
from eivbands.lasso import Dataset, NoiseSpec, SolverConfig


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_records(text):
    return [json.loads(line) for line in text.strip().splitlines()]


def write_regression(tmp_path, n=40, p=4, seed=0, sigma_w=0.5, name="data.csv"):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    beta = np.zeros(p)
    beta[0] = 1.2
    beta[p - 1] = -0.7
    y = x @ beta + 0.3 * rng.normal(size=n)
    Z = x + sigma_w * rng.normal(size=(n, p))
    path = str(tmp_path / name)
    dataio.write_dataset_csv(path, Dataset(y=y, Z=Z))
    gamma = str(tmp_path / f"gamma_{name}.txt")
    with open(gamma, "w") as fh:
        fh.writelines(f"{sigma_w ** 2!r}\n" for _ in range(p))
    return path, gamma


# ---------------------------------------------------------------------------
# infer


def test_infer_records_shape(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    code, out, err = run_cli(capsys, "infer", "--input", data, "--gamma",
                             gamma, "--targets", "z1", "--format", "records")
    assert code == 0 and err == ""
    records = parse_records(out)
    assert records[0]["record"] == "run"
    assert records[0]["schema_version"] == 1
    assert records[0]["command"] == "infer"
    assert records[0]["gamma_source"] == gamma
    targets = [r for r in records if r["record"] == "target"]
    assert len(targets) == 1
    assert targets[0]["name"] == "z1"
    assert targets[0]["index"] == 1
    assert targets[0]["ci_low"] < targets[0]["estimate"] < targets[0]["ci_high"]


def test_infer_matches_library_path(tmp_path, capsys):
    data_path, gamma_path = write_regression(tmp_path, seed=3)
    code, out, _ = run_cli(capsys, "infer", "--input", data_path, "--gamma",
                           gamma_path, "--targets", "z1,z4", "--boot", "200",
                           "--seed", "11", "--format", "records")
    assert code == 0
    records = parse_records(out)
    data, _ = dataio.read_dataset_csv(data_path)
    gamma = dataio.read_noise_csv(gamma_path, 4)
    table = run_inference(data, NoiseSpec.known(gamma), [0, 3])
    band = simultaneous_bands(table, 200, 11)
    targets = [r for r in records if r["record"] == "target"]
    for k, rec in enumerate(targets):
        assert rec["estimate"] == table.cells[k].estimate
        assert rec["sd"] == table.cells[k].sd
        assert rec["ci_low"] == table.cells[k].ci_low
        assert rec["band_low"] == band.lower[k]
        assert rec["band_high"] == band.upper[k]
    band_rec = next(r for r in records if r["record"] == "band")
    assert band_rec["critical_value"] == band.critical_value


def test_infer_zero_noise_matches_plain_debiased_lasso(tmp_path, capsys):
    # gamma = 0 degrades gracefully to the classical debiased pipeline
    data_path, _ = write_regression(tmp_path, seed=5, sigma_w=0.0)
    gamma_path = str(tmp_path / "zeros.txt")
    with open(gamma_path, "w") as fh:
        fh.write("0.0\n" * 4)
    code, out, _ = run_cli(capsys, "infer", "--input", data_path, "--gamma",
                           gamma_path, "--targets", "z2", "--format",
                           "records")
    assert code == 0
    rec = next(r for r in parse_records(out) if r["record"] == "target")
    data, _ = dataio.read_dataset_csv(data_path)
    table = run_inference(data, NoiseSpec.known(np.zeros(4)), [1])
    assert rec["estimate"] == table.cells[0].estimate
    assert rec["sd"] == table.cells[0].sd


def test_infer_multi_target_band_is_automatic(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    code, out, _ = run_cli(capsys, "infer", "--input", data, "--gamma", gamma,
                           "--targets", "z1,z2", "--format", "records")
    assert code == 0
    records = parse_records(out)
    assert any(r["record"] == "band" for r in records)
    assert all("band_low" in r for r in records if r["record"] == "target")


def test_infer_single_target_has_no_band_by_default(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    code, out, _ = run_cli(capsys, "infer", "--input", data, "--gamma", gamma,
                           "--targets", "z1", "--format", "records")
    assert code == 0
    records = parse_records(out)
    assert not any(r["record"] == "band" for r in records)


def test_bands_subcommand_forces_band(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    code, out, _ = run_cli(capsys, "bands", "--input", data, "--gamma", gamma,
                           "--targets", "z1", "--format", "records")
    assert code == 0
    assert any(r["record"] == "band" for r in parse_records(out))


def test_targets_accept_positions_and_names(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    code_a, out_a, _ = run_cli(capsys, "infer", "--input", data, "--gamma",
                               gamma, "--targets", "z1,3", "--format",
                               "records")
    code_b, out_b, _ = run_cli(capsys, "infer", "--input", data, "--gamma",
                               gamma, "--targets", "1,z3", "--format",
                               "records")
    assert code_a == code_b == 0
    assert out_a == out_b


def test_table_format_is_default(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    code, out, _ = run_cli(capsys, "infer", "--input", data, "--gamma", gamma,
                           "--targets", "z1")
    assert code == 0
    assert "debiased inference" in out
    assert "estimate" in out


def test_out_flag_writes_file(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    out_path = str(tmp_path / "report.ndjson")
    code, out, _ = run_cli(capsys, "infer", "--input", data, "--gamma", gamma,
                           "--targets", "z1", "--format", "records", "--out",
                           out_path)
    assert code == 0
    assert out == ""
    records = parse_records(open(out_path, encoding="utf-8").read())
    assert records[0]["record"] == "run"


def test_mar_flag_estimates_noise(tmp_path, capsys):
    path = str(tmp_path / "holes.csv")
    rng = np.random.default_rng(2)
    n, p = 60, 3
    Z = rng.normal(size=(n, p))
    y = 1.5 * Z[:, 0] + 0.2 * rng.normal(size=n)
    mask = rng.uniform(size=(n, p)) > 0.15
    dataio.write_dataset_csv(path, Dataset(y=y, Z=np.where(mask, Z, 0.0),
                                           mask=mask))
    code, out, _ = run_cli(capsys, "infer", "--input", path, "--mar",
                           "--targets", "z1", "--format", "records")
    assert code == 0
    header = parse_records(out)[0]
    assert header["noise"] == "mar"
    assert header["gamma_source"] == "estimated"


# ---------------------------------------------------------------------------
# error paths and exit codes


def test_bad_alpha_names_flag(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    code, _, err = run_cli(capsys, "infer", "--input", data, "--gamma", gamma,
                           "--alpha", "1.5")
    assert code == 2
    assert "--alpha" in err and "1.5" in err


def test_degenerate_column_names_coordinate(tmp_path, capsys):
    # an all-zero column has zero projection residual, so the score slope
    # vanishes exactly when gamma = 0
    rng = np.random.default_rng(4)
    z = np.zeros(30)
    Z = np.column_stack([z, rng.normal(size=30), rng.normal(size=30)])
    y = Z[:, 1] + 0.1 * rng.normal(size=30)
    path = str(tmp_path / "dup.csv")
    dataio.write_dataset_csv(path, Dataset(y=y, Z=Z))
    gamma = str(tmp_path / "g0.txt")
    with open(gamma, "w") as fh:
        fh.write("0.0\n0.0\n0.0\n")
    code, _, err = run_cli(capsys, "infer", "--input", path, "--gamma", gamma,
                           "--targets", "z1")
    assert code == 4
    assert "column 0" in err


def test_missing_cells_without_mar_exit_2(tmp_path, capsys):
    path = str(tmp_path / "na.csv")
    path_obj = tmp_path / "na.csv"
    path_obj.write_text("y,z1,z2\n1.0,NA,3.0\n2.0,1.0,4.0\n")
    gamma = str(tmp_path / "g.txt")
    (tmp_path / "g.txt").write_text("0.1\n0.1\n")
    code, _, err = run_cli(capsys, "infer", "--input", path, "--gamma", gamma)
    assert code == 2
    assert "missing" in err


def test_duplicate_headers_exit_2(tmp_path, capsys):
    (tmp_path / "dup.csv").write_text("y,z1,z1\n1,2,3\n4,5,6\n")
    (tmp_path / "g.txt").write_text("0.1\n0.1\n")
    code, _, err = run_cli(capsys, "infer", "--input",
                           str(tmp_path / "dup.csv"), "--gamma",
                           str(tmp_path / "g.txt"))
    assert code == 2
    assert "duplicate" in err


def test_unknown_target_exit_2(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    code, _, err = run_cli(capsys, "infer", "--input", data, "--gamma", gamma,
                           "--targets", "zz9")
    assert code == 2
    assert "zz9" in err


def test_duplicate_target_exit_2(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    code, _, err = run_cli(capsys, "infer", "--input", data, "--gamma", gamma,
                           "--targets", "z1,1")
    assert code == 2
    assert "twice" in err


def test_missing_input_file_exit_2(tmp_path, capsys):
    code, _, err = run_cli(capsys, "infer", "--input",
                           str(tmp_path / "nope.csv"), "--mar")
    assert code == 2
    assert "error" in err


def test_no_subcommand_exit_2(capsys):
    code, _, err = run_cli(capsys)
    assert code == 2


def test_gamma_and_mar_conflict_exit_2(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    code, _, err = run_cli(capsys, "infer", "--input", data, "--gamma", gamma,
                           "--mar")
    assert code == 2


# ---------------------------------------------------------------------------
# graph


def write_nodes(tmp_path, n=120, p=4, seed=0, name="nodes.csv"):
    cfg = simstudy.SimConfig(n=n, p=p, beta0=np.zeros(p), targets=(0,),
                             null_values=(0.0,), measurement_sd=0.0,
                             ar_rho=0.0, replications=1, seed=seed)
    data = simstudy.generate(cfg, 0)
    path = str(tmp_path / name)
    with open(path, "w") as fh:
        fh.write(",".join(f"z{k + 1}" for k in range(p)) + "\n")
        for row in data.Z:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    gamma = str(tmp_path / f"g_{name}.txt")
    with open(gamma, "w") as fh:
        fh.write("0.0\n" * p)
    return path, gamma


def test_graph_rejects_mar(tmp_path, capsys):
    path, _ = write_nodes(tmp_path)
    code, _, err = run_cli(capsys, "graph", "--input", path, "--mar")
    assert code == 2
    assert "--mar" in err


def test_graph_needs_no_response_column(tmp_path, capsys):
    path, gamma = write_nodes(tmp_path, n=50)
    code, out, _ = run_cli(capsys, "graph", "--input", path, "--gamma", gamma,
                           "--boot", "100", "--format", "records")
    assert code == 0
    records = parse_records(out)
    edges = [r for r in records if r["record"] == "edge"]
    assert len(edges) == 12  # 4 nodes, 3 partners each
    assert all(e["source"] != e["partner"] for e in edges)


def test_graph_single_source_matches_library_inference(tmp_path, capsys):
    # p = 2: one source gives one edge whose numbers must equal the plain
    # regression of node 1 on node 2 with the same bootstrap
    rng = np.random.default_rng(6)
    Z = rng.normal(size=(50, 2))
    Z[:, 0] += 0.8 * Z[:, 1]
    path = str(tmp_path / "pair.csv")
    with open(path, "w") as fh:
        fh.write("z1,z2\n")
        for row in Z:
            fh.write(f"{float(row[0])!r},{float(row[1])!r}\n")
    gamma = str(tmp_path / "pair_g.txt")
    with open(gamma, "w") as fh:
        fh.write("0.0\n0.0\n")
    code, out, _ = run_cli(capsys, "graph", "--input", path, "--gamma", gamma,
                           "--targets", "z1", "--boot", "400", "--seed", "9",
                           "--format", "records")
    assert code == 0
    edge = next(r for r in parse_records(out) if r["record"] == "edge")
    sub = Dataset(y=Z[:, 0], Z=Z[:, 1:])
    table = run_inference(sub, NoiseSpec.known(np.zeros(1)), [0])
    band = simultaneous_bands(table, 400, 9)
    assert edge["estimate"] == table.cells[0].estimate
    assert edge["sd"] == table.cells[0].sd
    assert edge["band_low"] == band.lower[0]
    assert edge["band_high"] == band.upper[0]


def test_graph_null_design_bands_cover_zero(tmp_path, capsys):
    # independent nodes: every conditional association is zero, so with
    # alpha = 0.05 the joint band should cover zero everywhere in well over
    # 90% of replications
    hits = 0
    reps = 20
    for r in range(reps):
        path, gamma = write_nodes(tmp_path, n=120, p=4, seed=100 + r,
                                  name=f"null{r}.csv")
        code, out, _ = run_cli(capsys, "graph", "--input", path, "--gamma",
                               gamma, "--boot", "300", "--format", "records")
        assert code == 0
        edges = [rec for rec in parse_records(out) if rec["record"] == "edge"]
        hits += all(e["zero_in_band"] for e in edges)
    assert hits >= 0.9 * reps


# ---------------------------------------------------------------------------
# simulate


def test_simulate_records_are_consistent(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "simulate", "--n", "50", "--p", "8",
                           "--replications", "4", "--format", "records")
    assert code == 0
    records = parse_records(out)
    header = records[0]
    assert header["command"] == "simulate"
    assert header["replications"] == 4
    agg = next(r for r in records if r["record"] == "aggregate")
    reps = [r for r in records if r["record"] == "replication"]
    assert len(reps) == 4
    assert agg["rejection_rate"] == np.mean([r["reject"] for r in reps])


def test_simulate_rerun_is_byte_identical(tmp_path, capsys):
    args = ("simulate", "--n", "50", "--p", "8", "--replications", "3",
            "--seed", "7", "--format", "records")
    a, b = str(tmp_path / "a.ndjson"), str(tmp_path / "b.ndjson")
    assert run_cli(capsys, *args, "--out", a)[0] == 0
    assert run_cli(capsys, *args, "--out", b)[0] == 0
    assert filecmp.cmp(a, b, shallow=False)


def test_simulate_worker_count_invisible_in_report(tmp_path, capsys):
    base = ("simulate", "--n", "50", "--p", "8", "--replications", "4",
            "--seed", "7", "--format", "records")
    a, b = str(tmp_path / "w1.ndjson"), str(tmp_path / "w2.ndjson")
    assert run_cli(capsys, *base, "--workers", "1", "--out", a)[0] == 0
    assert run_cli(capsys, *base, "--workers", "2", "--out", b)[0] == 0
    assert filecmp.cmp(a, b, shallow=False)


def test_infer_worker_count_invisible_in_report(tmp_path, capsys):
    data, gamma = write_regression(tmp_path)
    base = ("infer", "--input", data, "--gamma", gamma, "--targets", "all",
            "--boot", "100", "--format", "records")
    a, b = str(tmp_path / "i1.ndjson"), str(tmp_path / "i2.ndjson")
    assert run_cli(capsys, *base, "--workers", "1", "--out", a)[0] == 0
    assert run_cli(capsys, *base, "--workers", "2", "--out", b)[0] == 0
    assert filecmp.cmp(a, b, shallow=False)


def test_simulate_zero_replications_exit_2(capsys):
    code, _, err = run_cli(capsys, "simulate", "--replications", "0")
    assert code == 2
    assert "--replications" in err


def test_simulate_dumped_data_reingests_identically(tmp_path, capsys):
    dump = str(tmp_path / "rep0.csv")
    code, _, _ = run_cli(capsys, "simulate", "--n", "60", "--p", "5",
                         "--replications", "1", "--seed", "13", "--sigma-w",
                         "0.5", "--dump-data", dump, "--format", "records")
    assert code == 0
    cfg = simstudy.single_target_study(n=60, p=5, measurement_sd=0.5,
                                       replications=1, seed=13)
    direct = simstudy.generate(cfg, 0)
    back, _ = dataio.read_dataset_csv(dump)
    npt.assert_array_equal(back.y, direct.y)
    npt.assert_array_equal(back.Z, direct.Z)
    # and the file path yields bit-identical inference to the memory path
    gamma = str(tmp_path / "g5.txt")
    with open(gamma, "w") as fh:
        fh.write("0.25\n" * 5)
    code, out, _ = run_cli(capsys, "infer", "--input", dump, "--gamma", gamma,
                           "--targets", "z1", "--format", "records")
    assert code == 0
    rec = next(r for r in parse_records(out) if r["record"] == "target")
    table = run_inference(direct, NoiseSpec.known(np.full(5, 0.25)), [0])
    assert rec["estimate"] == table.cells[0].estimate
    assert rec["sd"] == table.cells[0].sd


def test_simulate_config_file_overrides(tmp_path, capsys):
    cfg_path = str(tmp_path / "study.json")
    with open(cfg_path, "w") as fh:
        json.dump({"replications": 2, "n": 40, "p": 6,
                   "solver": {"max_iter": 500}}, fh)
    code, out, _ = run_cli(capsys, "simulate", "--config", cfg_path,
                           "--format", "records")
    assert code == 0
    header = parse_records(out)[0]
    assert header["replications"] == 2
    assert header["n"] == 40
    assert header["max_iter"] == 500


def test_simulate_unknown_config_key_exit_2(tmp_path, capsys):
    cfg_path = str(tmp_path / "bad.json")
    with open(cfg_path, "w") as fh:
        json.dump({"sample_size": 50}, fh)
    code, _, err = run_cli(capsys, "simulate", "--config", cfg_path)
    assert code == 2
    assert "sample_size" in err


def test_simulate_naive_method_flag(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--n", "60", "--p", "6",
                           "--replications", "3", "--method", "naive",
                           "--format", "records")
    assert code == 0
    assert parse_records(out)[0]["method"] == "naive"


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    data, gamma = write_regression(tmp_path)
    done = subprocess.run(
        [sys.executable, "-m", "eivbands.cli", "infer", "--input", data,
         "--gamma", gamma, "--targets", "z1", "--format", "records"],
        capture_output=True, text=True)
    assert done.returncode == 0
    assert parse_records(done.stdout)[0]["command"] == "infer"


def test_lambda_scale_shrinks_support(tmp_path, capsys):
    data, gamma = write_regression(tmp_path, n=60, p=5, seed=8)
    _, out_small, _ = run_cli(capsys, "fit", "--input", data, "--gamma",
                              gamma, "--format", "records")
    _, out_big, _ = run_cli(capsys, "fit", "--input", data, "--gamma", gamma,
                            "--lambda-scale", "6.0", "--format", "records")
    small = [r for r in parse_records(out_small) if r["record"] == "coefficient"]
    big = [r for r in parse_records(out_big) if r["record"] == "coefficient"]
    assert len(big) < len(small)
    header = parse_records(out_big)[0]
    assert header["penalty"] == pytest.approx(
        6.0 * parse_records(out_small)[0]["penalty"])
