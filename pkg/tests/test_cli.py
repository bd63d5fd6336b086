import math
from pathlib import Path

import numpy as np
import pytest

from altproj.cli import (
    EXIT_CONFIG,
    EXIT_INAPPLICABLE,
    EXIT_VERIFY,
    emit_config,
    load_config,
    main,
    parse_config,
    predict_for_config,
)
from altproj.errors import ParseError
from altproj.rates import RateKind

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def cfg_path(name):
    return str(CONFIGS / name)


def test_config_roundtrip():
    for name in ("basic_a34.cfg", "region1.cfg", "ex413.cfg", "oracle_c1q1.cfg",
                 "ex412_partition.cfg", "special_xy.cfg"):
        cfg = load_config(cfg_path(name))
        again = parse_config(emit_config(cfg))
        assert again == cfg
        assert parse_config(emit_config(again)) == again


def test_config_parse_errors():
    with pytest.raises(ParseError):
        parse_config("[scenario]\nname = x\nkind = nope\n")
    with pytest.raises(ParseError):
        parse_config("[scenario]\nname = x\nkind = hypograph\n[set]\ng = x1 +* x2\n")
    with pytest.raises(ParseError):
        load_config("/nonexistent/path.cfg")


def test_predict_dispatch_values(tmp_path):
    cfg = load_config(cfg_path("basic_a34.cfg"))
    pred, lines, code = predict_for_config(cfg)
    assert code == 0 and pred.kind is RateKind.EXACT
    assert abs(pred.limit_constant - 18 / 25) < 1e-15

    cfg = load_config(cfg_path("region1.cfg"))
    pred, lines, code = predict_for_config(cfg)
    assert code == 0
    assert abs(pred.limit_constant - math.sqrt(356 / 125)) < 1e-9
    assert any("projects-to-curve" in ln for ln in lines)

    cfg = load_config(cfg_path("ex413.cfg"))
    pred, lines, code = predict_for_config(cfg)
    assert code == 0
    assert any("leaves-curve" in ln for ln in lines)
    assert any("region = surface1" in ln for ln in lines)
    assert pred.lam is not None and float(pred.lam) == 0.5

    cfg = load_config(cfg_path("special_xy.cfg"))
    pred, lines, code = predict_for_config(cfg)
    assert code == 0 and pred.kind is RateKind.UPPER_BOUND
    assert float(pred.lam) == pytest.approx(1 / 6)

    cfg = load_config(cfg_path("loja_subspace.cfg"))
    pred, lines, code = predict_for_config(cfg)
    assert code == 0 and float(pred.lam) == 0.5


def test_cmd_simulate_csv(tmp_path):
    code = main(["simulate", "--config", cfg_path("basic_a34.cfg"),
                 "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "basic-a34_trace.csv").read_text().splitlines()
    assert lines[0] == "k,norm_u,u_1,u_2,u_3,active,dist_a_to_B"
    norms = [float(ln.split(",")[1]) for ln in lines[1:]]
    assert all(a >= b for a, b in zip(norms, norms[1:]))
    # determinism: identical bytes on a second run
    first = (tmp_path / "basic-a34_trace.csv").read_bytes()
    main(["simulate", "--config", cfg_path("basic_a34.cfg"), "--out", str(tmp_path)])
    assert (tmp_path / "basic-a34_trace.csv").read_bytes() == first


def test_cmd_simulate_zero_start(tmp_path):
    text = (CONFIGS / "basic_a34.cfg").read_text().replace(
        "u0 = 0.3 0.4 0", "u0 = 0 0 0")
    p = tmp_path / "zero.cfg"
    p.write_text(text)
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "basic-a34_trace.csv").read_text().splitlines()
    assert len(lines) == 2  # header + single record


def test_cmd_simulate_bad_poly(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("[scenario]\nname = bad\nkind = hypograph\n"
                 "[set]\ng = x1^ + oops\n")
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 1


def test_cmd_predict_writes_report(tmp_path):
    code = main(["predict", "--config", cfg_path("region1.cfg"), "--out", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "region1_prediction.txt").read_text()
    assert "kind = exact" in text
    assert "lambda = 1/2" in text
    assert "multipliers = 37/10 3/10 -6/5" in text


def test_cmd_predict_inconclusive_exit3(tmp_path):
    p = tmp_path / "inc.cfg"
    p.write_text("""
[scenario]
name = inc
kind = twopoly
[set]
f1 = x1^2 + x2^4
f2 = x1^2 + x2^4 + x1 + x2
[subspace]
v1 = -1 1 0
[run]
u0 = -0.01 0.01 0
iterations = 100
""")
    assert main(["predict", "--config", str(p), "--out", str(tmp_path)]) == EXIT_INAPPLICABLE


def test_cmd_verify_pass_and_fail(tmp_path):
    code = main(["verify", "--config", cfg_path("basic_a34.cfg"), "--out", str(tmp_path)])
    assert code == 0
    report = (tmp_path / "basic-a34_verify.txt").read_text()
    assert "overall = pass" in report
    code = main(["verify", "--config", cfg_path("basic_a34.cfg"), "--out", str(tmp_path),
                 "--override-constant", "1.44"])
    assert code == EXIT_VERIFY
    report = (tmp_path / "basic-a34_verify.txt").read_text()
    assert "overall = FAIL" in report


def test_cmd_verify_linear_branch(tmp_path):
    code = main(["verify", "--config", cfg_path("ex412_bprime_minus.cfg"),
                 "--out", str(tmp_path)])
    assert code == 0
    report = (tmp_path / "ex412-bprime-minus_verify.txt").read_text()
    assert "kind = linear" in report
    assert "linear_decay = pass" in report


def test_cmd_verify_batch_jobs(tmp_path):
    code = main(["verify", "--config", cfg_path("basic_a34.cfg"),
                 "--config", cfg_path("region1.cfg"),
                 "--out", str(tmp_path), "--jobs", "2"])
    assert code == 0
    assert (tmp_path / "basic-a34_verify.txt").exists()
    assert (tmp_path / "region1_verify.txt").exists()


def test_cmd_oracle(tmp_path):
    code = main(["oracle", "--config", cfg_path("oracle_c1q1.cfg"), "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "oracle-c1q1_oracle.csv").read_text().splitlines()
    assert lines[0] == "k,x_k,product"
    last = lines[-1].split(",")
    assert int(last[0]) == 10 ** 6
    assert abs(float(last[2]) - 1.0) < 0.01  # k x_k -> 1


def test_cmd_classify_single_point(tmp_path):
    p = tmp_path / "single.cfg"
    p.write_text((CONFIGS / "ex412_partition.cfg").read_text().replace(
        "grid = -0.3 0.3 101 -0.2 0.2 101", "grid = 0.0 0.0 1 0.05 0.05 1"))
    assert main(["classify", "--config", str(p), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "ex412-partition_labels.csv").read_text().splitlines()
    assert lines[0] == "x,y,label"
    assert len(lines) == 2
    assert lines[1].endswith("surface1")


def test_cmd_partition_outputs(tmp_path):
    p = tmp_path / "part.cfg"
    p.write_text((CONFIGS / "ex412_partition.cfg").read_text().replace(
        "grid = -0.3 0.3 101 -0.2 0.2 101", "grid = -0.1 0.1 21 -0.1 0.1 21"))
    assert main(["partition", "--config", str(p), "--out", str(tmp_path)]) == 0
    for which in (1, 2):
        lines = (tmp_path / f"ex412-partition_boundary{which}.csv").read_text().splitlines()
        assert lines[0] == "x,y"
        assert len(lines) == 82  # 81 samples, none skipped
        pts = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        assert np.linalg.norm(pts, axis=1).min() < 1e-12
    labels = (tmp_path / "ex412-partition_labels.csv").read_text().splitlines()
    body = [ln.rsplit(",", 1)[1] for ln in labels[1:]]
    assert {"surface1", "surface2", "curve"} <= set(body)


def test_usage_error_exits_one():
    assert main(["simulate"]) == EXIT_CONFIG  # missing --config
    assert main([]) == EXIT_CONFIG


def test_scenario_u0_outside_subspace(tmp_path):
    text = (CONFIGS / "basic_a34.cfg").read_text().replace(
        "u0 = 0.3 0.4 0", "u0 = 0.4 0.3 0")
    p = tmp_path / "off.cfg"
    p.write_text(text)
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 1


def test_cmd_verify_upper_bound_branch(tmp_path):
    # axis start on the full plane decays faster than the bound: verify passes
    code = main(["verify", "--config", cfg_path("special_x.cfg"), "--out", str(tmp_path)])
    assert code == 0
    report = (tmp_path / "special-x_verify.txt").read_text()
    assert "kind = upper-bound" in report
    assert "exponent_bound = pass" in report


def test_solver_failure_exits_two(tmp_path):
    text = (CONFIGS / "basic_a34.cfg").read_text().replace(
        "max_iter = 100", "max_iter = 1")
    p = tmp_path / "starved.cfg"
    p.write_text(text)
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_cmd_verify_tilted_surface_product(tmp_path):
    # the receiving surface is tilted at the origin; the corrected constant
    # must put the limit product inside the default band
    code = main(["verify", "--config", cfg_path("ex413.cfg"), "--out", str(tmp_path)])
    assert code == 0
    report = (tmp_path / "ex413_verify.txt").read_text()
    assert "limit_product = pass" in report
