import json
import math

import numpy as np
import pytest

from phidiv import __version__
from phidiv.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_quantile_single_observation(capsys):
    code, out, _ = run_cli(capsys, "quantile", "--n", "1", "--s", "1", "--alpha", "0.05")
    doc = json.loads(out)
    assert code == 0
    assert doc["result"]["quantile"] == pytest.approx(math.log(40.0), abs=1e-9)
    assert doc["version"] == __version__ and doc["method"] == "exact" and doc["seed"] == 12345
    assert doc["config"]["alpha"] == 0.05


def test_stat_from_file_with_comments(capsys, tmp_path):
    n = 50
    f = tmp_path / "x.txt"
    f.write_text("# plotting positions\n" + "\n".join(str((i - 0.5) / n) for i in range(1, n + 1)) + "\n")
    code, out, _ = run_cli(capsys, "stat", str(f), "--s", "1")
    assert code == 0
    assert json.loads(out)["result"]["n_times_statistic"] < 1.0


def test_pvalue_at_quantile_round_trip(capsys):
    n, s, alpha = 6, 2.0, 0.1
    code, out, _ = run_cli(capsys, "quantile", "--n", str(n), "--s", str(s), "--alpha", str(alpha))
    q = json.loads(out)["result"]["quantile"]
    # a sample whose statistic equals q: one point placed on the band edge
    from phidiv.divergence import invert_in_v

    lo, _ = invert_in_v(s, 1 / n, q)
    x = [lo] + [(i + 0.5) / n for i in range(1, n)]
    code, out, _ = run_cli(capsys, "pvalue", "--data", ",".join(f"{v:.17g}" for v in x), "--s", str(s),
                           "--method", "exact")
    res = json.loads(out)["result"]
    assert res["statistic"] == pytest.approx(q, rel=1e-7)
    assert res["pvalue"] == pytest.approx(alpha, abs=1e-4)


def test_tn_pvalue_uses_small_cache(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PHIDIV_CACHE_DIR", str(tmp_path))
    code, out, _ = run_cli(capsys, "pvalue", "--data", "0.1,0.4,0.45,0.8", "--kind", "tn",
                           "--ad-draws", "2000", "--ad-truncation", "50")
    doc = json.loads(out)
    assert code == 0 and doc["method"] == "monte-carlo"
    assert 0 < doc["result"]["pvalue"] <= 1 and doc["result"]["pvalue_se"] > 0
    assert list(tmp_path.glob("ad_draws_*.npz"))


def test_null_transform(capsys):
    code, out, _ = run_cli(capsys, "stat", "--data=-1.2,0.3,0.8,2.0", "--null", "normal:0,1", "--csv")
    assert code == 0
    header, row = out.strip().splitlines()
    assert "statistic" in header.split(",")


def test_band_csv(capsys, tmp_path):
    path = tmp_path / "band.csv"
    code, out, _ = run_cli(capsys, "band", "--data", "0.1,0.3,0.35,0.9", "--s", "0.5", "--alpha", "0.2",
                           "--out", str(path))
    assert code == 0 and path.read_text().startswith("x_left,x_right,L,U")
    assert json.loads(out)["result"]["band"]["alpha"] == 0.2


def test_simulate(capsys, tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"kind": "band-coverage", "n": 10, "s": [1.0], "reps": 20, "alpha": 0.1}))
    code, out, _ = run_cli(capsys, "simulate", str(plan), "--outdir", str(tmp_path / "out"), "--seed", "4")
    doc = json.loads(out)
    assert code == 0 and doc["seed"] == 4
    assert (tmp_path / "out" / "band-coverage.json").exists()


@pytest.mark.parametrize(
    "argv,expected",
    [
        (["stat", "--data", "0.1,abc"], 2),
        (["stat", "--data", "0.1,1.5"], 2),
        (["quantile", "--n", "5000", "--method", "exact"], 2),
        (["stat", "--bogus"], 1),
        (["frobnicate"], 1),
        (["quantile", "--n", "5", "--alpha", "2"], 1),
        (["stat", "--data", "0.2", "--kind", "hc"], 3),
    ],
)
def test_exit_codes(capsys, argv, expected):
    code, _, _ = run_cli(capsys, *argv)
    assert code == expected


def test_warns_outside_supported_orders(capsys):
    code, _, err = run_cli(capsys, "stat", "--data", "0.2,0.6", "--s", "3")
    assert code == 0 and "outside [-1, 2]" in err


def test_auto_method_switches_to_asymptotic(capsys):
    x = np.random.default_rng(0).random(40)
    code, out, _ = run_cli(capsys, "pvalue", "--data", ",".join(map(str, x)), "--n-max", "20")
    assert code == 0 and json.loads(out)["method"] == "asymptotic"
