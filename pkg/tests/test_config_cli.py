import json
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvpower.cli import dispatch
from nvpower.config import PAPER_DEFAULTS, parse_config, preset, override
from nvpower.core import Beam
from nvpower.errors import ConfigError

MINIMAL = """\
protocol.kind = variance
protocol.beta = 1e4
noise.kappa = 0.5
nv.rho = 8e23
nv.sigma = 1e5
optics.p_laser = 1 W
optics.i_sat = 1e9
cpw.w = 10 um
"""


def test_unit_suffixes_are_exact():
    cfg = parse_config(MINIMAL)
    assert cfg["cpw.w"] == 1e-5
    assert cfg["cpw.l"] == 1e-3
    cfg = parse_config(MINIMAL + "optics.p_laser = 250 mW\nprotocol.tau = 3 us\ncpw.standoff = 40 nm\n")
    assert cfg["optics.p_laser"] == 0.25
    assert cfg["protocol.tau"] == 3e-6
    assert cfg["cpw.standoff"] == 4e-8


@pytest.mark.parametrize("extra,match", [
    ("noise.kappa = 0.3\n", "noise.kappa"),
    ("cpw.width = 1\n", "unknown key 'cpw.width'"),
    ("cpw.w = 10 mW\n", "unit 'mW' not allowed"),
    ("cpw.w = -1 um\n", "out of range"),
    ("grid.nx = 12.5\n", "integer"),
    ("protocol.kind = ramsey\n", "not one of"),
    ("just words\n", "expected 'key = value'"),
])
def test_bad_values_name_the_key(extra, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(MINIMAL + extra)


def test_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match="line 9"):
        parse_config(MINIMAL + "bogus.key = 1\n")


@pytest.mark.parametrize("drop", ["nv.rho", "optics.i_sat", "cpw.w", "protocol.beta"])
def test_missing_required_key(drop):
    text = "\n".join(l for l in MINIMAL.splitlines() if not l.startswith(drop))
    with pytest.raises(ConfigError, match="missing required key " + drop):
        parse_config(text)


def test_beta_from_contrast_and_time():
    text = MINIMAL.replace("protocol.beta = 1e4\n", "protocol.cmax = 0.03\nprotocol.tau = 10 us\n")
    assert parse_config(text).beta == pytest.approx(8.4e3, rel=1e-12)


def test_loop_beam_needs_radius():
    with pytest.raises(ConfigError, match="loop.r"):
        parse_config(MINIMAL + "optics.beam = loop\n")
    cfg = parse_config(MINIMAL + "optics.beam = loop\nloop.r = 5 um\n")
    assert cfg.beam is Beam.LOOP_AXIAL and cfg.geometry().r_loop == 5e-6


def test_preset_values():
    cfg = preset("paper_defaults")
    assert cfg["protocol.beta"] == 1e4 and cfg["noise.kappa"] == 0.5
    assert cfg["nv.rho"] == 8e23 and cfg["nv.sigma"] == 1e5
    assert cfg["optics.p_laser"] == 1.0 and cfg["optics.i_sat"] == 1e9
    assert cfg["cpw.w"] == 1e-5 and cfg["loop.r"] == 1e-5 and cfg["cpw.z"] == 50.0
    assert cfg["sweep.points"] == 81
    with pytest.raises(ConfigError, match="unknown preset"):
        preset("nope")


def test_override_and_replace():
    cfg = override(preset("paper_defaults"), ["cpw.w=20 um", "protocol.kind=variance"])
    assert cfg["cpw.w"] == 2e-5 and cfg.protocol.kappa_prot == 2
    assert cfg.replace(out__dir="x")["out.dir"] == "x"


@settings(max_examples=60, deadline=None)
@given(w=st.floats(1e-8, 1e-2), p=st.floats(1e-4, 10), kind=st.sampled_from(["slope", "variance"]),
       kn=st.sampled_from([0.0, 0.5]), nx=st.integers(16, 400))
def test_text_round_trip(w, p, kind, kn, nx):
    cfg = preset("paper_defaults").replace(cpw__w=w, optics__p_laser=p, protocol__kind=kind,
                                           noise__kappa=kn, grid__nx=nx)
    assert parse_config(cfg.to_text()) == cfg
    assert parse_config(PAPER_DEFAULTS) == preset("paper_defaults")


# command line

def run(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_prints_units(capsys):
    code, out, _ = run(capsys, "eval", "--preset", "paper_defaults")
    assert code == 0
    assert out.startswith("eta = 1.74145784e-20 W/Hz (regime intermediate)")
    assert "T/Hz^0.5" in out
    code, out, _ = run(capsys, "eval", "--preset", "paper_defaults", "--set", "protocol.kind=variance")
    assert "W/Hz^0.5" in out


def test_usage_and_config_errors_exit_one(capsys):
    assert run(capsys, "eval")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    code, _, err = run(capsys, "eval", "--preset", "paper_defaults", "--set", "noise.kappa=0.3")
    assert code == 1 and "noise.kappa" in err
    assert run(capsys, "scaling", "--preset", "paper_defaults", "--geometry", "loop", "--beam", "parallel")[0] == 1
    assert run(capsys, "eval", "--config", "/nonexistent/cfg.txt")[0] == 1
    assert run(capsys, "eval", "--preset", "paper_defaults", "--threads", "0")[0] == 1


def test_numerical_failure_exits_two(capsys, tmp_path):
    code, _, err = run(capsys, "export-map", "--preset", "paper_defaults", "--set", "grid.nx=17",
                       "--out", str(tmp_path))
    assert code == 2 and "numerical failure" in err


def test_config_file_and_sweep(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(MINIMAL + "sweep.points = 9\n")
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--out", str(tmp_path), "--p-laser", "0.1")
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "param_m,eta,unit,regime,p_laser_w" and len(lines) == 10
    assert all(l.endswith("1.00000000e-01") for l in lines[1:])


def test_scaling_writes_tables(capsys, tmp_path):
    code, out, _ = run(capsys, "scaling", "--preset", "paper_defaults", "--out", str(tmp_path))
    passed, total = out.strip().splitlines()[-1].split()[0].split("/")
    assert code == 0 and passed == total and int(total) >= 8
    assert (tmp_path / "exponents.csv").exists() and (tmp_path / "exponents_L.csv").exists()
    code, out, _ = run(capsys, "scaling", "--preset", "paper_defaults", "--geometry", "loop",
                       "--out", str(tmp_path / "loop"))
    assert code == 0 and out.strip().endswith("8/8 exponent checks pass")


def test_optimize_and_export(capsys, tmp_path):
    code, out, _ = run(capsys, "optimize", "--preset", "paper_defaults", "--out", str(tmp_path))
    assert code == 0 and "c1_opt" in out
    rec = json.loads((tmp_path / "optimize.json").read_text())
    assert rec["c1_opt"] > 0
    code, _, _ = run(capsys, "export-map", "--preset", "paper_defaults", "--set", "optics.beam=loop",
                     "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "field_map_loop.csv").read_text().startswith("rho,z,alpha,masked\n")


def test_report_bundle(capsys, tmp_path):
    code, out, _ = run(capsys, "report", "--preset", "paper_defaults", "--out", str(tmp_path))
    assert code == 0
    names = sorted(os.listdir(tmp_path))
    assert names == sorted(["exponents.csv", "exponents_L.csv", "fig2c.csv", "fig2d.csv", "fig2e.csv",
                            "fig2f.csv", "fig3b.csv", "fig3c.csv", "report.json"])
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["schema"] == 1
    assert rep["section4"]["eta_slope"]["unit"] == "W/Hz"
    assert rep["tables"]["passed"] == rep["tables"]["total"] == 40
    assert set(rep["optimizer"]) >= {"cpw_slope", "cpw_variance", "loop_slope", "loop_variance"}
