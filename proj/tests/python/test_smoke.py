import math
import os
import subprocess

import numpy as np
import pytest

import mrmkit


def test_exponents():
    t = mrmkit.lognormal(1.0)
    assert t.m == -0.5
    assert t.zeta(0.5) == pytest.approx(0.625, abs=1e-15)
    assert t.psi(1.0) == 0.0
    assert math.isinf(t.critical_moment())
    a = mrmkit.normalize(0.0, [(math.log(2.0), 1.0)])
    assert a.m == pytest.approx(-0.361038723686365199, abs=1e-14)
    assert abs(a.psi(1.0)) < 1e-14
    assert mrmkit.check_nondegenerate(mrmkit.lognormal(0.5))["nondegenerate"]
    back = mrmkit.triple_from_config(a.to_config())
    assert back.psi(2.0) == pytest.approx(a.psi(2.0), abs=1e-12)


def test_cone():
    assert mrmkit.cone_mass(1.0 / math.e, 1.0) == pytest.approx(2.0)
    assert mrmkit.cone_overlap(0.125, 1.0, 0.5) == pytest.approx(math.log(2.0))
    assert mrmkit.cone_overlap_quadrature(0.1, 1.0, 0.05) == pytest.approx(
        mrmkit.cone_overlap(0.1, 1.0, 0.05), abs=1e-8)


def test_sample_field_arrays():
    f = mrmkit.sample_field(mrmkit.lognormal(0.3), 1 / 64, 1.0, 0.25, 7)
    assert f["method"] == "gaussian-exact"
    x, omega, cum = f["x"], f["omega"], f["cumulative"]
    assert isinstance(omega, np.ndarray)
    assert x.shape == omega.shape == (64,)
    assert cum.shape == (65,)
    assert np.all(np.diff(x) > 0)
    assert np.all(np.diff(cum) > 0)
    np.testing.assert_allclose(f["masses"], np.exp(omega) * (x[1] - x[0]), rtol=1e-12)
    again = mrmkit.sample_field(mrmkit.lognormal(0.3), 1 / 64, 1.0, 0.25, 7)
    np.testing.assert_array_equal(again["omega"], omega)


def test_fractal_and_kpz():
    c = mrmkit.make_cantor(1 / 3, 8)
    assert c.delta0 == pytest.approx(math.log(2) / math.log(3))
    assert len(c.intervals) == 256
    assert mrmkit.box_count(c, 3.0 ** -4) == 16
    t = mrmkit.lognormal(0.3)
    root = mrmkit.kpz_solve(t.zeta, c.delta0)
    assert root == pytest.approx((1.15 - math.sqrt(1.15 ** 2 - 0.6 * c.delta0)) / 0.3, abs=1e-12)
    assert mrmkit.zeta2d(0.7, 2.0) == pytest.approx(4.0)


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        mrmkit.lognormal(-1.0)
    with pytest.raises(ValueError):
        mrmkit.make_cantor(0.9, 4)


def test_run_command(tmp_path):
    assert "kpz-1d" in mrmkit.commands()
    res = mrmkit.run("zeta-table", "[model]\nsigma2 = 1\n[run]\nq = 0, 0.5, 1\n", None, None,
                     str(tmp_path / "z"))
    assert res["exit_code"] == 0
    text = (tmp_path / "z" / "zeta.csv").read_text()
    assert text.splitlines()[0] == "q,psi,zeta"
    assert "0.5,-0.125,0.625" in text
    bad = mrmkit.run("zeta-table", "[model]\nsigma2 = oops\n", None, None, str(tmp_path / "bad"))
    assert bad["exit_code"] == 1
    assert bad["errors"]


def test_seed_matches_core():
    assert mrmkit.derive_seed(1, "replica", 0) == 0x3562CECFF1B68BC2


@pytest.mark.skipif("MRM_CLI" not in os.environ, reason="command line tool path not provided")
def test_cli_roundtrip(tmp_path):
    cfg = tmp_path / "geo.ini"
    cfg.write_text("[run]\nseed = 2\nreplicas = 50\n")
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        proc = subprocess.run([os.environ["MRM_CLI"], "geometry-selftest", "--config", str(cfg),
                               "--out", str(out)], capture_output=True)
        assert proc.returncode == 0
        outs.append((out / "geometry.csv").read_bytes())
    assert outs[0] == outs[1]
    proc = subprocess.run([os.environ["MRM_CLI"], "geometry-selftest", "--config",
                           str(tmp_path / "missing.ini")], capture_output=True)
    assert proc.returncode == 1
