import json
import math
import pathlib

import pytest

kr = pytest.importorskip("kraichnan")

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_version():
    assert kr.__version__


def test_gamma_matches_math():
    for x in (0.5, 1.7, 4.2):
        assert abs(kr.gamma(x).real - math.gamma(x)) < 1e-13 * math.gamma(x)


def test_k_constant_routes_agree():
    p = kr.ModelParams(d=2, alpha=0.5, s=0.75)
    kg = kr.k_constant_gamma(p)
    assert abs(kr.k_constant_integral(p) / kg - 1) < 1e-6
    assert abs(kr.k_constant_riesz(p) / kg - 1) < 1e-4


def test_k_closed_form_against_mpmath():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 25
    d, a, s = 3, mp.mpf("0.25"), mp.mpf("0.75")
    k = -mp.mpf(2) ** (-mp.mpf(d) / 2 - 1) * (d - 1) * mp.gamma(s + a) * mp.gamma(-a) * mp.gamma((d - 2 * s + 2) / 2) / (
        mp.gamma(s) * mp.gamma((d + 2 * a + 2) / 2) * mp.gamma((d - 2 * s + 2 - 2 * a) / 2))
    assert abs(kr.k_constant_gamma(kr.ModelParams(d=3, alpha=0.25, s=0.75)) / float(k) - 1) < 1e-12


def test_parameter_ranges_raise():
    with pytest.raises(RuntimeError):
        kr.ModelParams(d=2, alpha=1.5, s=0.5)
    with pytest.raises(RuntimeError):
        kr.ModelParams(d=2, alpha=0.5, s=1.0)


def test_parseval_equals_direct():
    p = kr.ModelParams(d=2, alpha=0.5, s=0.75)
    for lam in (2.0, 20.0):
        c = kr.parseval_contour(lam, p, 1.25)
        q = kr.J_direct(lam, p)
        assert abs(c / q - 1) < 1e-6


def test_flux_sign_and_asymptote():
    p = kr.ModelParams(d=2, alpha=0.5, s=0.75)
    k = kr.k_constant_gamma(p)
    xi = 1e3
    f = kr.flux_F(xi, p)
    assert f < 0
    assert abs(f / (-k * xi ** (2 - 2 * 0.5 - 2 * 0.75)) - 1) < 0.05


def test_selfsimilar_evolution_balance():
    p = kr.ModelParams(d=2, alpha=0.5, s=0.75)
    tr = kr.evolve_gaussian(p, nodes=128, t_final=0.5, dt=0.25, trackers=[0.75, 0.25], selfsimilar=True)
    assert tr.max_balance_gap < 1e-12
    assert all(b <= a for a, b in zip(tr.mass, tr.mass[1:]))
    k = kr.k_constant_gamma(p)
    ratio = -tr.norm_rates[0][-1] / tr.norms[1][-1] / k
    assert abs(ratio - 1) < 0.05


def test_lattice_rate_check_small():
    fracs = kr.lattice_rate_check(n_max=6, n_samples=100, t_final=0.01, seed=3)
    assert len(fracs) == 2
    assert min(fracs) > 0.85


def test_config_resolution():
    r = kr.resolve_config({"experiment": "k-constants", "d": 2, "alpha": 0.5, "s": 0.75})
    assert r["seed"] == 0
    with pytest.raises(RuntimeError, match=r"alpha must lie in \(0,1\)"):
        kr.resolve_config({"experiment": "k-constants", "d": 2, "alpha": 1.5, "s": 0.5})


def test_shipped_configs_match_schema():
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((ROOT / "schema" / "config.schema.json").read_text())
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        jsonschema.validate(json.loads(cfg.read_text()), schema)
        kr.resolve_config(json.loads(cfg.read_text()))
