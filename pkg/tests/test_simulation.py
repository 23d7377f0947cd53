import csv
import json
import math

import numpy as np
import pytest
from scipy import stats

from ordvar.errors import DomainError
from ordvar.estimators import Target, TwoSampleSummary, Variant
from ordvar.losses import ENTROPY, QUADRATIC, SYMMETRIC, linex
from ordvar.numerics import RandomStream
from ordvar.simulation import (
    CSV_COLUMNS, DEFAULT_SEED, ModelParams, SimConfig, load_configs, mc_risk, regime_notes,
    replicate_losses, rri_curve, run_grid, sample_model, write_csv,
)

ALL = (Variant.BAEE, Variant.UMVUE, Variant.STEIN_PLAIN, Variant.STEIN_ONE_MEAN,
       Variant.STEIN_TWO_MEANS, Variant.STEIN_MEAN_DIFF, Variant.BZ_BOUNDARY)


def config(**kw):
    base = dict(p1=6, p2=9, mu1=0.0, mu2=0.0, loss=QUADRATIC, k=2.0, target=Target(1, 2.0),
                variants=ALL, eta_grid=(0.3, 0.8), n_rep=2000, seed=5)
    base.update(kw)
    return SimConfig(**base)


def test_sample_moments():
    params = ModelParams(1.5, -0.5, 0.7, 1.3)
    b = sample_model(params, 6, 9, RandomStream(1, 0), size=10 ** 6)
    assert b.mean1.mean() == pytest.approx(1.5, abs=0.002)
    assert b.mean2.var() == pytest.approx(1.3 ** 2 / 9, rel=0.01)
    assert b.ss1.mean() == pytest.approx(0.49 * 5, rel=0.005)
    assert b.ss2.var() == pytest.approx(2 * 8 * 1.3 ** 4, rel=0.01)
    assert abs(np.corrcoef(b.ss1, b.mean1)[0, 1]) < 0.005


def test_sample_model_single_draw_and_determinism():
    params = ModelParams(0.0, 0.0, 1.0, 1.0)
    a = sample_model(params, 5, 5, RandomStream(3, 2))
    b = sample_model(params, 5, 5, RandomStream(3, 2))
    assert isinstance(a, TwoSampleSummary) and a == b


def test_sample_model_rejects_bad_sigma():
    with pytest.raises(DomainError):
        sample_model(ModelParams(0, 0, 0.0, 1.0), 5, 5, RandomStream(0))


def test_mc_risk_baee_quadratic_exact():
    # risk of c0 S with c0 = 1/(p+1): E(cZ - 1)^2 = 2/(p+1), Z ~ chi2_{p-1}
    rp = mc_risk(Variant.BAEE, ModelParams(0, 0, 0.6, 1.0), Target(1, 2), QUADRATIC, 6, 9,
                 200000, RandomStream(8, 0))
    assert abs(rp.risk - 2 / 7) < 4 * rp.stderr


def test_mc_risk_single_replicate():
    rp = mc_risk(Variant.STEIN_PLAIN, ModelParams(0, 0, 1, 1), Target(2, 2), ENTROPY, 5, 5, 1,
                 RandomStream(0))
    assert rp.n == 1 and rp.stderr == 0.0
    with pytest.raises(DomainError):
        mc_risk(Variant.BAEE, ModelParams(0, 0, 1, 1), Target(1, 2), ENTROPY, 5, 5, 0, RandomStream(0))


def test_baee_rri_is_zero():
    (curve,) = rri_curve(config(variants=(Variant.BAEE,)))
    assert all(p.rri_percent == 0.0 and p.rri_se_percent == 0.0 for p in curve.points)


def test_rri_curve_deterministic():
    c = config(loss=linex(-1))
    a = [cv.points for cv in rri_curve(c)]
    b = [cv.points for cv in rri_curve(c)]
    assert a == b


def test_scale_invariance_of_losses():
    # multiplying every draw and sigma by b leaves the per-replicate losses unchanged
    t, b = Target(1, 2), 3.7
    params = ModelParams(0.4, 0.9, 0.5, 1.0)
    batch = sample_model(params, 6, 9, RandomStream(4, 0), size=5000)
    scaled = type(batch)(batch.mean1 * b, batch.mean2 * b, batch.ss1 * b * b, batch.ss2 * b * b)
    sparams = ModelParams(0.4 * b, 0.9 * b, 0.5 * b, b)
    for v in ALL:
        l0 = replicate_losses(v, params, t, ENTROPY, 6, 9, batch)
        l1 = replicate_losses(v, sparams, t, ENTROPY, 6, 9, scaled)
        assert np.allclose(l0, l1, rtol=1e-9, atol=1e-14)


@pytest.mark.slow
def test_plain_stein_second_component_gain_grows_with_eta():
    eta = tuple(round(0.1 * i, 1) for i in range(1, 11))
    c = config(p1=5, p2=5, target=Target(2, 2.0), variants=(Variant.STEIN_PLAIN,),
               eta_grid=eta, n_rep=60000, seed=DEFAULT_SEED)
    (curve,) = rri_curve(c)
    rri = [p.rri_percent for p in curve.points]
    rho = stats.spearmanr(eta, rri).statistic
    assert rho > 0.9


def test_config_validation():
    with pytest.raises(DomainError):
        config(n_rep=999)
    with pytest.raises(DomainError):
        config(eta_grid=(0.5, 1.2))
    with pytest.raises(DomainError):
        config(variants=(Variant.GEN_BAYES,))
    with pytest.raises(DomainError):
        config(seed=-1)
    with pytest.raises(DomainError):
        config(target=Target(1, 4.0))


def test_config_dict_roundtrip():
    c = config(loss=linex(2))
    assert SimConfig.from_dict(json.loads(json.dumps(c.to_dict()))) == c
    with pytest.raises(DomainError):
        SimConfig.from_dict({**c.to_dict(), "colour": "red"})


def test_load_configs_and_seed_override(tmp_path, monkeypatch):
    path = tmp_path / "cfg.json"
    d = config().to_dict()
    path.write_text(json.dumps(d))
    (one,) = load_configs(path)
    assert one.seed == 5
    path.write_text(json.dumps([d, d]))
    monkeypatch.setenv("ORDVAR_SEED", "77")
    assert [c.seed for c in load_configs(path)] == [77, 77]
    assert load_configs(path, seed_override=3)[0].seed == 3
    path.write_text(json.dumps([d, {**d, "p1": 1}]))
    with pytest.raises(DomainError, match="config #1"):
        load_configs(path)


def test_regime_notes():
    c = config(mu1=1.0, mu2=-1.0, target=Target(1, 2.0))
    notes = regime_notes(c)
    assert any("stein_two_means" in n for n in notes)
    assert any("stein_mean_diff" in n for n in notes)
    assert regime_notes(config(mu1=0.0, mu2=1.0)) == []


def test_run_grid_isolates_failures():
    good = config(variants=(Variant.BAEE, Variant.STEIN_PLAIN))
    bad = config(p1=3, p2=3, loss=SYMMETRIC, variants=(Variant.BAEE,))
    res = run_grid([good, bad, good])
    assert res[0].error is None and res[2].error is None
    assert res[1].error and "DomainError" in res[1].error
    assert res[0].curves[1].points == res[2].curves[1].points


def test_run_grid_rejects_bad_jobs():
    with pytest.raises(DomainError):
        run_grid([config()], jobs=0)


def test_write_csv(tmp_path):
    good = config(variants=(Variant.BAEE, Variant.BZ_BOUNDARY))
    bad = config(p1=3, p2=3, loss=SYMMETRIC, variants=(Variant.BAEE,))
    path = tmp_path / "out.csv"
    write_csv(run_grid([good, bad]), path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ordvar ") and "seed=5" in lines[0]
    assert lines[1].startswith("# config 1 failed")
    rows = list(csv.DictReader(lines[2:]))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 4
    assert {r["variant"] for r in rows} == {"baee", "bz"}
    assert all(int(r["n"]) == 2000 and math.isfinite(float(r["risk"])) for r in rows)
