import dataclasses
import json

import numpy as np
import pytest

from csvqa import metric
from csvqa.color import ColorNameTable, default_ground_distance
from csvqa.metric import ConfigError, CsvConfig, compute_csv, compute_feature_maps, load_config

from conftest import add_noise, synthetic_image


@pytest.fixture
def ref(rng):
    return synthetic_image(rng, 64, 80)


def test_identity_maps_are_zero(ref):
    maps = compute_feature_maps(ref, ref)
    for name, plane in maps.items():
        assert plane.shape == ref.shape[:2], name
        assert np.all(plane == 0), name
    assert compute_csv(ref, ref).value == 1.0


def test_maps_full_resolution_and_ranges(ref):
    dist = add_noise(ref, 20)
    cfg = CsvConfig()
    maps = compute_feature_maps(ref, dist, cfg)
    for name, plane in maps.items():
        assert plane.shape == ref.shape[:2]
        assert np.all(plane >= 0), name
    assert maps.ciede.max() <= cfg.T
    assert maps.cnd.max() <= 1.0


def test_pooled_grid_40x40(rng, monkeypatch):
    img = rng.uniform(0, 255, (40, 40, 3))
    seen = []
    real = metric.resample

    def spy(p, tw, th, method):
        seen.append(p.shape)
        return real(p, tw, th, method)

    monkeypatch.setattr(metric, "resample", spy)
    compute_feature_maps(img, np.clip(img + 5, 0, 255))
    assert seen == [(2, 2), (2, 2)]


def test_noise_ordering(ref):
    assert compute_csv(ref, add_noise(ref, 5)).value > compute_csv(ref, add_noise(ref, 25)).value


def test_symmetric(ref):
    dist = add_noise(ref, 15)
    for code in (None, "b", "n", "e"):
        cfg = CsvConfig() if code is None else CsvConfig().variant(code)
        assert compute_csv(ref, dist, cfg).value == compute_csv(dist, ref, cfg).value


def test_deterministic(ref):
    dist = add_noise(ref, 15)
    assert compute_csv(ref, dist).value == compute_csv(ref.copy(), dist.copy()).value


def test_score_at_most_one(rng):
    for _ in range(5):
        a, b = rng.uniform(0, 255, (2, 30, 30, 3))
        assert compute_csv(a, b).value <= 1.0


def test_fusion_formula(ref):
    dist = add_noise(ref, 10)
    cfg = CsvConfig()
    out = compute_csv(ref, dist, cfg, keep_maps=True)
    m = out.maps
    fused = m.rgcd * m.sd * (0.9 * m.cnd + 0.1 * m.ciede)
    assert out.value == pytest.approx(1 - np.mean(fused) ** 0.25, abs=1e-15)


def test_euclidean_variant_replaces_color_term(ref):
    dist = add_noise(ref, 10)
    base = compute_feature_maps(ref, dist)
    euc = compute_feature_maps(ref, dist, CsvConfig().variant("e"))
    assert np.array_equal(base.cnd, euc.cnd)
    assert np.array_equal(base.sd, euc.sd)
    assert not np.array_equal(base.ciede, euc.ciede)


def test_dimension_mismatch(ref):
    with pytest.raises(ValueError, match="mismatch"):
        compute_csv(ref, ref[:-2])


# -- configuration ---------------------------------------------------------


def test_default_parameters():
    cfg = CsvConfig()
    assert (cfg.w, cfg.kL, cfg.kC, cfg.kH, cfg.T, cfg.N, cfg.sigma, cfg.A, cfg.P) == (
        20, 1.0, 1.0, 1.0, 20.0, 11, 50.0, 0.9, 4.0)
    assert cfg.log_side == 21
    assert cfg.interp == "bicubic" and cfg.color_mode == "ciede2000"


@pytest.mark.parametrize("bad", [{"A": 1.5}, {"P": 0.5}, {"w": 0}, {"sigma": 0}, {"interp": "lanczos"},
                                 {"color_mode": "rgb"}, {"N": 12}, {"kernel_side": 20}])
def test_invalid_config(bad):
    with pytest.raises(ConfigError):
        CsvConfig(**bad)


def test_config_hash_covers_every_field():
    base = CsvConfig()
    changed = {
        "w": 16, "kL": 2.0, "kC": 2.0, "kH": 2.0, "T": 10.0, "sigma": 10.0, "kernel_side": 9,
        "A": 0.8, "P": 2.0, "interp": "nearest", "color_mode": "euclidean", "eps": 1e-5,
    }
    hashes = {base.config_hash()}
    for key, value in changed.items():
        hashes.add(dataclasses.replace(base, **{key: value}).config_hash())
    assert len(hashes) == len(changed) + 1
    assert {f.name for f in dataclasses.fields(CsvConfig)} - set(changed) == {"N", "table", "ground"}


def test_config_hash_tracks_resource_files(tmp_path):
    g = tmp_path / "ground.txt"
    np.savetxt(g, default_ground_distance())
    cfg = CsvConfig(ground=str(g))
    h1 = cfg.config_hash()
    d = default_ground_distance(similar=0.4)
    np.savetxt(g, d)
    assert cfg.config_hash() != h1 != CsvConfig().config_hash()


def test_load_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"A": 0.8, "interp": "bilinear"}))
    cfg = load_config(path)
    assert cfg.A == 0.8 and cfg.interp == "bilinear" and cfg.w == 20
    path.write_text(json.dumps({"alpha": 1}))
    with pytest.raises(ConfigError, match="unknown"):
        load_config(path)


def test_external_table_used(tmp_path, ref):
    probs = np.full((32768, 11), 1 / 11)
    path = tmp_path / "flat.txt"
    ColorNameTable(probs).save(path)
    maps = compute_feature_maps(ref, add_noise(ref, 30), CsvConfig(table=str(path)))
    assert np.all(maps.cnd == 0)


def test_missing_table_is_config_error(ref):
    with pytest.raises(ConfigError):
        compute_csv(ref, ref, CsvConfig(table="/nonexistent/w2c.txt"))
