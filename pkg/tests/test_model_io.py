import json
import zipfile

import numpy as np
import pytest

from agmkit.cascade import AgmConfig, LearnerSpec, fit_cascade
from agmkit.errors import CorruptModelError, UnsupportedVersionError
from agmkit.model_io import FORMAT_VERSION, load_model, save_model
from agmkit.synth import make_gaussian_dataset


def small_cascade(kind, seed=0, version="v2"):
    ds = make_gaussian_dataset([40, 40], 4, 2.2, seed)
    config = AgmConfig(
        version=version,
        fixed_width=2,
        base_model_set=(LearnerSpec(kind, 6),),
        probe_model=LearnerSpec("random-forest", 6),
        val_model=LearnerSpec("random-forest", 6),
        max_layers=3,
        seed=seed,
    )
    return ds, fit_cascade(ds, config)


@pytest.mark.parametrize("kind", ["random-forest", "extra-trees", "gbdt"])
def test_roundtrip_bit_identical(tmp_path, kind):
    ds, model = small_cascade(kind)
    path = tmp_path / "model.agm"
    save_model(model, path)
    back = load_model(path)
    probe = ds.features[:30]
    assert np.array_equal(model.predict_proba(probe), back.predict_proba(probe))
    assert np.array_equal(model.predict(probe), back.predict(probe))
    assert back.config == model.config
    assert back.class_names == model.class_names
    assert back.acc_history == model.acc_history
    assert back.layer_widths == model.layer_widths
    assert [l.kinds for l in back.layers] == [l.kinds for l in model.layers]


def test_roundtrip_of_roundtrip(tmp_path):
    ds, model = small_cascade("random-forest", version="v3")
    p1, p2 = tmp_path / "a.agm", tmp_path / "b.agm"
    save_model(model, p1)
    save_model(load_model(p1), p2)
    probe = ds.features[:10]
    assert np.array_equal(
        load_model(p1).predict_proba(probe), load_model(p2).predict_proba(probe)
    )


def test_truncated_file_is_corruption(tmp_path):
    ds, model = small_cascade("random-forest")
    path = tmp_path / "model.agm"
    save_model(model, path)
    blob = path.read_bytes()
    for cut in (len(blob) // 2, 100, 10):
        bad = tmp_path / f"cut{cut}.agm"
        bad.write_bytes(blob[:cut])
        with pytest.raises(CorruptModelError):
            load_model(bad)


def test_not_an_archive(tmp_path):
    path = tmp_path / "noise.agm"
    path.write_bytes(b"definitely not a model file")
    with pytest.raises(CorruptModelError):
        load_model(path)


def test_wrong_magic(tmp_path):
    path = tmp_path / "other.npz"
    np.savez(path, magic=np.asarray("SOMETHINGELSE"), format_version=np.asarray(1))
    with pytest.raises(CorruptModelError, match="not a cascade"):
        load_model(path)


def test_future_version_rejected(tmp_path):
    ds, model = small_cascade("random-forest")
    path = tmp_path / "model.agm"
    save_model(model, path)
    with np.load(path, allow_pickle=False) as archive:
        entries = {name: archive[name] for name in archive.files}
    entries["format_version"] = np.asarray(FORMAT_VERSION + 1, dtype=np.int64)
    future = tmp_path / "future.agm"
    with open(future, "wb") as fh:
        np.savez(fh, **entries)
    with pytest.raises(UnsupportedVersionError, match="version"):
        load_model(future)


def test_tampered_accuracy_fails_validation(tmp_path):
    ds, model = small_cascade("random-forest")
    path = tmp_path / "model.agm"
    save_model(model, path)
    with np.load(path, allow_pickle=False) as archive:
        entries = {name: archive[name] for name in archive.files}
    manifest = json.loads(str(entries["manifest"]))
    manifest["acc_history"] = [2.0] + manifest["acc_history"][1:]
    entries["manifest"] = np.asarray(json.dumps(manifest))
    bad = tmp_path / "tampered.agm"
    with open(bad, "wb") as fh:
        np.savez(fh, **entries)
    with pytest.raises(CorruptModelError):
        load_model(bad)


def test_missing_entry_is_corruption(tmp_path):
    ds, model = small_cascade("random-forest")
    path = tmp_path / "model.agm"
    save_model(model, path)
    with np.load(path, allow_pickle=False) as archive:
        entries = {name: archive[name] for name in archive.files}
    victim = next(n for n in entries if n.endswith("/feature"))
    del entries[victim]
    bad = tmp_path / "missing.agm"
    with open(bad, "wb") as fh:
        np.savez(fh, **entries)
    with pytest.raises(CorruptModelError):
        load_model(bad)


def test_archive_is_a_zip_with_named_members(tmp_path):
    # documented container shape: a zip of .npy members incl. the header
    ds, model = small_cascade("random-forest")
    path = tmp_path / "model.agm"
    save_model(model, path)
    with zipfile.ZipFile(path) as zf:
        names = set(zf.namelist())
    assert {"magic.npy", "format_version.npy", "manifest.npy"} <= names
