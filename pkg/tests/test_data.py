import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from qmlhealth import data
from qmlhealth.data import TabularDataset
from qmlhealth.errors import (CsvParseError, ImageDecodeError, LayoutError, SchemaError,
                              ValidationError)

PI = math.pi


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def fixture_csv(tmp_path):
    return write(tmp_path / "tiny.csv", "HeartDiseaseorAttack,BMI,Age\n0,25.5,3\n1,31,9\n0,22,1\n")


def test_load_fixture(fixture_csv):
    ds = data.load_csv(fixture_csv)
    np.testing.assert_array_equal(ds.X, [[25.5, 3], [31, 9], [22, 1]])
    np.testing.assert_array_equal(ds.y, [0, 1, 0])
    assert ds.feature_names == ["BMI", "Age"]
    assert ds.class_counts() == (2, 1)


def test_custom_label_column(tmp_path):
    ds = data.load_csv(write(tmp_path / "a.csv", "a,target\n1,1\n2,0\n"), label_column="target")
    np.testing.assert_array_equal(ds.y, [1, 0])


def test_missing_label_column(fixture_csv):
    with pytest.raises(SchemaError, match="Outcome"):
        data.load_csv(fixture_csv, label_column="Outcome")


def test_empty_file(tmp_path):
    with pytest.raises(SchemaError):
        data.load_csv(write(tmp_path / "e.csv", ""))


def test_unparseable_cell_reports_row_and_column(tmp_path):
    p = write(tmp_path / "b.csv", "HeartDiseaseorAttack,BMI\n0,25\n1,abc\n")
    with pytest.raises(CsvParseError) as info:
        data.load_csv(p)
    assert info.value.row == 3 and info.value.column == "BMI"


def test_ragged_row(tmp_path):
    with pytest.raises(CsvParseError):
        data.load_csv(write(tmp_path / "r.csv", "HeartDiseaseorAttack,BMI\n0,25,7\n"))


def test_non_binary_label(tmp_path):
    with pytest.raises(SchemaError):
        data.load_csv(write(tmp_path / "l.csv", "HeartDiseaseorAttack,BMI\n2,25\n"))


@pytest.mark.skipif(not os.environ.get("QMLHEALTH_BRFSS_CSV"), reason="QMLHEALTH_BRFSS_CSV not set")
def test_full_brfss_counts():
    ds = data.load_csv(os.environ["QMLHEALTH_BRFSS_CSV"])
    assert len(ds) == 253_680
    assert ds.class_counts() == (229_787, 23_893)
    sample, rest = data.balanced_sample(ds, 500, seed=42)
    assert len(sample) == 1000


def make_ds(n0, n1, seed=0):
    rng = np.random.default_rng(seed)
    y = np.array([0] * n0 + [1] * n1)
    rng.shuffle(y)
    return TabularDataset(rng.normal(size=(y.size, 3)), y, ["a", "b", "c"])


def test_balanced_sample_zero():
    ds = make_ds(5, 3)
    sample, rest = data.balanced_sample(ds, 0, seed=1)
    assert len(sample) == 0 and len(rest) == len(ds)


def test_balanced_sample_insufficient():
    with pytest.raises(ValidationError, match="5 / 3"):
        data.balanced_sample(make_ds(5, 3), 4, seed=1)


def test_balanced_sample_negative():
    with pytest.raises(ValidationError):
        data.balanced_sample(make_ds(5, 3), -1, seed=1)


def test_scaler_endpoints_and_clip():
    sc = data.fit_scaler(np.array([[0.0, 4.0], [10.0, 4.0]]))
    out = sc.transform(np.array([[10.0, 4.0], [0.0, 9.0], [15.0, -1.0], [5.0, 4.0]]))
    np.testing.assert_allclose(out[:, 0], [PI, 0, PI, PI / 2])
    np.testing.assert_array_equal(out[:, 1], [PI / 2] * 4)


def test_scaler_empty():
    with pytest.raises(ValidationError):
        data.fit_scaler(np.zeros((0, 3)))


def test_apply_scaler_keeps_labels(fixture_csv):
    ds = data.load_csv(fixture_csv)
    scaled = data.apply_scaler(data.fit_scaler(ds), ds)
    np.testing.assert_array_equal(scaled.y, ds.y)
    assert scaled.X.min() == 0 and scaled.X.max() == PI


def test_dataset_validation():
    with pytest.raises(ValidationError):
        TabularDataset(np.zeros((2, 2)), [0, 1, 1], ["a", "b"])
    with pytest.raises(ValidationError):
        TabularDataset(np.zeros((2, 2)), [0, 3], ["a", "b"])


# --- images ---------------------------------------------------------------

def save_png(path, array, mode=None):
    path.parent.mkdir(parents=True, exist_ok=True)
    img = Image.fromarray(array)
    if mode:
        img = img.convert(mode)
    img.save(path)


def make_tree(root, counts):
    """counts: {split: {class: n}} of small random RGB PNGs."""
    rng = np.random.default_rng(0)
    for split, per_class in counts.items():
        for name, n in per_class.items():
            for k in range(n):
                save_png(root / split / name / f"{k}.png",
                         rng.integers(0, 256, size=(40, 36, 3), dtype=np.uint8))
    return root


def test_mid_gray_stays_flat(tmp_path):
    p = tmp_path / "g.png"
    save_png(p, np.full((97, 61), 128, dtype=np.uint8))
    out = data.load_image_file(p, 28)
    assert out.shape == (28, 28)
    assert np.ptp(out) < 1e-6
    assert out[0, 0] == pytest.approx(128 / 255, abs=1e-6)


def test_gray_is_unweighted_channel_mean():
    img = Image.fromarray(np.array([[[255, 0, 0], [0, 0, 255]]], dtype=np.uint8))
    np.testing.assert_allclose(data.image_to_gray(img), [[1 / 3, 1 / 3]])


def test_box_downsample_averages_blocks():
    g = np.kron(np.array([[0.0, 1.0], [0.5, 0.25]]), np.ones((3, 3)))
    np.testing.assert_allclose(data.box_downsample(g, 2), [[0, 1], [0.5, 0.25]], atol=1e-6)


def test_load_images_caps_and_labels(tmp_path):
    root = make_tree(tmp_path, {"train": {"NORMAL": 6, "COVID-19": 4}, "test": {"NORMAL": 3, "COVID-19": 2}})
    train, test = data.load_images(root, resolution=8, train_cap=5, test_cap=100, seed=1)
    assert train.class_names == ("COVID-19", "NORMAL")
    assert len(train) == 5 and np.bincount(train.labels).tolist() == [2, 3]
    assert len(test) == 5
    assert train.images.shape == (5, 8, 8)
    assert train.images.min() >= 0 and train.images.max() <= 1
    again, _ = data.load_images(root, resolution=8, train_cap=5, seed=1)
    assert again.paths == train.paths
    np.testing.assert_array_equal(again.images, train.images)


def test_proportional_counts():
    assert data._proportional_counts([6, 4], 5) == [3, 2]
    assert data._proportional_counts([130, 51], 100) == [72, 28]
    assert data._proportional_counts([3, 2], 50) == [3, 2]


def test_missing_split(tmp_path):
    root = make_tree(tmp_path, {"train": {"a": 1, "b": 1}})
    with pytest.raises(LayoutError, match="test"):
        data.load_images(root, 8)


def test_wrong_class_count(tmp_path):
    root = make_tree(tmp_path, {"train": {"a": 1}, "test": {"a": 1}})
    with pytest.raises(LayoutError):
        data.load_images(root, 8)


def test_undecodable_file_named(tmp_path):
    root = make_tree(tmp_path, {"train": {"a": 1, "b": 1}, "test": {"a": 1, "b": 1}})
    bad = root / "train" / "b" / "broken.png"
    bad.write_bytes(b"not an image")
    with pytest.raises(ImageDecodeError, match="broken.png"):
        data.load_images(root, 8)


def test_synthetic_roundtrip_through_disk(tmp_path):
    train, test = data.synthetic_blobs(n_train=6, n_test=4, resolution=12, seed=7)
    data.write_image_tree(tmp_path, train, test)
    tr2, te2 = data.load_images(tmp_path, 12)
    np.testing.assert_array_equal(np.sort(tr2.labels), np.sort(train.labels))
    assert tr2.class_names == train.class_names
    assert np.abs(np.sort(tr2.images.ravel()) - np.sort(train.images.ravel())).max() <= 0.5 / 255 + 1e-9


def test_synthetic_classes_differ_at_center():
    train, _ = data.synthetic_blobs()
    c = train.images[:, 12:16, 12:16].mean(axis=(1, 2))
    assert c[train.labels == 1].min() > c[train.labels == 0].max()


# --- properties -----------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(n0=st.integers(0, 30), n1=st.integers(0, 30), k=st.integers(0, 30), seed=st.integers(0, 2**32 - 1))
def test_balanced_sample_partition(n0, n1, k, seed):
    ds = make_ds(n0, n1, seed % 1000)
    if k > min(n0, n1):
        with pytest.raises(ValidationError):
            data.balanced_sample(ds, k, seed)
        return
    sample, rest = data.balanced_sample(ds, k, seed)
    assert sample.class_counts() == (k, k)
    ids = np.concatenate([sample.row_ids, rest.row_ids])
    assert sorted(ids.tolist()) == list(range(len(ds)))
    again, _ = data.balanced_sample(ds, k, seed)
    np.testing.assert_array_equal(again.row_ids, sample.row_ids)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_scaler_range(seed, scale):
    rng = np.random.default_rng(seed)
    train = rng.normal(scale=scale, size=(20, 4))
    train[:, 3] = 1.0
    out = data.fit_scaler(train).transform(rng.normal(scale=3 * scale, size=(30, 4)))
    assert out.min() >= 0 and out.max() <= PI
    np.testing.assert_array_equal(out[:, 3], PI / 2)
