import hashlib
import os
import time

import numpy as np
import pytest

from topocloud.features import (FULL57, MN40, FeatureFileError, FeaturizationError, FiltrationBank,
                                LabeledDataset, featurize_cloud, featurize_dataset, featurize_image,
                                get_bank, read_features, read_manifest, write_features)
from topocloud.filtration import height_directions
from topocloud.pc_io import PointCloud, save_xyz
from topocloud.synthetic import make_shape
from topocloud.voxelizer import BinaryImage3D, save_binary_image, voxelize

SMALL = FiltrationBank.from_strings("small", ["height(0,0,1)", "radial@c14", "density(r=1.0)", "erosion"])


def test_bank_lengths():
    assert FULL57.feature_length == 2052 and len(FULL57.specs) == 57
    assert MN40.feature_length == 1728 and len(MN40.specs) == 48


def test_bank_order():
    s = MN40.spec_strings
    assert s[:26] == ["height({},{},{})".format(*d) for d in height_directions()]
    assert s[26:44] == [f"radial@c{i}" for i in range(1, 19)]
    assert s[44:] == ["density(r=1.0)", "dilation", "erosion", "signed_distance"]
    assert FULL57.spec_strings[26:53] == [f"radial@c{i}" for i in range(1, 28)]


def test_bank_hash():
    expected = hashlib.sha256("\n".join(MN40.spec_strings).encode()).hexdigest()[:16]
    assert MN40.hash == expected
    assert FiltrationBank.from_strings("x", MN40.spec_strings).hash == MN40.hash
    assert MN40.hash != FULL57.hash


def test_get_bank():
    assert get_bank("mn40") is MN40
    assert get_bank(["erosion", "dilation"]).feature_length == 72
    with pytest.raises(ValueError):
        get_bank("nope")


@pytest.fixture(scope="module")
def cloud():
    return make_shape("torus", 1024, seed=5)


def test_permutation_gives_identical_vector(cloud):
    perm = np.random.default_rng(0).permutation(len(cloud.points))
    a = featurize_cloud(cloud, 0.05, MN40).values
    b = featurize_cloud(cloud.with_points(cloud.points[perm]), 0.05, MN40).values
    assert a.shape == (1728,)
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("t", [(3.25, -1.0, 7.5), (1e-3, 0.123456, -42.0)])
def test_translation_gives_identical_vector(cloud, t):
    a = featurize_cloud(cloud, 0.05, SMALL).values
    b = featurize_cloud(cloud.with_points(cloud.points + np.array(t)), 0.05, SMALL).values
    assert a.tobytes() == b.tobytes()


def test_drop_essential_changes_h0_only(cloud):
    bank = FiltrationBank.from_strings("h", ["height(0,0,1)"])
    a = featurize_cloud(cloud, 0.05, bank).values.reshape(12, 3)
    b = featurize_image(voxelize(cloud, 0.05), bank, drop_essential=True).reshape(12, 3)
    np.testing.assert_array_equal(a[:, 1:], b[:, 1:])
    assert not np.array_equal(a[:, 0], b[:, 0])


def test_empty_image_rejected():
    with pytest.raises(FeaturizationError):
        featurize_image(BinaryImage3D(np.zeros((2, 2, 2), bool)), SMALL)


def clouds3():
    return [make_shape(k, 300, seed=i) for i, k in enumerate(["sphere", "torus", "two_balls"])]


def test_dataset_order_and_workers():
    items = [(c, c.label) for c in clouds3()]
    one = featurize_dataset(items, workers=1, bank=SMALL)
    many = featurize_dataset(items, workers=8, bank=SMALL)
    assert one.labels == ["sphere", "torus", "two_balls"]
    assert one.equals(many)
    for (c, _), row in zip(items, one.X):
        np.testing.assert_array_equal(row, featurize_cloud(c, 0.05, SMALL).values)


def test_dataset_records_failures(tmp_path):
    cs = clouds3()
    paths = []
    for i, c in enumerate(cs):
        p = tmp_path / f"c{i}.xyz"
        save_xyz(c, p)
        paths.append(str(p))
    (tmp_path / "c1.xyz").write_text("0 0 nan\n")
    ds = featurize_dataset([(p, c.label) for p, c in zip(paths, cs)], bank=SMALL)
    assert ds.labels == ["sphere", "two_balls"]
    assert len(ds.failures) == 1 and "c1.xyz" in ds.failures[0][0]


def test_all_failed(tmp_path):
    with pytest.raises(FeaturizationError):
        featurize_dataset([(str(tmp_path / "missing.xyz"), "a")], bank=SMALL)


def test_tbv_and_mesh_inputs(tmp_path):
    c = clouds3()[0]
    save_binary_image(voxelize(c, 0.05), tmp_path / "a.tbv")
    (tmp_path / "t.off").write_text("OFF\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
                                    "3 0 1 2\n3 0 1 3\n3 0 2 3\n3 1 2 3\n")
    ds = featurize_dataset([(str(tmp_path / "a.tbv"), "s"), (str(tmp_path / "t.off"), "t")],
                           bank=SMALL, voxel_size=0.1, mesh_points=500)
    np.testing.assert_array_equal(ds.X[0], featurize_cloud(c, 0.05, SMALL).values)
    assert ds.failures == []


def test_feature_file_roundtrip_and_bytes(tmp_path):
    ds = featurize_dataset([(c, c.label) for c in clouds3()], bank=SMALL, config={"voxel_size": 0.05})
    write_features(ds, tmp_path / "a.txt")
    write_features(ds, tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    back = read_features(tmp_path / "a.txt")
    assert back.equals(ds)
    assert back.specs == ds.specs and back.config == {"voxel_size": 0.05}
    head = (tmp_path / "a.txt").read_text().splitlines()[:3]
    assert head == ["#tacofeat v1", f"#bank small {SMALL.hash}", "#dim 144"]


def small_file(tmp_path, rows="a,1,2\n", dim=2, bank="custom 0123456789abcdef", magic="#tacofeat v1"):
    p = tmp_path / "f.txt"
    p.write_text(f"{magic}\n#bank {bank}\n#dim {dim}\n{rows}")
    return p


def test_wrong_magic(tmp_path):
    with pytest.raises(FeatureFileError):
        read_features(small_file(tmp_path, magic="#other v1"))


def test_hash_mismatch_warns(tmp_path):
    with pytest.warns(UserWarning, match="differs"):
        ds = read_features(small_file(tmp_path), expected_bank_hash="ffffffffffffffff")
    np.testing.assert_array_equal(ds.X, [[1, 2]])


def test_version_mismatch_warns(tmp_path):
    with pytest.warns(UserWarning, match="version"):
        read_features(small_file(tmp_path, magic="#tacofeat v2"))


@pytest.mark.parametrize("rows", ["a,1\n", "a,1,x\n", "a,1,nan\n"])
def test_corrupt_payload(tmp_path, rows):
    with pytest.raises(FeatureFileError):
        read_features(small_file(tmp_path, rows=rows))


def test_labels_validated():
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((1, 2)), ["a,b"], "x", "y")


def test_manifest(tmp_path):
    (tmp_path / "sub").mkdir()
    m = tmp_path / "sub" / "m.csv"
    m.write_text("path,label\n# comment\na.xyz, cat\n/abs/b.xyz,dog\n")
    assert read_manifest(m) == [(str(tmp_path / "sub" / "a.xyz"), "cat"), ("/abs/b.xyz", "dog")]
    m.write_text("a.xyz\n")
    with pytest.raises(ValueError):
        read_manifest(m)


@pytest.mark.skipif((os.cpu_count() or 1) < 4, reason="throughput scaling needs at least 4 CPUs")
def test_throughput_scales_with_workers():
    items = [(make_shape("torus", 1024, seed=i), "t") for i in range(32)]
    featurize_dataset(items[:2], bank=MN40)
    t0 = time.perf_counter()
    featurize_dataset(items, workers=1, bank=MN40)
    serial = time.perf_counter() - t0
    t0 = time.perf_counter()
    featurize_dataset(items, workers=4, bank=MN40)
    assert serial / (time.perf_counter() - t0) >= 2.0
