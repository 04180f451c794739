import numpy as np
import pytest
import torch

from openfer.errors import IngestionError, ProtocolError, SchemaError
from openfer.ingest import (
    BASIC_EMOTIONS, SINGLE_EMOTIONS, UNKNOWN, Dataset, OpennessSplit, SyntheticSpec, VideoSample,
    apply_split, frame_indices, generate_splits, load_manifest, load_split, merge_datasets,
    min_signature_distance, openness, sample_frames, save_split, synthesize_dataset,
    write_dataset,
)

PAPER_OPENNESS = [
    ((5, 2), 0.15), ((4, 3), 0.24), ((3, 4), 0.35), ((2, 5), 0.47),
    ((8, 3), 0.15), ((6, 5), 0.26), ((5, 6), 0.33), ((3, 8), 0.48),
    ((7, 5), 0.24), ((7, 9), 0.34),
]


# ── openness ──────────────────────────────────────────────────────────────
@pytest.mark.parametrize("ku,expected", PAPER_OPENNESS)
def test_openness_table_values(ku, expected):
    assert openness(*ku) == pytest.approx(expected, abs=0.005)


def test_openness_closed_set_and_domain():
    assert openness(4, 0) == 0.0
    with pytest.raises(ProtocolError):
        openness(0, 3)


def test_openness_monotone():
    for K in range(1, 21):
        vals = [openness(K, U) for U in range(0, 21)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
    for U in range(1, 21):
        vals = [openness(K, U) for K in range(1, 21)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


# ── splits ────────────────────────────────────────────────────────────────
def test_generate_splits_task1_cell():
    splits = generate_splits(7, 5, 5, 42)
    assert len(splits) == 5
    for s in splits:
        assert (s.K, s.U) == (5, 2)
        assert s.openness == pytest.approx(0.15, abs=0.005)
        assert not set(s.known_classes) & set(s.unknown_classes)
    assert len({(s.known_classes, s.unknown_classes) for s in splits}) == 5


def test_generate_splits_deterministic_and_task2_cell():
    assert generate_splits(11, 3, 5, 7) == generate_splits(11, 3, 5, 7)
    for s in generate_splits(11, 3, 5, 7):
        assert (s.K, s.U) == (3, 8)
        assert s.openness == pytest.approx(0.48, abs=0.005)


def test_generate_splits_rejects_bad_counts():
    with pytest.raises(ProtocolError):
        generate_splits(7, 7, 1, 0)
    with pytest.raises(ProtocolError):
        generate_splits(7, 3, 0, 0)


def test_split_rejects_wrong_openness_field():
    with pytest.raises(ProtocolError):
        OpennessSplit((0, 1), (2,), 0, 0.5)
    with pytest.raises(ProtocolError):
        OpennessSplit.of((0, 1), (1, 2), 0)


def test_split_file_round_trip(tmp_path):
    split = generate_splits(7, 4, 1, 3)[0]
    assert load_split(save_split(split, tmp_path / "s.json")) == split


def test_apply_split_known_only_train(small_dataset):
    split = OpennessSplit.of((0, 1, 2, 3, 4), (5, 6), 11)
    train, test = apply_split(small_dataset, split)
    assert set(train.labels) == {0, 1, 2, 3, 4}
    assert set(test.labels) == {0, 1, 2, 3, 4, 5}
    assert test.class_names[-1] == UNKNOWN
    n_unknown = sum(1 for s in small_dataset if s.label in (5, 6))
    assert sum(1 for y in test.labels if y == 5) == n_unknown
    assert len(train) + len(test) == len(small_dataset)
    # no unknown-class sample ever reaches train
    originals = {s.id: s.label for s in small_dataset}
    assert all(originals[s.id] in split.known_classes for s in train)
    # remapping inverts through known_classes
    for s in list(train) + [s for s in test if s.label < 5]:
        assert split.known_classes[s.label] == originals[s.id]


def test_apply_split_deterministic_and_honours_tags(small_dataset):
    split = OpennessSplit.of((2, 0, 1), (3,), 5)
    a = apply_split(small_dataset, split)
    b = apply_split(small_dataset, split)
    assert [s.id for s in a[0]] == [s.id for s in b[0]]

    tagged = Dataset([VideoSample(s.id, s.frames, s.label, tag="test" if i % 2 else "train")
                      for i, s in enumerate(small_dataset)],
                     small_dataset.class_names, small_dataset.frame_shape)
    train, _ = apply_split(tagged, split)
    assert all(s.tag == "train" for s in train)


def test_apply_split_rejects_empty_known_class(small_dataset):
    subset = small_dataset.subset([i for i, s in enumerate(small_dataset) if s.label != 0])
    with pytest.raises(ProtocolError):
        apply_split(subset, OpennessSplit.of((0, 1), (2,), 0))


# ── frames ────────────────────────────────────────────────────────────────
def test_frame_indices_examples():
    assert frame_indices(16, 16) == list(range(16))
    assert frame_indices(1, 8) == [0] * 8
    assert frame_indices(31, 4) == [0, 10, 20, 30]
    assert frame_indices(5, 1) == [0]


def test_sample_frames_pads_with_last():
    frames = torch.arange(3, dtype=torch.float32).view(3, 1, 1, 1).expand(3, 1, 4, 4).clone()
    out = sample_frames(VideoSample("v", frames, 0), 5)
    assert out[:, 0, 0, 0].tolist() == [0, 1, 2, 2, 2]


# ── synthetic ─────────────────────────────────────────────────────────────
def test_synthesize_counts_and_determinism():
    spec = SyntheticSpec(num_classes=7, videos_per_class=10, frames_per_video=8, seed=1)
    a, b = synthesize_dataset(spec), synthesize_dataset(spec)
    assert len(a) == 70
    assert all(s.frames.shape == (8, 3, 64, 64) for s in a)
    assert all(torch.equal(x.frames, y.frames) for x, y in zip(a, b))
    assert list(a.class_names) == list(BASIC_EMOTIONS)
    assert min_signature_distance(spec) > 0


def test_synthetic_nearest_centroid_beats_chance():
    spec = SyntheticSpec(num_classes=7, videos_per_class=10, frames_per_video=4,
                         frame_shape=(3, 32, 32), noise_level=0.0, seed=1)
    ds = synthesize_dataset(spec)
    feats = np.stack([s.frames.mean(0).flatten().numpy() for s in ds])
    labels = np.asarray(ds.labels)
    even = np.arange(len(ds)) % 2 == 0
    centroids = np.stack([feats[even & (labels == k)].mean(0) for k in range(7)])
    d = ((feats[~even, None, :] - centroids[None]) ** 2).sum(-1)
    acc = (d.argmin(1) == labels[~even]).mean()
    assert acc > 1 / 7


def test_class_names_extend_past_single_emotions():
    ds = synthesize_dataset(SyntheticSpec(num_classes=13, videos_per_class=1, frames_per_video=1,
                                          frame_shape=(3, 16, 16)))
    assert list(ds.class_names[:11]) == list(SINGLE_EMOTIONS)
    assert ds.class_names[11:] == ("compound_0", "compound_1")


# ── manifests ─────────────────────────────────────────────────────────────
def test_manifest_round_trip(tmp_path, small_dataset):
    sub = small_dataset.subset(range(3))
    loaded = load_manifest(write_dataset(sub, tmp_path / "ds"))
    assert [s.id for s in loaded] == [s.id for s in sub]
    assert loaded.class_names == sub.class_names
    assert torch.allclose(loaded.samples[0].frames, sub.samples[0].frames, atol=1 / 255)


def _write_manifest(root, rows, classes="anger,happiness"):
    (root / "f1").mkdir(exist_ok=True)
    from PIL import Image
    Image.new("RGB", (8, 8), (10, 20, 30)).save(root / "f1" / "0.png")
    fp = root / "m.tsv"
    fp.write_text(f"#classes: {classes}\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return fp


def test_manifest_two_rows(tmp_path):
    fp = _write_manifest(tmp_path, ["a\tf1\tanger\ttrain", "b\tf1\thappiness\t-"])
    ds = load_manifest(fp)
    assert len(ds) == 2 and len(ds.class_names) == 2
    assert ds.samples[1].tag is None


def test_manifest_errors(tmp_path):
    with pytest.raises(IngestionError):
        load_manifest(tmp_path / "missing.tsv")
    fp = _write_manifest(tmp_path, ["a\tf1\tanger\ttrain", "b\tnope\tanger\ttrain"])
    with pytest.raises(IngestionError) as err:
        load_manifest(fp)
    assert err.value.row == 1
    fp = _write_manifest(tmp_path, ["a\tf1\tjoy\ttrain"])
    with pytest.raises(SchemaError) as err:
        load_manifest(fp)
    assert err.value.row == 0


def test_merge_datasets_unions_classes(small_dataset):
    a = small_dataset.subset([0, 1])
    b = Dataset([VideoSample("x", small_dataset.samples[0].frames, 0)], ["contempt"],
                small_dataset.frame_shape)
    merged = merge_datasets([a, b])
    assert merged.class_names[-1] == "contempt"
    assert merged.samples[-1].label == len(merged.class_names) - 1
    assert len({s.id for s in merged}) == len(merged)
    with pytest.raises(SchemaError):
        merge_datasets([a, Dataset([], ["x"], (3, 8, 8))])


def test_distinct_split_pairs_exhaustive():
    # C(4,2) * C(2,1) = 12 possible divisions
    splits = generate_splits(4, 2, 12, 0, unknown_count=1)
    assert len({(s.known_classes, s.unknown_classes) for s in splits}) == 12
    assert all(s.K == 2 and s.U == 1 for s in splits)
