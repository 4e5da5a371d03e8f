import pickle

import numpy as np
import numpy.testing as npt
import pytest

from amcnet.dataio import read_dataset
from rmlconv.convert import (
    ArchiveError,
    CLASS_NAMES,
    ConvertSpec,
    FilterError,
    convert,
    load_archive,
)

from archtools import dump_archive


def test_default_selection_counts(small_archive, tmp_path):
    path, _ = small_archive
    out = tmp_path / "out.bin"
    total = convert(ConvertSpec(input=str(path), output=str(out)))
    # 8 digital classes x 11 SNRs x 4 frames
    assert total == 8 * 11 * 4


def test_output_loads_via_primary_reader(small_archive, tmp_path):
    path, _ = small_archive
    out = tmp_path / "out.bin"
    convert(ConvertSpec(input=str(path), output=str(out)))
    ds = read_dataset(out)
    assert tuple(ds.class_names) == CLASS_NAMES
    assert len(ds.frames) == 352
    assert ds.frames[0].samples.shape == (2, 128)
    assert ds.frames[0].samples.dtype == np.float32


def test_frame_order_and_label_remap(small_archive, tmp_path):
    path, data = small_archive
    out = tmp_path / "out.bin"
    convert(ConvertSpec(input=str(path), output=str(out)))
    ds = read_dataset(out)
    seen = [(f.class_id, f.snr_db) for f in ds.frames]
    expected = [
        (cid, snr)
        for cid in range(8)
        for snr in range(-6, 16, 2)
        for _ in range(4)
    ]
    assert seen == expected
    # frames within a cell keep their archive index order
    cell = data[("BPSK", 0)]
    got = [f.samples for f in ds.frames
           if f.class_id == 1 and f.snr_db == 0]
    for i in range(4):
        npt.assert_array_equal(got[i], cell[i])


def test_values_pass_through_bit_exact(small_archive, tmp_path):
    path, data = small_archive
    out = tmp_path / "out.bin"
    convert(ConvertSpec(
        input=str(path), output=str(out), classes=("QAM64",), snrs=(8,)
    ))
    ds = read_dataset(out)
    assert len(ds.frames) == 4
    for i, frame in enumerate(ds.frames):
        assert frame.class_id == 6
        npt.assert_array_equal(frame.samples, data[("QAM64", 8)][i])


def test_single_cell_count(small_archive, tmp_path):
    path, _ = small_archive
    out = tmp_path / "o.bin"
    total = convert(ConvertSpec(
        input=str(path), output=str(out), classes=["QPSK"], snrs=[10]
    ))
    assert total == 4


def test_convert_twice_byte_identical(small_archive, tmp_path):
    path, _ = small_archive
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    convert(ConvertSpec(input=str(path), output=str(a)))
    convert(ConvertSpec(input=str(path), output=str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_swap_iq_swaps_rows(small_archive, tmp_path):
    path, data = small_archive
    out = tmp_path / "s.bin"
    convert(ConvertSpec(
        input=str(path), output=str(out),
        classes=("BPSK",), snrs=(0,), swap_iq=True,
    ))
    frame = read_dataset(out).frames[0]
    npt.assert_array_equal(frame.samples[0], data[("BPSK", 0)][0][1])
    npt.assert_array_equal(frame.samples[1], data[("BPSK", 0)][0][0])


def test_unknown_label_rejected(tmp_path):
    with pytest.raises(FilterError, match="WBFM"):
        ConvertSpec(input="x", output="y", classes=("BPSK", "WBFM"))


def test_empty_filters_rejected():
    with pytest.raises(FilterError, match="nothing"):
        ConvertSpec(input="x", output="y", classes=())
    with pytest.raises(FilterError, match="nothing"):
        ConvertSpec(input="x", output="y", snrs=())


def test_missing_snr_in_archive(small_archive, tmp_path):
    path, _ = small_archive
    with pytest.raises(FilterError, match="snr"):
        convert(ConvertSpec(
            input=str(path), output=str(tmp_path / "o.bin"), snrs=(7,)
        ))


def test_missing_modulation_in_archive(tmp_path):
    data = {("BPSK", 0): np.zeros((2, 2, 128), np.float32)}
    path = tmp_path / "partial.pkl"
    dump_archive(data, path)
    with pytest.raises(FilterError, match="QPSK"):
        convert(ConvertSpec(
            input=str(path), output=str(tmp_path / "o.bin"),
            classes=("BPSK", "QPSK"), snrs=(0,),
        ))


def test_not_a_pickle(tmp_path):
    path = tmp_path / "garbage.pkl"
    path.write_bytes(b"\x00\x01\x02 not pickle data")
    with pytest.raises(ArchiveError, match="pickle"):
        load_archive(path)


def test_wrong_root_type(tmp_path):
    path = tmp_path / "list.pkl"
    with open(path, "wb") as fh:
        pickle.dump([1, 2, 3], fh, protocol=2)
    with pytest.raises(ArchiveError, match="dict"):
        load_archive(path)


def test_bad_key_shape(tmp_path):
    path = tmp_path / "badkey.pkl"
    dump_archive({"BPSK": np.zeros((1, 2, 128), np.float32)}, path)
    with pytest.raises(ArchiveError, match="key"):
        load_archive(path)


def test_bad_frame_shape(tmp_path):
    path = tmp_path / "badshape.pkl"
    dump_archive({("BPSK", 0): np.zeros((5, 2, 64), np.float32)}, path)
    with pytest.raises(ArchiveError, match="128"):
        load_archive(path)


def test_numpy_integer_snr_keys_normalized(tmp_path):
    data = {("GFSK", np.int64(-2)): np.ones((3, 2, 128), np.float32)}
    path = tmp_path / "npkeys.pkl"
    dump_archive(data, path)
    archive = load_archive(path)
    assert ("GFSK", -2) in archive
    assert isinstance(list(archive)[0][1], int)


# ------------------------------------------------- full-size conversion


def test_full_archive_default_conversion(full_archive, tmp_path):
    path, data = full_archive
    out = tmp_path / "rml.bin"
    total = convert(ConvertSpec(input=str(path), output=str(out)))
    assert total == 88000
    ds = read_dataset(out)
    assert len(ds.frames) == 88000
    assert tuple(ds.class_names) == CLASS_NAMES
    # pinned spot-check: QAM16 (ordinal 5) at 6 dB, archive index 3 lands
    # at 5*11*1000 + 6*1000 + 3
    frame = ds.frames[61003]
    assert frame.class_id == 5 and frame.snr_db == 6
    npt.assert_array_equal(frame.samples, data[("QAM16", 6)][3])
