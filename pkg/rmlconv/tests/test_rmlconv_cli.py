from rmlconv.cli import main


def test_cli_happy_path(small_archive, tmp_path, capsys):
    path, _ = small_archive
    out = tmp_path / "out.bin"
    rc = main(["--input", str(path), "--output", str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "total frames: 352" in printed
    assert out.exists()


def test_cli_filters(small_archive, tmp_path, capsys):
    path, _ = small_archive
    out = tmp_path / "out.bin"
    rc = main([
        "--input", str(path), "--output", str(out),
        "--classes", "BPSK", "QPSK", "--snrs", "0", "4",
    ])
    assert rc == 0
    assert "total frames: 16" in capsys.readouterr().out


def test_cli_swap_iq_flag(small_archive, tmp_path):
    path, _ = small_archive
    plain, swapped = tmp_path / "p.bin", tmp_path / "s.bin"
    assert main(["--input", str(path), "--output", str(plain)]) == 0
    assert main(["--input", str(path), "--output", str(swapped),
                 "--swap-iq"]) == 0
    assert plain.read_bytes() != swapped.read_bytes()


def test_cli_missing_required_args(capsys):
    assert main(["--input", "only.pkl"]) == 1
    assert "usage error" in capsys.readouterr().err


def test_cli_unknown_class(small_archive, tmp_path, capsys):
    path, _ = small_archive
    rc = main([
        "--input", str(path), "--output", str(tmp_path / "o.bin"),
        "--classes", "LORA",
    ])
    assert rc == 1
    assert "LORA" in capsys.readouterr().err


def test_cli_missing_input_file(tmp_path, capsys):
    rc = main([
        "--input", str(tmp_path / "absent.pkl"),
        "--output", str(tmp_path / "o.bin"),
    ])
    assert rc == 2
    assert "i/o error" in capsys.readouterr().err


def test_cli_corrupt_archive(tmp_path, capsys):
    bad = tmp_path / "bad.pkl"
    bad.write_bytes(b"definitely not a pickle")
    rc = main(["--input", str(bad), "--output", str(tmp_path / "o.bin")])
    assert rc == 2
    assert "i/o error" in capsys.readouterr().err


def test_cli_bad_snr_value(small_archive, tmp_path, capsys):
    path, _ = small_archive
    rc = main([
        "--input", str(path), "--output", str(tmp_path / "o.bin"),
        "--snrs", "six",
    ])
    assert rc == 1
