import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from colorpack.cli import main
from colorpack.codec import Package, VideoMeta, bandwidth_stats
from colorpack.videoio import read_video, write_video

from .conftest import make_shot_video


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def raw_video(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "in.rgb"
    write_video(path, make_shot_video(frames_per_shot=10, size=16))
    return path


@pytest.mark.parametrize(
    "args, saved, pct",
    [
        (("256", "256", "60", "30"), "195.00", "57.78"),
        (("256", "256", "900", "30"), "3345.00", "66.07"),
        (("1280", "720", "900", "45"), "47415.94", "66.60"),
    ],
)
def test_stats_rows(capsys, args, saved, pct):
    w, h, dur, model = args
    code, out, _ = run(capsys, "stats", "--width", w, "--height", h, "--duration", dur, "--model-size", model)
    assert code == 0
    (row,) = rows(out)
    assert row["saved_mib"] == saved and row["percent_saved"] == pct


def test_stats_third_row_in_gib(capsys):
    _, out, _ = run(capsys, "stats", "--width", "1280", "--height", "720", "--duration", "900", "--model-size", "45")
    assert rows(out)[0]["saved_gib"] == "46.30"


def test_keyframes_listing(capsys, caplog, raw_video, tmp_path):
    table = tmp_path / "t.csv"
    code, out, err = run(
        capsys, "keyframes", "--input", str(raw_video), "--width", "16", "--height", "16",
        "--x-step", "5", "--table", str(table),
    )  # fmt: skip
    assert code == 0
    assert out.split() == ["index", "0", "5", "10", "15", "20", "25"]
    assert "3 clusters" in caplog.text
    diag = rows(table.read_text())
    assert len(diag) == 30 and set(diag[0]) == {"frame", "distance", "cluster"}


def test_keyframes_single_shot(capsys, tmp_path):
    frame = np.full((8, 8, 3), 77, np.uint8)
    write_video(tmp_path / "one", [frame] * 90)
    _, out, _ = run(capsys, "keyframes", "--input", str(tmp_path / "one"))
    assert out.split()[1:] == ["0", "30", "60"]
    _, out, _ = run(capsys, "keyframes", "--input", str(tmp_path / "one"), "--x-step", "1")
    assert out.split()[1:] == [str(i) for i in range(90)]


def test_keyframes_errors(capsys, tmp_path):
    code, out, err = run(capsys, "keyframes", "--input", str(tmp_path / "nothing.rgb"), "--width", "4", "--height", "4")
    assert code != 0 and "error" in err and out == ""
    (tmp_path / "empty").mkdir()
    code, _, err = run(capsys, "keyframes", "--input", str(tmp_path / "empty"))
    assert code != 0


def test_bad_flags_exit_nonzero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["keyframes", "--input", "x", "--x-step", "0"])
    assert exc.value.code != 0
    with pytest.raises(SystemExit) as exc:
        main(["stats", "--width", "256"])
    assert exc.value.code != 0


def test_encode_rejects_train_size(capsys, raw_video, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["encode", "--input", str(raw_video), "--width", "16", "--height", "16",
              "--output", str(tmp_path / "p.cpk"), "--train-size", "20"])  # fmt: skip
    assert exc.value.code != 0
    assert "multiple of 8" in capsys.readouterr().err


def encode_args(raw_video, out):
    return [
        "encode", "--input", str(raw_video), "--width", "16", "--height", "16",
        "--output", str(out), "--x-step", "5", "--epochs", "2", "--batch", "4",
        "--train-size", "16", "--seed", "9",
    ]  # fmt: skip


def test_encode_decode_eval(capsys, raw_video, tmp_path):
    pkg_path = tmp_path / "p.cpk"
    code, out, _ = run(capsys, *encode_args(raw_video, pkg_path))
    assert code == 0
    (report,) = rows(out)
    package = Package.read(pkg_path)
    expected = bandwidth_stats(VideoMeta(16, 16, 30), len(package.model_bytes)).as_row()
    assert {k: report[k] for k in expected} == expected
    assert int(report["file_bytes"]) == pkg_path.stat().st_size
    assert package.keyframes == [0, 5, 10, 15, 20, 25]

    again = tmp_path / "q.cpk"
    run(capsys, *encode_args(raw_video, again))
    assert again.read_bytes() == pkg_path.read_bytes()

    code, _, _ = run(capsys, "decode", "--input", str(pkg_path), "--output", str(tmp_path / "dec.rgb"))
    assert code == 0
    decoded = read_video(tmp_path / "dec.rgb", 16, 16)
    assert len(decoded) == 30

    code, _, _ = run(capsys, "decode", "--input", str(pkg_path), "--output", str(tmp_path / "frames"))
    assert code == 0 and len(read_video(tmp_path / "frames")) == 30

    code, out, _ = run(
        capsys, "eval", "--input", str(tmp_path / "dec.rgb"), "--reference", str(raw_video),
        "--width", "16", "--height", "16",
    )  # fmt: skip
    assert code == 0
    table = rows(out)
    assert len(table) == 31 and table[-1]["frame"] == "mean"
    assert all(float(r["psnr"]) > 0 for r in table)


def test_decode_corrupt(capsys, tmp_path):
    (tmp_path / "junk.cpk").write_bytes(b"CPK1" + bytes(40))
    code, _, err = run(capsys, "decode", "--input", str(tmp_path / "junk.cpk"), "--output", str(tmp_path / "o.rgb"))
    assert code != 0 and "error" in err


def test_eval_cases(capsys, raw_video, tmp_path):
    _, out, _ = run(capsys, "eval", "--input", str(raw_video), "--reference", str(raw_video),
                    "--width", "16", "--height", "16")  # fmt: skip
    assert rows(out)[-1]["psnr"] == "inf"

    frames = read_video(raw_video, 16, 16)
    write_video(tmp_path / "plus1.rgb", [np.minimum(f.astype(int) + 1, 255).astype(np.uint8) for f in frames])
    _, out, _ = run(capsys, "eval", "--input", str(tmp_path / "plus1.rgb"), "--reference", str(raw_video),
                    "--width", "16", "--height", "16")  # fmt: skip
    # no sample in the clip sits at 255, so every channel moves by exactly one
    assert float(rows(out)[-1]["psnr"]) == pytest.approx(48.13, abs=0.01)

    write_video(tmp_path / "short.rgb", frames[:5])
    code, _, err = run(capsys, "eval", "--input", str(tmp_path / "short.rgb"), "--reference", str(raw_video),
                       "--width", "16", "--height", "16")  # fmt: skip
    assert code != 0 and "differ" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "colorpack", "stats", "--width", "256", "--height", "256",
         "--duration", "60", "--model-size", "30"],
        capture_output=True, text=True,
    )  # fmt: skip
    assert proc.returncode == 0
    assert rows(proc.stdout)[0]["percent_saved"] == "57.78"
    proc = subprocess.run([sys.executable, "-m", "colorpack", "decode", "--input", "/nonexistent", "--output", "x.rgb"],
                          capture_output=True, text=True)  # fmt: skip
    assert proc.returncode == 1 and proc.stdout == "" and "error" in proc.stderr


def test_summary_goes_to_stderr(raw_video):
    proc = subprocess.run(
        [sys.executable, "-m", "colorpack", "keyframes", "--input", str(raw_video),
         "--width", "16", "--height", "16"],
        capture_output=True, text=True,
    )  # fmt: skip
    assert proc.returncode == 0
    assert "3 clusters" in proc.stderr and "clusters" not in proc.stdout
