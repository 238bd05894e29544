"""Command-line behavior: exit codes, output formats, reproducibility."""

import json

import numpy as np
import pytest

from mrperc.cli import main
from mrperc.images import save_image

from conftest import make_tiny_backbone, random_image
from test_evaluation import make_dataset


@pytest.fixture
def weights(tmp_path):
    return make_tiny_backbone(tmp_path / "tiny.mrpw")


@pytest.fixture
def dataset(tmp_path):
    return make_dataset(tmp_path / "data", {"trad": 2, "cnn": 2}, seed=4)


@pytest.fixture
def image_pair(tmp_path):
    rng = np.random.default_rng(5)
    a = random_image(rng, 3, 16, 16)
    b = np.clip(a + rng.normal(0, 0.1, a.shape).astype(np.float32), 0, 1)
    pa, pb = tmp_path / "a.png", tmp_path / "b.png"
    save_image(pa, a)
    save_image(pb, b)
    return pa, pb


class TestDistance:
    def test_same_file_twice_is_zero(self, weights, image_pair, capsys):
        pa, _ = image_pair
        rc = main(["distance", str(pa), str(pa), "--weights", str(weights),
                   "--preset", "classical"])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.startswith("distance: 0")

    def test_unknown_preset_exits_2(self, weights, image_pair, capsys):
        pa, pb = image_pair
        rc = main(["distance", str(pa), str(pb), "--weights", str(weights),
                   "--preset", "nope"])
        assert rc == 2
        assert "unknown preset" in capsys.readouterr().err

    def test_decode_failure_exits_2(self, weights, tmp_path, capsys):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"junk")
        rc = main(["distance", str(bad), str(bad), "--weights", str(weights)])
        assert rc == 2

    def test_json_format(self, weights, image_pair, capsys):
        pa, pb = image_pair
        rc = main(["distance", str(pa), str(pb), "--weights", str(weights),
                   "--preset", "mr", "--format", "json"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["distance"] > 0
        assert set(payload["per_branch"]) == {"x1/linear", "x1/quadratic",
                                              "x2/linear"}

    def test_preset_and_flags_mutually_exclusive(self, weights, image_pair,
                                                 capsys):
        pa, pb = image_pair
        rc = main(["distance", str(pa), str(pb), "--weights", str(weights),
                   "--preset", "mr", "--norm", "l2"])
        assert rc == 2
        assert "mutually exclusive" in capsys.readouterr().err

    def test_explicit_flags(self, weights, image_pair, capsys):
        pa, pb = image_pair
        rc = main(["distance", str(pa), str(pb), "--weights", str(weights),
                   "--norm", "relu_l1", "--measure", "ce",
                   "--branches", "x1:linear+x1:quadratic", "--blocks", "1"])
        assert rc == 0
        assert capsys.readouterr().out.startswith("distance:")


class TestEvaluate:
    def test_text_output(self, weights, dataset, capsys):
        rc = main(["evaluate", "--dataset", str(dataset), "--weights",
                   str(weights), "--preset", "classical"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "AVERAGE" in out and "Trad" in out

    def test_ssim_preset_needs_no_weights(self, dataset, capsys):
        rc = main(["evaluate", "--dataset", str(dataset), "--preset", "ssim",
                   "--format", "csv"])
        assert rc == 0
        assert "AVERAGE" in capsys.readouterr().out

    def test_subsample_reports_reproducible_bytes(self, weights, dataset,
                                                  tmp_path):
        outs = []
        for i in range(2):
            out = tmp_path / f"r{i}.json"
            rc = main(["evaluate", "--dataset", str(dataset), "--weights",
                       str(weights), "--preset", "mr", "--subsample", "1",
                       "--seed", "11", "--format", "json",
                       "--out", str(out)])
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_missing_dataset_exits_3(self, weights, tmp_path, capsys):
        rc = main(["evaluate", "--dataset", str(tmp_path / "nope"),
                   "--weights", str(weights), "--preset", "classical"])
        assert rc == 3

    def test_corrupt_weights_exits_4(self, dataset, tmp_path, capsys):
        bad = tmp_path / "bad.mrpw"
        bad.write_bytes(b"MRPWgarbagegarbagegarbage")
        rc = main(["evaluate", "--dataset", str(dataset), "--weights",
                   str(bad), "--preset", "classical"])
        assert rc == 4

    def test_workers_flag_does_not_change_bytes(self, weights, dataset,
                                                tmp_path):
        blobs = []
        for i, workers in enumerate(("1", "4")):
            out = tmp_path / f"w{i}.json"
            rc = main(["evaluate", "--dataset", str(dataset), "--weights",
                       str(weights), "--preset", "classical",
                       "--workers", workers, "--format", "json",
                       "--out", str(out)])
            assert rc == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]


class TestAblate:
    def test_degenerate_grid_matches_evaluate(self, weights, dataset,
                                              tmp_path):
        eval_out = tmp_path / "eval.json"
        rc = main(["evaluate", "--dataset", str(dataset), "--weights",
                   str(weights), "--preset", "classical", "--format", "json",
                   "--out", str(eval_out)])
        assert rc == 0
        grid_out = tmp_path / "grid.json"
        rc = main(["ablate", "--dataset", str(dataset), "--weights",
                   str(weights), "--norm", "l2", "--measure", "mse",
                   "--branches", "x1:linear", "--blocks", "all",
                   "--format", "json", "--out", str(grid_out)])
        assert rc == 0
        cell = json.loads(grid_out.read_text())["cells"][0]
        fresh = json.loads(eval_out.read_text())
        assert cell["categories"] == fresh["categories"]
        assert cell["average"] == fresh["average"]

    def test_invalid_cells_skipped_with_notice(self, weights, dataset,
                                               tmp_path, capsys):
        out = tmp_path / "grid.json"
        rc = main(["ablate", "--dataset", str(dataset), "--weights",
                   str(weights), "--norm", "l2,sigmoid", "--measure", "ce",
                   "--branches", "x1:linear", "--format", "json",
                   "--out", str(out)])
        assert rc == 0
        err = capsys.readouterr().err
        assert "skipping invalid cell" in err
        cells = json.loads(out.read_text())["cells"]
        assert len(cells) == 1  # ce/l2 dropped, ce/sigmoid kept

    def test_table5_preset_block_decomposition(self, weights, dataset,
                                               tmp_path):
        out = tmp_path / "t5.json"
        rc = main(["ablate", "--dataset", str(dataset), "--weights",
                   str(weights), "--preset", "table5", "--format", "json",
                   "--out", str(out)])
        assert rc == 0
        cells = json.loads(out.read_text())["cells"]
        assert [c["name"] for c in cells] == ["block1", "block2", "all"]

    def test_csv_grid_output(self, weights, dataset, capsys):
        rc = main(["ablate", "--dataset", str(dataset), "--weights",
                   str(weights), "--norm", "l2", "--measure", "mse,mae",
                   "--branches", "x1:linear"])
        assert rc == 0


class TestInspect:
    def test_summary_fields(self, weights, capsys):
        rc = main(["inspect-weights", "--weights", str(weights)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "blocks (B): 2" in out
        assert "payload crc32:" in out
        assert "tap 2" in out

    def test_missing_file_exits_4(self, tmp_path, capsys):
        rc = main(["inspect-weights", "--weights", str(tmp_path / "no.mrpw")])
        assert rc in (2, 4)
