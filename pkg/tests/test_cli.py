import json

import numpy as np
import pytest

from seglocal import cli
from seglocal.io import load_cloud, load_map, save_cloud_xyz
from seglocal.pipeline import PipelineConfig, localize

from ._world import decoy_cloud, make_world, partial_view, rich_view_centers

CONFIG_FLAGS = [
    "--cluster-tolerance", "1.5", "--min-points", "50", "--ground-removal", "none",
    "--descriptor", "eigen", "--k", "5", "--min-inliers", "6", "--seed", "7",
]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(42)
    world = make_world(rng, n_clusters=30, extent=150.0)

    clouds_dir = root / "clouds"
    clouds_dir.mkdir()
    save_cloud_xyz(world.cloud, clouds_dir / "world.csv")

    center = rich_view_centers(world, radius=60.0, need=8)[0]
    live, truth = partial_view(world, rng, center_index=center, radius=60.0)
    save_cloud_xyz(live, root / "live.csv")
    save_cloud_xyz(decoy_cloud(rng), root / "decoy.csv")

    map_path = root / "world.segm"
    code = cli.main(["build-map", "--clouds", str(clouds_dir), "--out", str(map_path), *CONFIG_FLAGS])
    assert code == 0
    return {"root": root, "clouds": clouds_dir, "map": map_path, "truth": truth}


class TestBuildMap:
    def test_map_written_with_segments(self, workspace, capsys):
        assert workspace["map"].exists()
        m = load_map(workspace["map"])
        assert len(m) == 30

    def test_empty_directory_is_data_error(self, tmp_path, capsys):
        empty = tmp_path / "none"
        empty.mkdir()
        code = cli.main(["build-map", "--clouds", str(empty), "--out", str(tmp_path / "m.segm")])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_rebuild_is_byte_identical(self, workspace, tmp_path):
        again = tmp_path / "again.segm"
        code = cli.main(["build-map", "--clouds", str(workspace["clouds"]),
                         "--out", str(again), *CONFIG_FLAGS])
        assert code == 0
        assert again.read_bytes() == workspace["map"].read_bytes()

    def test_threads_do_not_change_map_bytes(self, workspace, tmp_path):
        threaded = tmp_path / "threaded.segm"
        code = cli.main(["build-map", "--clouds", str(workspace["clouds"]),
                         "--out", str(threaded), *CONFIG_FLAGS, "--threads", "4"])
        assert code == 0
        assert threaded.read_bytes() == workspace["map"].read_bytes()


class TestLocalize:
    def test_partial_view_pose(self, workspace, capsys):
        code = cli.main(["localize", "--cloud", str(workspace["root"] / "live.csv"),
                         "--map", str(workspace["map"]), *CONFIG_FLAGS])
        assert code == 0
        record = json.loads(capsys.readouterr().out)
        assert record["status"] == "localized"
        rotation = np.array(record["rotation"]).reshape(3, 3)
        truth = workspace["truth"]
        assert np.abs(rotation - truth.rotation).max() < 0.01
        assert np.abs(np.array(record["translation"]) - truth.translation).max() < 0.3

    def test_no_localization_is_success_exit(self, workspace, capsys):
        code = cli.main(["localize", "--cloud", str(workspace["root"] / "decoy.csv"),
                         "--map", str(workspace["map"]), *CONFIG_FLAGS])
        assert code == 0
        record = json.loads(capsys.readouterr().out)
        assert record["status"] == "no-localization"

    def test_output_matches_library_byte_for_byte(self, workspace, capsys):
        code = cli.main(["localize", "--cloud", str(workspace["root"] / "live.csv"),
                         "--map", str(workspace["map"]), *CONFIG_FLAGS])
        assert code == 0
        cli_text = capsys.readouterr().out

        config = PipelineConfig(cluster_tolerance=1.5, min_points=50, ground_removal="none",
                                descriptor="eigen", k=5, min_inliers=6, seed=7)
        result = localize(load_cloud(workspace["root"] / "live.csv"),
                          load_map(workspace["map"]), config)
        assert cli_text == cli.dump_json(cli.pose_record(result)) + "\n"

    def test_missing_map_is_data_error(self, workspace, capsys):
        code = cli.main(["localize", "--cloud", str(workspace["root"] / "live.csv"),
                         "--map", str(workspace["root"] / "missing.segm")])
        assert code == 2


class TestEvalCommands:
    def test_roc(self, tmp_path, capsys):
        from seglocal.evaluation import roc_auc
        pairs = tmp_path / "pairs.csv"
        pairs.write_text("score,label\n0.9,match\n0.8,match\n0.1,non_match\n0.2,non_match\n")
        out = tmp_path / "roc.csv"
        code = cli.main(["eval", "roc", "--pairs", str(pairs), "--out", str(out)])
        assert code == 0
        expected = roc_auc([0.9, 0.8, 0.1, 0.2], ["match", "match", "non_match", "non_match"]).auc
        assert capsys.readouterr().out == f"auc={expected!r} pairs=4\n"
        assert out.exists()

    def test_rotation_writes_two_columns(self, workspace, tmp_path, capsys):
        out = tmp_path / "delta.csv"
        code = cli.main(["eval", "rotation", "--cloud", str(workspace["clouds"] / "world.csv"),
                         "--alignments", "pca2d,none", "--angles", "0,120,240",
                         "--out", str(out), *CONFIG_FLAGS])
        assert code == 0
        header = out.read_text().splitlines()[0]
        assert header == "angle_deg,delta_pca2d,delta_none"

    def test_localize_run(self, workspace, tmp_path, capsys):
        out = tmp_path / "run.json"
        code = cli.main(["eval", "localize-run", "--map", str(workspace["map"]),
                         "--clouds", str(workspace["clouds"]), "--out", str(out), *CONFIG_FLAGS])
        assert code == 0
        assert "localizations=1/1" in capsys.readouterr().out
        record = json.loads(out.read_text())
        assert record["count"] == 1

    def test_bench_fps(self, tmp_path, capsys):
        out = tmp_path / "fps.csv"
        code = cli.main(["eval", "bench-fps", "--p", "4", "--s", "32", "--m", "8",
                         "--repeats", "2", "--out", str(out)])
        assert code == 0
        table = capsys.readouterr().out
        assert "speedup" in table and "batched_ms" in table
        assert "per_segment_ms" in out.read_text()

    def test_bench_pipeline(self, workspace, tmp_path, capsys):
        out = tmp_path / "stages.csv"
        code = cli.main(["eval", "bench-pipeline", "--map", str(workspace["map"]),
                         "--clouds", str(workspace["clouds"]), "--repeats", "2",
                         "--warmup", "1", "--out", str(out), *CONFIG_FLAGS])
        assert code == 0
        text = out.read_text()
        for stage in ("segmentation_ms", "descriptor_ms", "pose_ms", "total_ms"):
            assert stage in text


class TestConfigFile:
    def test_file_values_and_flag_override(self, workspace, tmp_path, capsys):
        config_file = tmp_path / "pipeline.cfg"
        config_file.write_text(
            "# pipeline settings\n"
            "cluster_tolerance = 1.5\nmin_points = 50\nground_removal = none\n"
            "descriptor = eigen\nk = 5\nmin_inliers = 6\nseed = 7\n"
        )
        code = cli.main(["localize", "--cloud", str(workspace["root"] / "live.csv"),
                         "--map", str(workspace["map"]), "--config", str(config_file)])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["status"] == "localized"

        # a flag override that breaks localization proves precedence
        code = cli.main(["localize", "--cloud", str(workspace["root"] / "live.csv"),
                         "--map", str(workspace["map"]), "--config", str(config_file),
                         "--min-points", "5000"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["status"] == "no-localization"

    def test_unknown_key_rejected(self, workspace, tmp_path, capsys):
        config_file = tmp_path / "bad.cfg"
        config_file.write_text("warp_speed = 9\n")
        code = cli.main(["localize", "--cloud", str(workspace["root"] / "live.csv"),
                         "--map", str(workspace["map"]), "--config", str(config_file)])
        assert code == 2


class TestExitCodes:
    def test_usage_error_is_one(self, capsys):
        assert cli.main(["localize"]) == 1          # missing required flags
        assert cli.main(["no-such-command"]) == 1

    def test_data_error_is_two(self, tmp_path, capsys):
        assert cli.main(["eval", "roc", "--pairs", str(tmp_path / "nope.csv")]) == 2
