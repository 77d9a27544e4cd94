import json
import random

from parsemunge.cli import main
from parsemunge.tidytable import TidyTable, load_csv, write_csv

from .helpers import random_text_cell


def _write_train(tmp_path, rows=30, seed=4):
    rnd = random.Random(seed)
    table = TidyTable(
        headers=["col1", "col2", "num"],
        columns=[
            [rnd.choice(["a", "b", "c"]) for _ in range(rows)],
            [random_text_cell(rnd) for _ in range(rows)],
            [float(rnd.randint(0, 50)) for _ in range(rows)],
        ],
    )
    path = tmp_path / "train.csv"
    write_csv(table, path)
    return path, table


def _config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


class TestCmdFit:
    def test_assigncat_or19(self, tmp_path):
        train, _ = _write_train(tmp_path)
        config = _config(tmp_path, {"assigncat": {"or19": ["col2"]}})
        out = tmp_path / "out"
        assert main(["fit", str(train), "--config", str(config),
                     "--out-dir", str(out)]) == 0
        artifact = json.loads((out / "artifact.pmz.json").read_text())
        assert artifact["per_source"]["col2"]["root"] == "or19"
        assert (out / "train_encoded.csv").exists()
        assert (out / "fit_report.txt").exists()

    def test_no_config_auto_roots(self, tmp_path):
        train, _ = _write_train(tmp_path)
        out = tmp_path / "out"
        assert main(["fit", str(train), "--out-dir", str(out)]) == 0
        artifact = json.loads((out / "artifact.pmz.json").read_text())
        assert artifact["per_source"]["num"]["root"] == "nmbr"

    def test_unknown_category_exit_2(self, tmp_path, capsys):
        train, _ = _write_train(tmp_path)
        config = _config(tmp_path, {"assigncat": {"qq": ["col1"]}})
        assert main(["fit", str(train), "--config", str(config),
                     "--out-dir", str(tmp_path / "o")]) == 2
        assert "qq" in capsys.readouterr().err

    def test_unknown_config_key_exit_2(self, tmp_path):
        train, _ = _write_train(tmp_path)
        config = _config(tmp_path, {"bogus": 1})
        assert main(["fit", str(train), "--config", str(config),
                     "--out-dir", str(tmp_path / "o")]) == 2

    def test_test_set_encoded_alongside(self, tmp_path):
        train, table = _write_train(tmp_path)
        out = tmp_path / "out"
        assert main(["fit", str(train), "--test", str(train),
                     "--out-dir", str(out)]) == 0
        train_enc = (out / "train_encoded.csv").read_bytes()
        test_enc = (out / "test_encoded.csv").read_bytes()
        assert train_enc == test_enc

    def test_threshold_flag(self, tmp_path):
        path = tmp_path / "train.csv"
        rows = "\n".join(f"e{i}" for i in range(10))
        path.write_text(f"a\n{rows}\n", encoding="utf-8")
        out = tmp_path / "out"
        assert main(["fit", str(path), "--out-dir", str(out), "--threshold", "5"]) == 0
        artifact = json.loads((out / "artifact.pmz.json").read_text())
        assert artifact["per_source"]["a"]["root"] == "ord3"

    def test_deterministic_artifacts(self, tmp_path):
        train, _ = _write_train(tmp_path)
        blobs = []
        for name in ("o1", "o2"):
            assert main(["fit", str(train), "--out-dir", str(tmp_path / name),
                         "--seed", "5"]) == 0
            blobs.append((tmp_path / name / "artifact.pmz.json").read_bytes())
        assert blobs[0] == blobs[1]


class TestCmdApply:
    def test_replay_on_train(self, tmp_path):
        train, _ = _write_train(tmp_path)
        out = tmp_path / "out"
        main(["fit", str(train), "--out-dir", str(out)])
        dest = tmp_path / "replay.csv"
        assert main(["apply", str(out / "artifact.pmz.json"), str(train),
                     "--out", str(dest)]) == 0
        assert dest.read_bytes() == (out / "train_encoded.csv").read_bytes()

    def test_drift_summary_printed(self, tmp_path, capsys):
        train, _ = _write_train(tmp_path)
        out = tmp_path / "out"
        main(["fit", str(train), "--out-dir", str(out)])
        capsys.readouterr()
        assert main(["apply", str(out / "artifact.pmz.json"), str(train),
                     "--out", str(tmp_path / "r.csv"), "--drift"]) == 0
        assert "drift" in capsys.readouterr().out

    def test_missing_column_exit_3(self, tmp_path):
        train, _ = _write_train(tmp_path)
        out = tmp_path / "out"
        main(["fit", str(train), "--out-dir", str(out)])
        bad = tmp_path / "bad.csv"
        bad.write_text("other\n1\n", encoding="utf-8")
        assert main(["apply", str(out / "artifact.pmz.json"), str(bad),
                     "--out", str(tmp_path / "r.csv")]) == 3


class TestCmdInvert:
    def test_round_trip(self, tmp_path):
        train, table = _write_train(tmp_path)
        out = tmp_path / "out"
        config = _config(tmp_path, {"assigncat": {"ord3": ["col1", "col2"]}})
        main(["fit", str(train), "--config", str(config), "--out-dir", str(out)])
        dest = tmp_path / "recovered.csv"
        assert main(["invert", str(out / "artifact.pmz.json"),
                     str(out / "train_encoded.csv"), "--out", str(dest)]) == 0
        recovered = load_csv(dest)
        assert recovered.column("col1") == table.column("col1")
        assert recovered.column("col2") == table.column("col2")

    def test_lossy_source_listed(self, tmp_path, capsys):
        train, _ = _write_train(tmp_path)
        out = tmp_path / "out"
        config = _config(tmp_path, {"assigncat": {"splt": ["col2"]}})
        main(["fit", str(train), "--config", str(config), "--out-dir", str(out)])
        capsys.readouterr()
        assert main(["invert", str(out / "artifact.pmz.json"),
                     str(out / "train_encoded.csv"),
                     "--out", str(tmp_path / "r.csv")]) == 0
        assert "non-invertible" in capsys.readouterr().err

    def test_bad_artifact_exit_3(self, tmp_path):
        blob = tmp_path / "artifact.pmz.json"
        blob.write_text("{}", encoding="utf-8")
        csv = tmp_path / "x.csv"
        csv.write_text("a\n1\n", encoding="utf-8")
        assert main(["invert", str(blob), str(csv),
                     "--out", str(tmp_path / "r.csv")]) == 3


class TestCmdImportance:
    def _labelled_csv(self, tmp_path):
        rnd = random.Random(8)
        rows = 200
        informative = [rnd.choice(["red", "green", "blue", "gray"]) for _ in range(rows)]
        labels = ["hot" if c in ("red", "green") else "cold" for c in informative]
        noise = [rnd.choice(["n1", "n2", "n3"]) for _ in range(rows)]
        table = TidyTable(headers=["informative", "noise", "target"],
                          columns=[informative, noise, labels])
        path = tmp_path / "train.csv"
        write_csv(table, path)
        return path

    def test_informative_ranked_first(self, tmp_path):
        train = self._labelled_csv(tmp_path)
        out = tmp_path / "imp"
        assert main(["importance", str(train), "--labels", "target",
                     "--out-dir", str(out), "--seed", "2"]) == 0
        report = json.loads((out / "importance.json").read_text())
        assert report["metric1"]["informative"] > report["metric1"]["noise"]
        table_text = (out / "importance.txt").read_text()
        assert table_text.index("informative") < table_text.index("noise")

    def test_missing_labels_exit_2(self, tmp_path):
        train = self._labelled_csv(tmp_path)
        assert main(["importance", str(train),
                     "--out-dir", str(tmp_path / "imp")]) == 2

    def test_fixed_seed_identical_outputs(self, tmp_path):
        train = self._labelled_csv(tmp_path)
        blobs = []
        for name in ("i1", "i2"):
            assert main(["importance", str(train), "--labels", "target",
                         "--out-dir", str(tmp_path / name), "--seed", "3"]) == 0
            blobs.append((tmp_path / name / "importance.json").read_bytes())
        assert blobs[0] == blobs[1]


class TestConfigDocument:
    def test_transformdict_override(self, tmp_path):
        train, _ = _write_train(tmp_path)
        config = _config(tmp_path, {
            "assigncat": {"or19": ["col2"]},
            "transformdict": {
                "nmc8": {"parents": ["nmc8"], "cousins": ["NArw"],
                         "children": ["ord3"]}
            },
        })
        out = tmp_path / "out"
        assert main(["fit", str(train), "--config", str(config),
                     "--out-dir", str(out)]) == 0
        encoded = load_csv(out / "train_encoded.csv")
        assert "col2_UPCS_nmc7_ord3" in encoded.headers
        assert "col2_UPCS_nmc7_nmbr" not in encoded.headers

    def test_processdict_new_category(self, tmp_path):
        train, _ = _write_train(tmp_path)
        config = _config(tmp_path, {
            "assigncat": {"myrt": ["col1"]},
            "transformdict": {"myrt": {"parents": ["myrt"], "cousins": ["NArw"]}},
            "processdict": {"myrt": {"behavior": "ord3"}},
        })
        out = tmp_path / "out"
        assert main(["fit", str(train), "--config", str(config),
                     "--out-dir", str(out)]) == 0
        encoded = load_csv(out / "train_encoded.csv")
        assert "col1_ord3" in encoded.headers

    def test_dangling_override_exit_2(self, tmp_path):
        train, _ = _write_train(tmp_path)
        config = _config(tmp_path, {
            "transformdict": {"ord3": {"parents": ["qqqq"]}},
        })
        assert main(["fit", str(train), "--config", str(config),
                     "--out-dir", str(tmp_path / "o")]) == 2

    def test_top_level_srch_block(self, tmp_path):
        train, _ = _write_train(tmp_path)
        config = _config(tmp_path, {
            "assigncat": {"srch": ["col2"]},
            "srch": {"col2": {"search": ["chrome", "mac"]}},
        })
        out = tmp_path / "out"
        assert main(["fit", str(train), "--config", str(config),
                     "--out-dir", str(out)]) == 0
        encoded = load_csv(out / "train_encoded.csv")
        assert "col2_srch_chrome" in encoded.headers

    def test_assigninfill_block(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text('a\n1\n""\n3\n', encoding="utf-8")
        config = _config(tmp_path, {
            "assigncat": {"mnmx": ["a"]},
            "assigninfill": {"zeroinfill": ["a"]},
        })
        out = tmp_path / "out"
        assert main(["fit", str(path), "--config", str(config),
                     "--out-dir", str(out)]) == 0
        encoded = load_csv(out / "train_encoded.csv")
        assert encoded.column("a_mnmx") == [0.0, 0.0, 1.0]

    def test_labels_column_config(self, tmp_path):
        path = tmp_path / "train.csv"
        path.write_text("a,y\nx,p\nz,q\n", encoding="utf-8")
        config = _config(tmp_path, {"labels_column": "y"})
        out = tmp_path / "out"
        assert main(["fit", str(path), "--config", str(config),
                     "--out-dir", str(out)]) == 0
        assert (out / "train_labels.csv").exists()
        encoded = load_csv(out / "train_encoded.csv")
        assert all(not h.startswith("y") for h in encoded.headers)


class TestCmdInspect:
    def test_summary(self, tmp_path, capsys):
        train, _ = _write_train(tmp_path)
        out = tmp_path / "out"
        main(["fit", str(train), "--out-dir", str(out)])
        capsys.readouterr()
        assert main(["inspect", str(out / "artifact.pmz.json")]) == 0
        text = capsys.readouterr().out
        assert "source columns: 3" in text
