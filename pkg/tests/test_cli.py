import json

import pytest

from bibclass import cli
from bibclass.errors import DataError
from bibclass.evalhub import Assignment
from bibclass.textpipe import TokenizerConfig


@pytest.fixture()
def workspace(tmp_path):
    """A small but complete input set in one directory."""
    train = [
        {"id": "t1", "title": "galaxy quasar star nebula galaxy", "year": 1995, "labels": ["astro"]},
        {"id": "t2", "title": "galaxy star quasar redshift quasar", "year": 1995, "labels": ["astro"]},
        {"id": "t3", "title": "quantum lattice phonon boson quantum", "year": 1995, "labels": ["phys"]},
        {"id": "t4", "title": "lattice quantum fermion phonon boson", "year": 1995, "labels": ["phys"]},
    ]
    test = [
        {"id": "r1", "title": "quasar galaxy redshift star nebula", "year": 1997, "labels": ["astro"]},
        {"id": "r2", "title": "phonon lattice quantum boson fermion", "year": 1997, "labels": ["phys"]},
        {"id": "r3", "title": "short note", "year": 1997, "labels": []},
    ]
    (tmp_path / "train.jsonl").write_text(
        "".join(json.dumps(r) + "\n" for r in train), encoding="utf-8"
    )
    (tmp_path / "test.jsonl").write_text(
        "".join(json.dumps(r) + "\n" for r in test), encoding="utf-8"
    )
    (tmp_path / "citations.tsv").write_text(
        "".join(
            f"c{i}\tr1\n" for i in range(1, 5)
        )
        + "".join(f"c{i}\tr3\n" for i in range(5, 9)),
        encoding="utf-8",
    )
    (tmp_path / "memberships.tsv").write_text(
        "".join(f"c{i}\tastro\n" for i in range(1, 5))
        + "".join(f"c{i}\tphys\n" for i in range(5, 9)),
        encoding="utf-8",
    )
    return tmp_path


def build(workspace, extra=()):
    rc = cli.run(
        [
            "build-model",
            "--records",
            str(workspace / "train.jsonl"),
            "--model",
            str(workspace / "model.txt"),
            *extra,
        ]
    )
    assert rc == 0
    return workspace / "model.txt"


class TestBuildModel:
    def test_trains_and_reports(self, workspace, capsys):
        build(workspace)
        out = capsys.readouterr().out
        assert "astro, phys" in out
        assert (workspace / "model.txt").exists()

    def test_missing_records_flag_is_usage_error(self, workspace, capsys):
        rc = cli.run(["build-model", "--model", str(workspace / "m.txt")])
        assert rc == 1
        assert "requires --records" in capsys.readouterr().err

    def test_unlabeled_corpus_is_data_error(self, workspace, capsys):
        (workspace / "empty.jsonl").write_text(
            json.dumps({"id": "x", "title": "words here", "year": 1, "labels": []}) + "\n",
            encoding="utf-8",
        )
        rc = cli.run(
            [
                "build-model",
                "--records",
                str(workspace / "empty.jsonl"),
                "--model",
                str(workspace / "m.txt"),
            ]
        )
        assert rc == 2


class TestClassify:
    def test_text_mode_writes_assignments(self, workspace, capsys):
        model = build(workspace)
        out = workspace / "out.tsv"
        rc = cli.run(
            [
                "classify",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--mode",
                "text",
                "--st",
                "0.35",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "r1\tastro\tastro\t"
        assert lines[1] == "r2\tphys\tphys\t"
        assert lines[2] == "r3\t\t\t"

    def test_combined_mode_unions_routes(self, workspace):
        model = build(workspace)
        out = workspace / "out.tsv"
        rc = cli.run(
            [
                "classify",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--citations",
                str(workspace / "citations.tsv"),
                "--memberships",
                str(workspace / "memberships.tsv"),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        # r3 is too short for text but has four physics citers.
        assert lines[2] == "r3\tphys\t\tphys"

    def test_citation_mode_needs_no_model(self, workspace):
        out = workspace / "out.tsv"
        rc = cli.run(
            [
                "classify",
                "--records",
                str(workspace / "test.jsonl"),
                "--mode",
                "citation",
                "--citations",
                str(workspace / "citations.tsv"),
                "--memberships",
                str(workspace / "memberships.tsv"),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "r1\tastro\t\tastro"

    def test_combined_without_citations_is_usage_error(self, workspace, capsys):
        model = build(workspace)
        rc = cli.run(
            [
                "classify",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
            ]
        )
        assert rc == 1
        assert "--memberships" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self, workspace, capsys):
        rc = cli.run(["classify", "--bogus"])
        assert rc == 1
        assert "usage" in capsys.readouterr().err

    def test_missing_model_file_is_data_error(self, workspace, capsys):
        rc = cli.run(
            [
                "classify",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(workspace / "absent.txt"),
                "--mode",
                "text",
            ]
        )
        assert rc == 2
        assert "absent.txt" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "flag,value",
        [
            ("--st", "1.5"),
            ("--st", "abc"),
            ("--nt", "-1"),
            ("--nc", "0"),
            ("--rc", "0"),
            ("--workers", "0"),
            ("--mode", "psychic"),
        ],
    )
    def test_bad_parameter_values_are_usage_errors(self, workspace, flag, value):
        model = build(workspace)
        rc = cli.run(
            [
                "classify",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--mode",
                "text" if flag != "--mode" else value,
                *([] if flag == "--mode" else [flag, value]),
            ]
        )
        assert rc == 1

    def test_list_value_rejected_outside_sweep(self, workspace, capsys):
        model = build(workspace)
        rc = cli.run(
            [
                "classify",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--mode",
                "text",
                "--st",
                "0.25,0.5",
            ]
        )
        assert rc == 1
        assert "single value" in capsys.readouterr().err


class TestEvaluate:
    def test_reports_per_database(self, workspace, capsys):
        model = build(workspace)
        capsys.readouterr()
        rc = cli.run(
            [
                "evaluate",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--mode",
                "text",
                "--st",
                "0.35",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "db=astro tp=1 fp=0 fn=0 precision=1.000000 recall=1.000000" in out
        assert "db=phys" in out

    def test_db_filter(self, workspace, capsys):
        model = build(workspace)
        capsys.readouterr()
        rc = cli.run(
            [
                "evaluate",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--mode",
                "text",
                "--db",
                "astro",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "db=astro" in out
        assert "db=phys" not in out

    def test_unknown_db_is_data_error(self, workspace):
        model = build(workspace)
        rc = cli.run(
            [
                "evaluate",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--mode",
                "text",
                "--db",
                "nope",
            ]
        )
        assert rc == 2


class TestSweep:
    def test_writes_grid_csv(self, workspace):
        model = build(workspace)
        grid = workspace / "grid.csv"
        rc = cli.run(
            [
                "sweep",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--mode",
                "text",
                "--db",
                "astro",
                "--nt",
                "1,5",
                "--st",
                "0.25,0.75",
                "--grid-out",
                str(grid),
            ]
        )
        assert rc == 0
        lines = grid.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "mode,db,N_t,S_t,N_c,R_c,tp,fp,fn,precision,recall"
        assert len(lines) == 5
        assert lines[1].startswith("text,astro,1,0.250000,")

    def test_db_is_required(self, workspace, capsys):
        model = build(workspace)
        rc = cli.run(
            [
                "sweep",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--mode",
                "text",
            ]
        )
        assert rc == 1
        assert "--db" in capsys.readouterr().err


class TestConfigFile:
    def test_config_supplies_defaults_and_flags_win(self, workspace, monkeypatch, capsys):
        model = build(workspace)
        config = workspace / "config.txt"
        config.write_text("# settings\nmode = text\nst = 0.9\n", encoding="utf-8")
        monkeypatch.setenv(cli.CONFIG_ENV_VAR, str(config))
        capsys.readouterr()
        rc = cli.run(
            [
                "evaluate",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--st",
                "0.1",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        # mode came from the config file; the explicit --st 0.1 beat st=0.9.
        assert "mode: text" in out
        assert "db=astro tp=1" in out

    def test_unknown_config_key_is_usage_error(self, workspace, monkeypatch, capsys):
        config = workspace / "config.txt"
        config.write_text("volume = 11\n", encoding="utf-8")
        monkeypatch.setenv(cli.CONFIG_ENV_VAR, str(config))
        rc = cli.run(
            [
                "classify",
                "--records",
                str(workspace / "test.jsonl"),
                "--mode",
                "citation",
                "--citations",
                str(workspace / "citations.tsv"),
                "--memberships",
                str(workspace / "memberships.tsv"),
            ]
        )
        assert rc == 1
        assert "volume" in capsys.readouterr().err

    def test_malformed_config_line_is_usage_error(self, workspace, monkeypatch):
        config = workspace / "config.txt"
        config.write_text("just words\n", encoding="utf-8")
        monkeypatch.setenv(cli.CONFIG_ENV_VAR, str(config))
        rc = cli.run(["classify", "--records", str(workspace / "test.jsonl")])
        assert rc == 1


class TestTriggers:
    def test_trigger_file_parses_and_applies(self, workspace):
        model = build(workspace)
        triggers = workspace / "triggers.tsv"
        triggers.write_text("# db\tterm\nastro\tX-ray\n", encoding="utf-8")
        loaded = cli.load_triggers(triggers, ("astro", "phys"), TokenizerConfig())
        assert loaded == {"astro": frozenset({"xray"})}
        rc = cli.run(
            [
                "classify",
                "--records",
                str(workspace / "test.jsonl"),
                "--model",
                str(model),
                "--mode",
                "text",
                "--triggers",
                str(triggers),
                "--out",
                str(workspace / "out.tsv"),
            ]
        )
        assert rc == 0

    def test_trigger_for_unknown_database_is_data_error(self, workspace):
        triggers = workspace / "triggers.tsv"
        triggers.write_text("mystery\tterm\n", encoding="utf-8")
        with pytest.raises(DataError, match="mystery"):
            cli.load_triggers(triggers, ("astro",), TokenizerConfig())

    def test_filtered_out_trigger_is_data_error(self, workspace):
        triggers = workspace / "triggers.tsv"
        triggers.write_text("astro\t1997\n", encoding="utf-8")
        with pytest.raises(DataError, match="1997"):
            cli.load_triggers(triggers, ("astro",), TokenizerConfig())

    def test_multi_word_trigger_is_data_error(self, workspace):
        triggers = workspace / "triggers.tsv"
        triggers.write_text("astro\tblack hole\n", encoding="utf-8")
        with pytest.raises(DataError, match="single word"):
            cli.load_triggers(triggers, ("astro",), TokenizerConfig())


class TestEmitAssignments:
    def test_exact_line_format(self, tmp_path):
        path = tmp_path / "a.tsv"
        cli.emit_assignments(
            [
                Assignment("id", frozenset({"astro"}), frozenset()),
                Assignment("other", frozenset(), frozenset()),
            ],
            ("astro", "phys"),
            path,
        )
        assert path.read_text(encoding="utf-8") == "id\tastro\tastro\t\nother\t\t\t\n"

    def test_configured_order_not_alphabetical(self, tmp_path):
        path = tmp_path / "a.tsv"
        cli.emit_assignments(
            [Assignment("id", frozenset({"astro", "zeta"}), frozenset({"zeta"}))],
            ("zeta", "astro"),
            path,
        )
        assert path.read_text(encoding="utf-8") == "id\tzeta,astro\tzeta,astro\tzeta\n"

    def test_unwritable_path_is_data_error(self, tmp_path):
        with pytest.raises(DataError):
            cli.emit_assignments([], ("astro",), tmp_path / "missing" / "a.tsv")


class TestHelp:
    def test_help_exits_zero_and_lists_flags(self, capsys):
        assert cli.run(["classify", "--help"]) == 0
        out = capsys.readouterr().out
        for flag in ("--records", "--model", "--mode", "--st", "--workers"):
            assert flag in out
        assert "0.25" in out

    def test_top_level_help_exits_zero(self, capsys):
        assert cli.run(["--help"]) == 0
        assert "build-model" in capsys.readouterr().out
