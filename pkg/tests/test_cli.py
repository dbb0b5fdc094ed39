from __future__ import annotations

import pytest

from ces import decode, encode
from ces.cli import main

from conftest import start_events

DOC_GOLDEN = """\
DocFile Editor {version=1.0} links{folder->serv}
Folder fulib {} links{files->{fulib.Doc},pFolder->org,subFolders->{serv}}
DocFile fulib.Doc {content=fulib docu} links{folder->fulib}
Folder org {} links{subFolders->{fulib}}
Folder serv {} links{files->{Editor,serv.Doc},pFolder->fulib}
DocFile serv.Doc {content=serv docu} links{folder->serv}
"""

PACKAGES_GOLDEN = """\
JavaClass Editor {vTag=1.0} links{pack->serv}
JavaPackage fulib {} links{pPack->org,subPackages->{serv}}
JavaPackage org {} links{subPackages->{fulib}}
JavaPackage serv {} links{classes->{Editor},pPack->fulib}
"""


@pytest.fixture
def start_file(tmp_path):
    path = tmp_path / "start.ces"
    path.write_text(encode(start_events()), encoding="utf-8")
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- replay -------------------------------------------------------------------------


def test_replay_dumps_the_model_and_a_digest(capsys, start_file):
    code, out, _ = run_cli(capsys, "replay", "--domain", "javapackages", "--in", start_file)
    assert code == 0
    assert out.startswith(PACKAGES_GOLDEN)
    assert "active-digest: " in out


def test_replay_reverse_and_permuted_match_forward(capsys, start_file):
    outputs = set()
    for extra in ([], ["--reverse"], ["--permute", "3"], ["--permute", "99"]):
        code, out, _ = run_cli(
            capsys, "replay", "--domain", "javapackages", "--in", start_file, *extra
        )
        assert code == 0
        outputs.add(out)
    assert len(outputs) == 1


def test_replay_empty_file(capsys, tmp_path):
    empty = tmp_path / "empty.ces"
    empty.write_text("", encoding="utf-8")
    code, out, _ = run_cli(capsys, "replay", "--domain", "javadoc", "--in", str(empty))
    assert code == 0
    assert out.splitlines()[0].startswith("active-digest: ")


# -- sync ---------------------------------------------------------------------------


def test_sync_packages_to_doc_matches_the_golden_dump(capsys, start_file, tmp_path):
    out_file = tmp_path / "synced.ces"
    code, out, _ = run_cli(
        capsys,
        "sync",
        "--from-domain", "javapackages",
        "--to-domain", "javadoc",
        "--in", start_file,
        "--out", str(out_file),
    )
    assert code == 0
    assert out.startswith(DOC_GOLDEN)
    assert len(decode(out_file.read_text(encoding="utf-8"))) == 4


def test_sync_round_trip_reproduces_the_direct_replay(capsys, start_file, tmp_path):
    doc_file = tmp_path / "doc.ces"
    back_file = tmp_path / "back.ces"
    run_cli(capsys, "sync", "--from-domain", "javapackages", "--to-domain", "javadoc",
            "--in", start_file, "--out", str(doc_file))
    code, out, _ = run_cli(capsys, "sync", "--from-domain", "javadoc", "--to-domain", "javapackages",
                           "--in", str(doc_file), "--out", str(back_file))
    assert code == 0
    direct_code, direct_out, _ = run_cli(
        capsys, "replay", "--domain", "javapackages", "--in", start_file
    )
    assert out == direct_out


def test_sync_filter_excludes_event_types_from_the_output(capsys, tmp_path):
    events_file = tmp_path / "doc.ces"
    events_file.write_text(
        "- command: HaveLeaf\n  id: Editor\n  time: 2020-01-01T13:00:00.000Z\n"
        "  parent: serv\n  vTag: 1.0\n"
        "- command: HaveContent\n  id: Editor\n  time: 2020-01-01T13:01:00.000Z\n"
        "  content: hello\n",
        encoding="utf-8",
    )
    out_file = tmp_path / "synced.ces"
    code, _, _ = run_cli(
        capsys, "sync", "--from-domain", "javadoc", "--to-domain", "javadoc",
        "--in", str(events_file), "--out", str(out_file), "--filter", "HaveLeaf",
    )
    assert code == 0
    synced = out_file.read_text(encoding="utf-8")
    assert "HaveContent" not in synced and "HaveLeaf" in synced


# -- diff ---------------------------------------------------------------------------


def test_diff_of_a_file_against_itself_exits_zero(capsys, start_file):
    code, out, _ = run_cli(
        capsys, "diff", "--domain", "javapackages", "--a", start_file, "--b", start_file
    )
    assert code == 0
    assert "models equal" in out


def test_diff_of_differing_files_exits_one(capsys, start_file, tmp_path):
    other = tmp_path / "other.ces"
    events = start_events()
    events[3] = events[3].__class__(
        "HaveLeaf", id="Editor", time=events[3].time, params={"parent": "serv", "vTag": "1.1"}
    )
    other.write_text(encode(events), encoding="utf-8")
    code, out, _ = run_cli(
        capsys, "diff", "--domain", "javapackages", "--a", start_file, "--b", str(other)
    )
    assert code == 1
    assert "Editor: attribute 'vTag' differs" in out


# -- check-commute ---------------------------------------------------------------------


def test_check_commute_passes_on_the_start_situation(capsys, start_file):
    code, out, _ = run_cli(
        capsys, "check-commute", "--domain", "javapackages", "--in", start_file,
        "--trials", "20", "--seed", "5",
    )
    assert code == 0
    assert "commutative: yes" in out


# -- simulate ---------------------------------------------------------------------------


def test_simulate_reports_convergence(capsys, tmp_path):
    script = tmp_path / "session.txt"
    script.write_text(
        "editor alice javapackages\n"
        "editor bob javapackages\n"
        "submit alice HaveLeaf Editor parent=serv vTag=1.0 time=2020-01-01T13:36:00.000Z\n"
        "submit bob HaveLeaf Editor parent=serv vTag=1.1 time=2020-01-01T13:37:00.000Z\n"
        "flush\n",
        encoding="utf-8",
    )
    code, out, _ = run_cli(capsys, "simulate", "--script", str(script), "--seed", "4")
    assert code == 0
    assert "converged: yes" in out
    assert "vTag=1.1" in out


# -- error handling -----------------------------------------------------------------------


def test_usage_errors_exit_two(capsys, start_file):
    with pytest.raises(SystemExit) as exit_info:
        main(["replay", "--domain", "nowhere", "--in", start_file])
    assert exit_info.value.code == 2


def test_format_errors_exit_two(capsys, tmp_path):
    bad = tmp_path / "bad.ces"
    bad.write_text("not an event file\n", encoding="utf-8")
    code, _, err = run_cli(capsys, "replay", "--domain", "javapackages", "--in", str(bad))
    assert code == 2
    assert "error:" in err


def test_missing_file_exits_two(capsys):
    code, _, err = run_cli(capsys, "replay", "--domain", "javapackages", "--in", "no-such.ces")
    assert code == 2
