import random
import subprocess
import sys

import pytest

from conftest import EXAMPLES, FRAMES, load
from korean_ud.cli import CliError, RunConfig, _convert_one, corpus_stats, main, ordered_map
from korean_ud.conllu import serialize_document
from korean_ud.rules import ConversionConfig, run_pipeline
from treegen import random_tree

CURRENT = str(EXAMPLES / "current.conllu")
REVISED = str(EXAMPLES / "revised.conllu")
SIPDA_TOP = str(EXAMPLES / "sipda_current.conllu")
SIPDA_BOTTOM = EXAMPLES / "sipda_revised.conllu"
SEJONG = str(EXAMPLES / "sejong.conllu")
FRAME_SENTS = str(EXAMPLES / "frames_sentences.conllu")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_convert_sipda_byte_exact(tmp_path, capsys):
    out = tmp_path / "out.conllu"
    assert run(capsys, "convert", SIPDA_TOP, "-o", str(out))[0] == 0
    assert out.read_bytes() == SIPDA_BOTTOM.read_bytes()


def test_convert_corpus_to_stdout(capsys):
    code, out, _ = run(capsys, "convert", CURRENT)
    assert code == 0
    assert out == (EXAMPLES / "revised.conllu").read_text(encoding="utf-8")


def test_convert_twice_is_identical(tmp_path, capsys):
    once, twice = tmp_path / "a", tmp_path / "b"
    run(capsys, "convert", CURRENT, "-o", str(once))
    run(capsys, "convert", str(once), "-o", str(twice))
    assert once.read_bytes() == twice.read_bytes()


def test_convert_empty_input(tmp_path, capsys):
    empty = tmp_path / "empty.conllu"
    empty.write_text("", encoding="utf-8")
    assert run(capsys, "convert", str(empty)) == (0, "", "")


def test_convert_report(tmp_path, capsys):
    report = tmp_path / "report.tsv"
    run(capsys, "convert", SIPDA_TOP, "--report", str(report))
    lines = report.read_text(encoding="utf-8").splitlines()
    assert lines and all(len(line.split("\t")) == 4 for line in lines)
    assert {line.split("\t")[1] for line in lines} >= {"verbal_restructure", "case_role_refinement"}


def test_convert_passes_option(capsys):
    code, out, _ = run(capsys, "convert", SIPDA_TOP, "--passes", "nominal_head_finality")
    assert code == 0 and "\t4\tcompound\t" not in out
    assert run(capsys, "convert", SIPDA_TOP, "--passes", "nope")[0] == 2


def test_convert_stdin(monkeypatch, capsys):
    import io
    monkeypatch.setattr(sys, "stdin", io.StringIO(open(SIPDA_TOP, encoding="utf-8").read()))
    code, out, _ = run(capsys, "convert")
    assert code == 0 and out == SIPDA_BOTTOM.read_text(encoding="utf-8")


def test_convert_parse_error_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.conllu"
    bad.write_text("1\t나는\t나\tPRON\tnp\t_\t0\troot\t_\t_\n2\tx\n\n", encoding="utf-8")
    code, _, err = run(capsys, "convert", str(bad))
    assert code == 2 and "line 2" in err


def test_missing_input_and_bad_args(capsys):
    assert run(capsys, "convert", "/nonexistent.conllu")[0] == 2
    assert run(capsys, "convert", SIPDA_TOP, "--jobs", "0")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys)[0] == 2
    assert run(capsys, "validate", CURRENT, "--severity", "NOPE=error")[0] == 2
    with pytest.raises(CliError):
        RunConfig("convert", jobs=0)


def test_help_exits_zero(capsys):
    assert run(capsys, "--help")[0] == 0


def test_validate_exit_codes(tmp_path, capsys):
    code, out, _ = run(capsys, "validate", CURRENT)
    assert code == 1 and out.strip().endswith("12 sentences: COP-DIRECTION=1, HEADFINAL-FLAT=6, "
                                              "MARK-QUOTATIVE=1, NO-FLAT-VERB=3, TOPIC-DISLOCATED=1")
    code, out, _ = run(capsys, "validate", REVISED)
    assert code == 0 and out.strip() == "12 sentences: no findings"
    args = ["validate", CURRENT, "--format", "records"]
    for c in ("HEADFINAL-FLAT", "NO-FLAT-VERB", "TOPIC-DISLOCATED", "COP-DIRECTION", "MARK-QUOTATIVE"):
        args += ["--severity", f"{c}=warning"]
    code, out, _ = run(capsys, *args)
    assert code == 0 and len(out.splitlines()) == 12
    assert all(line.split("\t")[2] == "warning" for line in out.splitlines())


def test_validate_sejong(capsys):
    code, out, _ = run(capsys, "validate", "--sejong", SEJONG)
    assert code == 0 and "no findings" in out
    assert run(capsys, "validate", SEJONG)[0] == 2  # Sejong labels are not UD


def test_convert_sejong(capsys):
    code, out, _ = run(capsys, "convert", "--sejong", SEJONG)
    assert code == 0
    rels = [line.split("\t")[7] for line in out.splitlines() if line and not line.startswith("#")]
    assert rels == ["nsubj", "obl", "advmod", "conj", "obl", "obj", "acl", "root"]


def test_convert_sejong_unmapped(tmp_path, capsys):
    f = tmp_path / "x.conllu"
    f.write_text("1\t그\t그\tX\t_\t_\t2\tX\t_\t_\n2\t갔다\t가+았+다\tVERB\tvv+ep+ef\t_\t0\tVP\t_\t_\n\n",
                 encoding="utf-8")
    assert run(capsys, "convert", "--sejong", str(f))[0] == 2
    code, out, err = run(capsys, "convert", "--sejong", "--lax", str(f))
    assert code == 0 and "\tdep\t" in out and "warning" in err


def test_diff_self_and_sipda(capsys):
    code, out, _ = run(capsys, "diff", CURRENT, CURRENT)
    assert code == 0 and "changed edges: 0" in out and "labeled agreement: 100.00%" in out
    code, out, _ = run(capsys, "diff", SIPDA_TOP, str(SIPDA_BOTTOM), "--format", "records")
    assert code == 1
    lines = out.splitlines()
    assert lines[-3:] == ["summary\tchanged\t5", "summary\tuas\t20.00", "summary\tlas\t0.00"]


def test_diff_misaligned(capsys):
    code, _, err = run(capsys, "diff", CURRENT, SIPDA_TOP)
    assert code == 2 and "misaligned" in err


def raw_edges(text):
    return [(c[6], c[7]) for c in (line.split("\t") for line in text.splitlines())
            if len(c) == 10]


def test_diff_agreement_matches_recount(tmp_path, capsys):
    rng = random.Random(5)
    a = [random_tree(rng, sid=f"d{k}") for k in range(200)]
    b = [run_pipeline(t)[0] for t in a]
    fa, fb = tmp_path / "a.conllu", tmp_path / "b.conllu"
    fa.write_text(serialize_document(a), encoding="utf-8")
    fb.write_text(serialize_document(b), encoding="utf-8")
    ea, eb = raw_edges(fa.read_text(encoding="utf-8")), raw_edges(fb.read_text(encoding="utf-8"))
    uas = 100 * sum(x[0] == y[0] for x, y in zip(ea, eb)) / len(ea)
    las = 100 * sum(x == y for x, y in zip(ea, eb)) / len(ea)
    changed = sum(x != y for x, y in zip(ea, eb))
    _, out, _ = run(capsys, "diff", str(fa), str(fb), "--format", "records")
    summary = dict(line.split("\t")[1:] for line in out.splitlines() if line.startswith("summary"))
    assert int(summary["changed"]) == changed
    assert float(summary["uas"]) == pytest.approx(uas, abs=0.005)
    assert float(summary["las"]) == pytest.approx(las, abs=0.005)


def test_stats(tmp_path, capsys):
    code, out, _ = run(capsys, "stats", CURRENT, "--format", "records")
    assert code == 0 and "sentences\t12" in out.splitlines()
    empty = tmp_path / "e.conllu"
    empty.write_text("", encoding="utf-8")
    _, out, _ = run(capsys, "stats", str(empty), "--format", "records")
    assert "tokens\t0" in out and "rightward_pct\t0.00" in out
    _, out, _ = run(capsys, "stats", "--sejong", SEJONG, "--format", "records")
    assert "rightward_pct\t100.00" in out and "leftward\t0" in out.splitlines()
    assert run(capsys, "stats", CURRENT)[0] == 0


def test_corpus_stats_counts():
    stats = corpus_stats(load("sipda_revised.conllu"))
    assert (stats["sentences"], stats["tokens"], stats["leftward"], stats["rightward"]) == (1, 5, 0, 4)


def test_frames(tmp_path, capsys):
    assert run(capsys, "frames", FRAME_SENTS, "--lexicon", str(FRAMES))[0] == 0
    mutated = tmp_path / "m.conllu"
    mutated.write_text(open(FRAME_SENTS, encoding="utf-8").read().replace("\tobl:arg\t", "\tobl\t"),
                       encoding="utf-8")
    code, out, _ = run(capsys, "frames", str(mutated), "--lexicon", str(FRAMES), "--format", "records")
    assert code == 1 and len(out.splitlines()) == 2
    assert run(capsys, "frames", FRAME_SENTS)[0] == 2  # --lexicon is required
    bad = tmp_path / "bad.txt"
    bad.write_text("not a frame\n", encoding="utf-8")
    assert run(capsys, "frames", FRAME_SENTS, "--lexicon", str(bad))[0] == 2
    assert run(capsys, "frames", SEJONG, "--sejong", "--lexicon", str(FRAMES))[0] == 0


def test_jobs_output_identical(tmp_path, capsys):
    rng = random.Random(9)
    corpus = tmp_path / "c.conllu"
    corpus.write_text(serialize_document([random_tree(rng, 10, f"j{k}") for k in range(300)]), encoding="utf-8")
    outs = []
    for jobs in ("1", "8"):
        target = tmp_path / f"out{jobs}"
        assert run(capsys, "convert", str(corpus), "--jobs", jobs, "-o", str(target))[0] == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]


def test_ordered_map_with_real_pool():
    rng = random.Random(13)
    trees = [random_tree(rng, sid=f"p{k}") for k in range(60)]
    state = {"conversion": ConversionConfig()}
    assert ordered_map(_convert_one, trees, state, 3, cap=False) == ordered_map(_convert_one, trees, state, 1)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "korean_ud", "convert", SIPDA_TOP], capture_output=True)
    assert proc.returncode == 0 and proc.stdout == SIPDA_BOTTOM.read_bytes()
