"""End-to-end CLI coverage: exit codes, artifact flow, output grammar."""

import contextlib
import io
import json
import re
import shutil
import subprocess

import pytest

from claimtrust import cli
from claimtrust.artifacts import read_jsonl, write_jsonl


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main(argv)
    return code, out.getvalue(), err.getvalue()


def _ok(argv):
    code, out, err = _run(argv)
    assert code == 0, f"{argv} failed: {err or out}"
    return out


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One full mock pipeline run shared by the read-only tests below."""
    root = tmp_path_factory.mktemp("cli")
    paths = {
        "root": root,
        "corpus": str(root / "corpus.jsonl"),
        "claims": str(root / "claims.jsonl"),
        "claim_index": str(root / "claims.idx"),
        "doc_index": str(root / "docs.idx"),
        "pairs": str(root / "pairs.jsonl"),
        "relations": str(root / "relations.jsonl"),
        "edges": str(root / "edges.jsonl"),
        "scores": str(root / "scores.jsonl"),
        "qa": str(root / "qa.jsonl"),
    }
    outputs = {}
    outputs["ingest"] = _ok(
        ["ingest", "--synthetic", "6", "--seed", "3", "--out", paths["corpus"]]
    )
    outputs["extract"] = _ok(
        ["extract", "--corpus", paths["corpus"], "--out", paths["claims"]]
    )
    outputs["embed"] = _ok(
        [
            "embed", "--kind", "claims",
            "--claims", paths["claims"], "--out", paths["claim_index"],
        ]
    )
    _ok(
        [
            "embed", "--kind", "documents",
            "--corpus", paths["corpus"], "--out", paths["doc_index"],
        ]
    )
    outputs["pairs"] = _ok(
        [
            "pairs", "--index", paths["claim_index"], "--claims", paths["claims"],
            "--top-k", "30", "--out", paths["pairs"],
        ]
    )
    outputs["classify"] = _ok(
        [
            "classify", "--pairs", paths["pairs"], "--claims", paths["claims"],
            "--out", paths["relations"],
        ]
    )
    outputs["graph"] = _ok(
        [
            "graph", "--corpus", paths["corpus"], "--claims", paths["claims"],
            "--relations", paths["relations"], "--out", paths["edges"],
        ]
    )
    outputs["rank"] = _ok(
        [
            "rank", "--corpus", paths["corpus"], "--graph", paths["edges"],
            "--out", paths["scores"],
        ]
    )
    write_jsonl(
        paths["qa"],
        [
            {"question": "What does the report say?", "expected": "reports"},
            {"question": "Anything else?", "expected": "no such phrase zzz"},
        ],
    )
    paths["outputs"] = outputs
    return paths


def test_stage_messages(workdir):
    out = workdir["outputs"]
    assert out["ingest"].startswith("Ingested 6 documents (2 trusted)")
    assert re.match(r"Extracted \d+ claims from 6 documents", out["extract"])
    assert "(dim 64)" in out["embed"]
    assert "(top_k 30)" in out["pairs"]
    assert re.match(r"Classified \d+/\d+ pairs", out["classify"])
    assert "Graph over 6 documents" in out["graph"]


def test_artifacts_written(workdir):
    corpus = read_jsonl(workdir["corpus"])
    assert len(corpus) == 6
    assert sum(1 for d in corpus if d["seed"] == "trusted") == 2
    for claim in read_jsonl(workdir["claims"]):
        assert set(claim) == {"claim_id", "doc_id", "ordinal", "text"}
    scores = read_jsonl(workdir["scores"])
    assert [s["doc_id"] for s in scores] == [f"{i:04d}" for i in range(1, 7)]
    assert all(0.0 <= s["score"] <= 1.0 for s in scores)
    stats_blob = json.loads((workdir["root"] / "relations.jsonl.stats.json").read_text())
    assert stats_blob["pairs_total"] == len(read_jsonl(workdir["pairs"]))


def test_rank_report_grammar(workdir):
    lines = workdir["outputs"]["rank"].splitlines()
    assert re.fullmatch(
        r"Converged at round \d+, quantity of change: [0-9.e+-]+", lines[0]
    )
    for line in lines[1:7]:
        assert re.fullmatch(r"Document \d{4} 's score: \d\.\d{4}", line)


def test_rank_rerun_is_byte_identical(workdir, tmp_path):
    again = str(tmp_path / "scores2.jsonl")
    _ok(["rank", "--corpus", workdir["corpus"], "--graph", workdir["edges"], "--out", again])
    first = (workdir["root"] / "scores.jsonl").read_bytes()
    assert (tmp_path / "scores2.jsonl").read_bytes() == first


def test_rank_two_node_support_fixture(tmp_path):
    corpus = str(tmp_path / "corpus.jsonl")
    edges = str(tmp_path / "edges.jsonl")
    write_jsonl(
        corpus,
        [
            {"doc_id": "0001", "title": "A", "body": "Vetted.", "published": None,
             "seed": "trusted"},
            {"doc_id": "0002", "title": "B", "body": "Echoes A.", "published": None,
             "seed": "unknown"},
        ],
    )
    write_jsonl(edges, [{"from": "0001", "to": "0002", "weight": 1.0, "sign": "+"}])
    out = _ok(["rank", "--corpus", corpus, "--graph", edges,
               "--out", str(tmp_path / "scores.jsonl")])
    assert "Document 0001 's score: 0.9611" in out
    assert "Document 0002 's score: 0.9085" in out


def test_rank_on_edgeless_graph_settles_immediately(tmp_path):
    corpus_in = tmp_path / "raw.jsonl"
    write_jsonl(
        str(corpus_in),
        [
            {"doc_id": f"{i:04d}", "title": f"T{i}", "body": "Nothing links here.",
             "published": "2017-06-01", "seed": "unknown"}
            for i in range(1, 4)
        ],
    )
    corpus = str(tmp_path / "corpus.jsonl")
    claims = str(tmp_path / "claims.jsonl")
    relations = str(tmp_path / "relations.jsonl")
    edges = str(tmp_path / "edges.jsonl")
    _ok(["ingest", str(corpus_in), "--out", corpus])
    write_jsonl(claims, [])
    write_jsonl(relations, [])
    _ok(["graph", "--corpus", corpus, "--claims", claims, "--relations", relations,
         "--out", edges])
    out = _ok(["rank", "--corpus", corpus, "--graph", edges,
               "--out", str(tmp_path / "scores.jsonl")])
    lines = out.splitlines()
    assert lines[0] == "Converged at round 1, quantity of change: 0.0"
    assert lines[1:4] == [f"Document {i:04d} 's score: 0.5000" for i in range(1, 4)]


def test_set_override_changes_scores(workdir, tmp_path):
    out = str(tmp_path / "alt.jsonl")
    _ok(
        [
            "--set", "trust.alpha=0.3",
            "rank", "--corpus", workdir["corpus"], "--graph", workdir["edges"],
            "--out", out,
        ]
    )
    assert read_jsonl(out) != read_jsonl(workdir["scores"])


def test_rerank_query_prints_ranking(workdir):
    out = _ok(
        [
            "rerank", "--scores", workdir["scores"],
            "--index", workdir["doc_index"], "--query", "tram ridership",
            "--limit", "4",
        ]
    )
    lines = out.splitlines()
    assert len(lines) == 4
    for rank, line in enumerate(lines, start=1):
        assert re.fullmatch(
            rf"{rank}\. \d{{4}}  combined \d\.\d{{4}}  "
            rf"sim_norm \d\.\d{{4}}  trust \d\.\d{{4}}",
            line,
        )


def test_rerank_candidates_file(workdir, tmp_path):
    candidates = str(tmp_path / "cand.jsonl")
    write_jsonl(
        candidates,
        [
            {"doc_id": "0001", "similarity": 0.4},
            {"doc_id": "0002", "similarity": 0.3},
        ],
    )
    out_path = str(tmp_path / "ranked.jsonl")
    out = _ok(
        [
            "rerank", "--scores", workdir["scores"], "--candidates", candidates,
            "--mode", "vanilla", "--out", out_path,
        ]
    )
    assert "Reranked 2 documents (vanilla)" in out
    ranked = read_jsonl(out_path)
    assert ranked[0]["doc_id"] == "0001" and ranked[0]["rank"] == 1


def test_eval_prints_table(workdir):
    out = _ok(
        [
            "eval", "--corpus", workdir["corpus"], "--index", workdir["doc_index"],
            "--scores", workdir["scores"], "--qa", workdir["qa"],
        ]
    )
    lines = out.splitlines()
    assert lines[0] == "Mode | Substring Accuracy | LLM Avg Score"
    assert re.fullmatch(r"vanilla \| 0\.500 \| \d\.\d{5}", lines[1])
    assert re.fullmatch(r"score \| 0\.500 \| \d\.\d{5}", lines[2])


def test_stats_output(workdir):
    out = _ok(
        [
            "stats", "--corpus", workdir["corpus"], "--claims", workdir["claims"],
            "--graph", workdir["edges"], "--scores", workdir["scores"],
        ]
    )
    names = [line.split(":", 1)[0] for line in out.splitlines()]
    assert names == ["corpus", "claims", "graph", "scores"]
    assert "documents=6" in out.splitlines()[0]


def test_config_file_controls_provider(tmp_path):
    cfg = tmp_path / "claimtrust.conf"
    cfg.write_text("provider.dim = 32\n# comment line\n")
    corpus = str(tmp_path / "c.jsonl")
    _ok(["ingest", "--synthetic", "2", "--out", corpus])
    out = _ok(
        [
            "--config", str(cfg),
            "embed", "--kind", "documents", "--corpus", corpus,
            "--out", str(tmp_path / "d.idx"),
        ]
    )
    assert "(dim 32)" in out


def test_ingest_csv_and_skip_counter(tmp_path):
    src = tmp_path / "corpus.csv"
    src.write_text(
        "doc_id,title,body,published,seed\n"
        "0001,A,Something happened.,2031-01-05,trusted\n"
        "0002,B,,,\n"
    )
    out = str(tmp_path / "corpus.jsonl")
    code, stdout, _ = _run(["ingest", str(src), "--out", out])
    assert code == 0
    assert "Ingested 1 documents (1 trusted)" in stdout
    assert "rows_skipped_empty_body: 1" in stdout
    assert len(read_jsonl(out)) == 1


def test_ingest_raw_pair(tmp_path):
    (tmp_path / "True.csv").write_text(
        'title,text,subject,date\nOne,Alpha statement.,tag,"May 30, 2017"\n'
    )
    (tmp_path / "Fake.csv").write_text(
        "title,text,subject,date\nTwo,Beta statement.,tag,2017-06-01\nThree,,tag,2017-06-02\n"
    )
    out = str(tmp_path / "corpus.jsonl")
    stdout = _ok(
        [
            "ingest", "--true", str(tmp_path / "True.csv"),
            "--fake", str(tmp_path / "Fake.csv"), "--out", out,
        ]
    )
    assert "Ingested 2 documents (1 trusted)" in stdout
    assert "rows_skipped_empty_body: 1" in stdout
    records = read_jsonl(out)
    assert [r["doc_id"] for r in records] == ["0000", "0001"]
    assert records[0]["published"] == "2017-05-30"

    with pytest.raises(SystemExit) as excinfo:
        _run(["ingest", "--true", str(tmp_path / "True.csv"), "--out", out])
    assert excinfo.value.code == 64


def test_ingest_problems_block_output(tmp_path):
    src = tmp_path / "bad.jsonl"
    record = {"doc_id": "0001", "title": "t", "body": "b.", "published": None, "seed": "unknown"}
    write_jsonl(str(src), [record, record])
    out = tmp_path / "canonical.jsonl"
    code, _, err = _run(["ingest", str(src), "--out", str(out)])
    assert code == 1
    assert "duplicate id" in err
    assert not out.exists()


def test_invalid_inputs_exit_1(tmp_path):
    code, _, err = _run(["ingest", str(tmp_path / "corpus.txt"), "--out", "x"])
    assert code == 1 and "unsupported corpus format" in err

    code, _, err = _run(
        ["extract", "--corpus", str(tmp_path / "missing.jsonl"), "--out", "x"]
    )
    assert code == 1

    code, _, err = _run(
        ["--set", "bogus.key=1", "ingest", "--synthetic", "2", "--out", "x"]
    )
    assert code == 1 and "unknown config key" in err

    code, _, err = _run(["--set", "noequals", "ingest", "--synthetic", "2", "--out", "x"])
    assert code == 1 and "key=value" in err


def test_usage_errors_exit_64(tmp_path):
    cases = [
        [],
        ["--bogus-flag", "stats"],
        ["ingest", "--out", "x"],  # neither input nor --synthetic
        ["ingest", "a.csv", "--synthetic", "2", "--out", "x"],  # both
        ["embed", "--kind", "claims", "--corpus", "c", "--out", "x"],
        ["embed", "--kind", "documents", "--claims", "c", "--out", "x"],
        ["rerank", "--scores", "s"],  # no candidates and no index/query
        ["rerank", "--scores", "s", "--index", "i"],  # query missing
    ]
    for argv in cases:
        with pytest.raises(SystemExit) as excinfo:
            _run(argv)
        assert excinfo.value.code == 64, argv


def test_help_exits_zero():
    with pytest.raises(SystemExit) as excinfo:
        _run(["--help"])
    assert excinfo.value.code == 0


def test_unreachable_server_exits_2(workdir):
    code, _, err = _run(
        [
            "--server", "http://127.0.0.1:9",
            "stats", "--corpus", workdir["corpus"],
        ]
    )
    assert code == 2
    assert "cannot reach" in err


def test_console_script_installed():
    exe = shutil.which("claimtrust")
    assert exe, "claimtrust entry point not on PATH"
    done = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert done.returncode == 0
    assert "ingest" in done.stdout
