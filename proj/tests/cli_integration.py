#!/usr/bin/env python3
"""End-to-end checks for the gam command line binary.

Invoked with the binary path as the first argument; every scenario runs the
real executable against a scripted backend in a temporary directory.
"""

import json
import os
import pathlib
import socket
import subprocess
import sys
import tempfile
import time
import unittest
import urllib.error
import urllib.request

GAM = None

BASE_RULES = [
    {"match": "New session excerpt:", "response": "memo of the vault session"},
    {"match": "Session excerpt:", "response": "vault header"},
    {"match": "Request:\nbreak", "response": "this is not json"},
    {
        "match": "Available tools:",
        "response": json.dumps({"calls": [{"tool": "bm25", "query": "vault"}]}),
    },
    {
        "match": "Retrieved pages:",
        "response": json.dumps({"text": "the key is in box b7", "cited": [0]}),
    },
    {"match": "\n\nIntegration result:", "response": json.dumps({"sufficient": True})},
]

EVAL_RULES = [
    {"match": "New session excerpt:", "response": "a memo about the code session"},
    {"match": "Session excerpt:", "response": "code header"},
    {
        "match": "Available tools:",
        "response": json.dumps({"calls": [{"tool": "bm25", "query": "secret code"}]}),
    },
    {
        "match": "the secret code is 55",
        "response": json.dumps({"text": "the code is 55", "cited": [0]}),
    },
    {"match": "\n\nIntegration result:", "response": json.dumps({"sufficient": True})},
    {"match": "\n\nAnswer:", "response": "55"},
]


def run_gam(args, env_extra=None):
    env = os.environ.copy()
    for key in ("GAM_STORE", "GAM_BASE_URL", "GAM_API_KEY"):
        env.pop(key, None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [GAM, *args], capture_output=True, text=True, env=env, timeout=120
    )


class CliTest(unittest.TestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory(prefix="gam-cli-")
        self.addCleanup(tmp.cleanup)
        self.dir = pathlib.Path(tmp.name)
        self.rules = self.write_rules("rules.json", BASE_RULES)

    def write_rules(self, name, rules):
        path = self.dir / name
        path.write_text(json.dumps(rules))
        return path

    def write_jsonl(self, name, rows):
        path = self.dir / name
        path.write_text("".join(json.dumps(row) + "\n" for row in rows))
        return path

    def ingest(self, store, rows, extra=()):
        sessions = self.write_jsonl("sessions.jsonl", rows)
        return run_gam(
            ["ingest", str(sessions), "--store", str(store), "--rules", str(self.rules)]
            + list(extra)
        )

    def make_store(self):
        store = self.dir / "store"
        result = self.ingest(
            store,
            [
                {"id": 1, "content": "vault one holds the silver key"},
                {"id": 2, "content": "vault two holds the ledger"},
            ],
        )
        self.assertEqual(result.returncode, 0, result.stderr)
        return store

    def test_ingest_reports_counts_and_persists(self):
        store = self.make_store()
        manifest = json.loads((store / "manifest.json").read_text())
        self.assertEqual(manifest["page_count"], 2)
        self.assertEqual(manifest["memo_count"], 2)
        self.assertTrue((store / "pages.jsonl").exists())
        self.assertTrue((store / "memos.jsonl").exists())

        result = self.ingest(
            store, [{"id": 1, "content": "vault one holds the silver key"}]
        )
        self.assertEqual(result.returncode, 2)
        self.assertIn("error:", result.stderr)

    def test_malformed_session_row_leaves_no_store(self):
        store = self.dir / "store"
        result = self.ingest(
            store, [{"id": 1, "content": "vault one"}, {"id": 2}]
        )
        self.assertEqual(result.returncode, 2)
        self.assertIn("error: sessions row 2", result.stderr)
        self.assertFalse(store.exists())

    def test_failed_batch_leaves_store_untouched(self):
        store = self.make_store()
        before = (store / "pages.jsonl").read_bytes()
        result = self.ingest(
            store,
            [
                {"id": 3, "content": "vault three holds nothing"},
                {"id": 3, "content": "vault three holds nothing"},
            ],
        )
        self.assertEqual(result.returncode, 2)
        self.assertIn("error:", result.stderr)
        self.assertEqual((store / "pages.jsonl").read_bytes(), before)

    def test_research_prints_context_and_writes_trace(self):
        store = self.make_store()
        result = run_gam(
            [
                "research",
                "where is the key?",
                "--store",
                str(store),
                "--rules",
                str(self.rules),
            ]
        )
        self.assertEqual(result.returncode, 0, result.stderr)
        self.assertEqual(result.stdout, "the key is in box b7\n")
        trace = json.loads((store / "trace.json").read_text())
        self.assertEqual(trace["termination"], "sufficient")
        self.assertEqual(len(trace["iterations"]), 1)
        self.assertEqual(sorted(trace["iterations"][0]["new_page_ids"]), [0, 1])

    def test_aborted_research_exits_3_with_partial_trace(self):
        store = self.make_store()
        result = run_gam(
            [
                "research",
                "break everything",
                "--store",
                str(store),
                "--rules",
                str(self.rules),
            ]
        )
        self.assertEqual(result.returncode, 3)
        self.assertIn("research aborted: plan:", result.stderr)
        trace = json.loads((store / "trace.json").read_text())
        self.assertEqual(trace["original_request"], "break everything")
        self.assertEqual(trace["iterations"], [])

    def test_research_without_store_exits_2(self):
        result = run_gam(
            [
                "research",
                "where is the key?",
                "--store",
                str(self.dir / "absent"),
                "--rules",
                str(self.rules),
            ]
        )
        self.assertEqual(result.returncode, 2)
        self.assertIn("no store at", result.stderr)

    def test_eval_prints_table_and_writes_report(self):
        rules = self.write_rules("eval_rules.json", EVAL_RULES)
        dataset = self.write_jsonl(
            "dataset.jsonl",
            [
                {
                    "history": [
                        {"id": 1, "content": "the secret code is 55 and nothing else"}
                    ],
                    "question": "what is the code?",
                    "answers": ["55"],
                    "choices": ["55", "99"],
                    "gold_index": 0,
                }
            ],
        )
        report_path = self.dir / "report.json"
        result = run_gam(
            [
                "eval",
                str(dataset),
                "--mode",
                "gam",
                "--report",
                str(report_path),
                "--backend",
                "scripted",
                "--rules",
                str(rules),
            ]
        )
        self.assertEqual(result.returncode, 0, result.stderr)
        self.assertIn("mode=gam", result.stdout)
        self.assertIn("1.0000", result.stdout)
        report = json.loads(report_path.read_text())
        self.assertEqual(report["mode"], "gam")
        self.assertEqual(report["examples"], 1)
        self.assertEqual(report["mean_f1"], 1.0)
        self.assertEqual(report["accuracy"], 1.0)
        self.assertEqual(report["per_example"][0]["prediction"], "55")

    def test_config_file_env_and_flags_layer_in_order(self):
        rows = [{"id": 1, "content": " ".join(f"word{i}" for i in range(130))}]

        file_store = self.dir / "from-file"
        config = self.dir / "gam.conf"
        config.write_text(
            f"store_path = {file_store}\n"
            "backend_kind = scripted\n"
            f"scripted_rules = {self.rules}\n"
            "page_size = 64\n"
        )
        sessions = self.write_jsonl("layered.jsonl", rows)

        result = run_gam(["ingest", str(sessions), "--config", str(config)])
        self.assertEqual(result.returncode, 0, result.stderr)
        self.assertEqual(result.stdout, "1 sessions, 3 pages, 3 memos\n")
        self.assertTrue(file_store.exists())

        env_store = self.dir / "from-env"
        result = run_gam(
            ["ingest", str(sessions), "--config", str(config)],
            env_extra={"GAM_STORE": str(env_store)},
        )
        self.assertEqual(result.returncode, 0, result.stderr)
        self.assertTrue(env_store.exists())

        cli_store = self.dir / "from-flag"
        unused_env = self.dir / "unused-env"
        result = run_gam(
            [
                "ingest",
                str(sessions),
                "--config",
                str(config),
                "--store",
                str(cli_store),
                "--page-size",
                "32",
            ],
            env_extra={"GAM_STORE": str(unused_env)},
        )
        self.assertEqual(result.returncode, 0, result.stderr)
        self.assertEqual(result.stdout, "1 sessions, 5 pages, 5 memos\n")
        self.assertTrue(cli_store.exists())
        self.assertFalse(unused_env.exists())

    def test_serve_answers_http(self):
        store = self.make_store()
        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]

        proc = subprocess.Popen(
            [
                GAM,
                "serve",
                "--host",
                "127.0.0.1",
                "--port",
                str(port),
                "--store",
                str(store),
                "--rules",
                str(self.rules),
            ],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        try:
            base = f"http://127.0.0.1:{port}"
            deadline = time.monotonic() + 15
            body = None
            while time.monotonic() < deadline:
                try:
                    with urllib.request.urlopen(f"{base}/healthz", timeout=1) as res:
                        body = res.read().decode()
                    break
                except (urllib.error.URLError, ConnectionError):
                    time.sleep(0.05)
            self.assertEqual(body, "ok")
            with urllib.request.urlopen(f"{base}/v1/pages/0", timeout=5) as res:
                page = json.loads(res.read().decode())
            self.assertEqual(page["id"], 0)
            self.assertEqual(page["header"], "vault header")
        finally:
            proc.terminate()
            try:
                proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def test_serve_without_store_exits_2(self):
        result = run_gam(
            [
                "serve",
                "--store",
                str(self.dir / "absent"),
                "--rules",
                str(self.rules),
            ]
        )
        self.assertEqual(result.returncode, 2)
        self.assertIn("no store at", result.stderr)


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print("usage: cli_integration.py <path-to-gam>", file=sys.stderr)
        sys.exit(2)
    GAM = sys.argv.pop(1)
    unittest.main(verbosity=2)
