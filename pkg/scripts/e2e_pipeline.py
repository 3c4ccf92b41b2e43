"""The gen -> index -> thoughts -> export -> debug -> eval pipeline over the e2e inputs.

Shared by the fixture recorder and the hermetic end-to-end test so both issue
exactly the same requests.
"""

from __future__ import annotations

import shutil
from pathlib import Path
from typing import Dict, List

from hdldebug.cli import main

E2E = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "e2e"
THOUGHTS_L = 2
CHAT_MODEL = "stub-chat"

# artifacts compared byte-for-byte across runs
OUTPUTS = (
    "dataset.jsonl",
    "index/index.hdbg",
    "index/meta.json",
    "journal.jsonl",
    "sft.jsonl",
    "debug.json",
    "debug_single.json",
    "pred/target.mhdl",
    "eval.json",
)


def _run(argv: List[str]) -> None:
    code = main(argv)
    if code != 0:
        raise RuntimeError(f"hdldebug {' '.join(argv)} exited {code}")


def run_pipeline(work: Path, transport: List[str], e2e: Path = E2E) -> Dict[str, bytes]:
    """Run every stage inside ``work``; returns the artifact bytes by name."""
    work.mkdir(parents=True, exist_ok=True)
    w = lambda name: str(work / name)  # noqa: E731
    llm = transport + ["--chat-model", CHAT_MODEL]
    _run(["gen", "--seeds", str(e2e / "seeds"), "--out", w("dataset.jsonl"), "--rng-seed", "7"])
    _run(["index", "--dataset", w("dataset.jsonl"), "--out", w("index")])
    _run(["thoughts", "--dataset", w("dataset.jsonl"), "--index", w("index"), "--out", w("journal.jsonl"),
          "-L", str(THOUGHTS_L)] + llm)
    _run(["export", "--dataset", w("dataset.jsonl"), "--index", w("index"), "--journal", w("journal.jsonl"),
          "--out", w("sft.jsonl"), "-L", str(THOUGHTS_L)] + llm)
    (work / "pred").mkdir(exist_ok=True)
    (work / "refs").mkdir(exist_ok=True)
    debug = e2e / "debug"
    _run(["debug", "--buggy", str(debug / "target.buggy.mhdl"), "--errors", str(debug / "target.errors.txt"),
          "--index", w("index"), "--out", w("debug.json"), "--code-out", w("pred/target.mhdl")] + llm)
    _run(["debug", "--buggy", str(debug / "target.buggy.mhdl"), "--errors", str(debug / "target.errors.txt"),
          "--index", w("index"), "--single-call", "--out", w("debug_single.json")] + llm)
    shutil.copyfile(debug / "target.ref.mhdl", work / "refs" / "target.mhdl")
    _run(["eval", "--pred", w("pred"), "--refs", w("refs"), "--out", w("eval.json")])
    return {name: (work / name).read_bytes() for name in OUTPUTS}
