"""Re-record the replay fixtures for the hermetic end-to-end test.

Runs the e2e pipeline in ``record`` mode against the scripted stub service
(no network) and rewrites tests/fixtures/e2e/fixtures. Also regenerates the
debug target inputs from the comparator seed and the
thought-selection scenarios under tests/fixtures/selection.

    python3 scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import re
import shutil
import sys
import tempfile
from pathlib import Path

import httpx

sys.path.insert(0, str(Path(__file__).resolve().parent))

import hdldebug.cli as cli  # noqa: E402
from e2e_pipeline import CHAT_MODEL, E2E, run_pipeline  # noqa: E402
from hdldebug.config import Config  # noqa: E402
from hdldebug.knowledge import default_error_db  # noqa: E402
from hdldebug.llm.prompts import CORRECT_CUE  # noqa: E402
from hdldebug.llm.transport import Transport, chat_response  # noqa: E402
from hdldebug.minihdl import check, dump_jsonl, format_message, get_op, load_jsonl, mutate  # noqa: E402
from hdldebug.thoughtforge import ThoughtParams, build_training_set  # noqa: E402
from hdldebug.vectorize import HashEmbedder, build_index  # noqa: E402
from stub_service import StubService  # noqa: E402

ENDPOINT = "http://stub.invalid"


def write_debug_target(stub: StubService) -> None:
    seed = (Path(cli.shipped_seed_dir()) / "comparator.mhdl").read_text(encoding="utf-8")
    buggy, _ = mutate(seed, get_op("delete_assignment"), 11)
    debug = E2E / "debug"
    debug.mkdir(parents=True, exist_ok=True)
    (debug / "target.buggy.mhdl").write_text(buggy, encoding="utf-8")
    (debug / "target.errors.txt").write_text(format_message(check(buggy)), encoding="utf-8")
    (debug / "target.ref.mhdl").write_text(seed, encoding="utf-8")
    stub.teach(buggy, seed)


# thought-selection scenarios: instance id -> edit distance of each sample's prediction
SELECTION = {"a": ("mux2.drop_semicolon.0", [5, 2, 7]), "b": ("mux2.probe_init_zero.0", [3, 3])}


class DistanceStub:
    """Answers sample j with thought "candidate j"; its prediction sits d_j token insertions from correct."""

    def __init__(self, correct: str, distances):
        self.correct, self.distances = correct, distances

    def handler(self, request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        user = body["messages"][-1]["content"]
        if user.rstrip().endswith(CORRECT_CUE):
            j = int(re.search(r"candidate (\d+)", user).group(1))
            code = self.correct + " ".join(["pad"] * self.distances[j]) + "\n"
            return httpx.Response(200, json=chat_response(f"```mhdl\n{code}```"))
        return httpx.Response(200, json=chat_response(f"Analysis candidate {body['seed']}."))


def record_selection(dataset) -> None:
    root = E2E.parent / "selection"
    shutil.rmtree(root, ignore_errors=True)
    root.mkdir(parents=True)
    by_id = {inst.id: inst for inst in dataset}
    for name, (iid, distances) in SELECTION.items():
        inst = by_id[iid]
        dump_jsonl([inst], root / f"{name}.jsonl")
        stub = DistanceStub(inst.correct, distances)
        transport = Transport("record", ENDPOINT, root / "fixtures", chat_model=CHAT_MODEL)
        transport.client = httpx.Client(transport=httpx.MockTransport(stub.handler), base_url=ENDPOINT)
        index = build_index([inst], HashEmbedder(Config().dense_dim))
        result = build_training_set(
            [inst], index, default_error_db(), transport, HashEmbedder(Config().dense_dim),
            params=ThoughtParams(n_thoughts=len(distances)),
        )
        assert not result.failures, result.failures


def main() -> int:
    stub = StubService()
    write_debug_target(stub)
    fixtures = E2E / "fixtures"
    shutil.rmtree(fixtures, ignore_errors=True)

    real_make = cli.make_transport

    def make_transport(cfg):
        transport = real_make(cfg)
        transport.client = stub.client(ENDPOINT)
        return transport

    cli.make_transport = make_transport
    with tempfile.TemporaryDirectory() as tmp:
        args = ["--transport", "record", "--endpoint", ENDPOINT, "--fixtures", str(fixtures)]
        out = run_pipeline(Path(tmp), args)
        record_selection(load_jsonl(Path(tmp) / "dataset.jsonl"))
    print(f"recorded {len(list(fixtures.glob('*.json')))} fixtures from {stub.requests} requests")
    print(out["eval.json"].decode())
    return 0


if __name__ == "__main__":
    sys.exit(main())
