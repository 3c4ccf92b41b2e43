"""``hdldebug`` command line.

Exit codes: 0 success, 2 input/validation error, 3 configuration error,
4 transport error. ``debug`` exits 0 even when the repaired script still
fails the checker; the report's ``pass`` field carries that outcome.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence

from hdldebug.config import Config, ConfigError, load_config
from hdldebug.evalkit import RankedResult, RepairOutcome, evaluation_report
from hdldebug.knowledge import ErrorDb, ErrorDbError, default_error_db, load_error_db
from hdldebug.llm.prompts import extract_code, prompt_correct, prompt_infer_thought, prompt_single_call, split_single_call
from hdldebug.llm.transport import GenRequest, MissingFixture, Transport, TransportError, complete
from hdldebug.minihdl.checker import check, format_message
from hdldebug.minihdl.generate import RejectedSeed, dump_jsonl, generate_dataset, load_jsonl, load_seed_dir
from hdldebug.minihdl.mutate import OPS, get_op
from hdldebug.retrieval import Query, SelectionParams, search
from hdldebug.thoughtforge import Journal, ThoughtParams, build_training_set, export_sft
from hdldebug.vectorize.embed import FingerprintMismatch, HashEmbedder, RemoteEmbedder
from hdldebug.vectorize.index import IndexFormatError, build_index, load_index, save_index

log = logging.getLogger("hdldebug")

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_TRANSPORT = 0, 2, 3, 4

DEFAULTS = Config()


class InputError(ValueError):
    pass


# -- shared builders ---------------------------------------------------------


def shipped_seed_dir() -> Path:
    return Path(str(resources.files("hdldebug") / "data" / "seeds"))


def make_transport(cfg: Config) -> Transport:
    if cfg.transport in ("live", "record") and not cfg.endpoint:
        raise ConfigError(f"transport '{cfg.transport}' needs 'endpoint'")
    if cfg.transport in ("replay", "record") and not cfg.fixtures:
        raise ConfigError(f"transport '{cfg.transport}' needs 'fixtures'")
    return Transport(
        mode=cfg.transport,
        base_url=cfg.endpoint,
        fixtures=cfg.fixtures,
        chat_model=cfg.chat_model,
        embedding_model=cfg.embedding_model,
        timeout=cfg.timeout,
        max_in_flight=cfg.max_in_flight,
    )


def make_embedder(cfg: Config, transport: Optional[Transport] = None):
    if cfg.embedder == "hash":
        return HashEmbedder(cfg.dense_dim)
    if not cfg.endpoint and cfg.transport != "replay":
        raise ConfigError("remote embedder needs 'endpoint'")
    if cfg.transport == "replay" and not cfg.fixtures:
        raise ConfigError("remote embedder in replay mode needs 'fixtures'")
    return RemoteEmbedder(transport or make_transport(cfg), cfg.dense_dim, cfg.chunk_ns, cfg.embedding_model)


def load_db(cfg: Config) -> ErrorDb:
    return load_error_db(cfg.error_db) if cfg.error_db else default_error_db()


def selection(cfg: Config) -> SelectionParams:
    return SelectionParams(lam=cfg.lam, stage1_n=cfg.stage1_n, k=cfg.k)


def read_text(path: str) -> str:
    try:
        return Path(path).read_bytes().decode("utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def emit_json(obj, out: Optional[str] = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- debug flow ----------------------------------------------------------------


def run_debug(
    buggy: str,
    message: str,
    index,
    db: ErrorDb,
    embedder,
    transport: Transport,
    params: SelectionParams,
    single_call: bool = False,
    max_tokens: int = 2048,
) -> dict:
    """Retrieve, ask for a thought, ask for the correction, then check it."""
    bundle = search(index, Query(buggy, message), params, db, embedder)
    code_rag = [e.instance for e in bundle.code_rag.entries]
    if single_call:
        reply = complete(transport, GenRequest(prompt_single_call(buggy, message, bundle.doc_rag, code_rag), 0.0, max_tokens))
        thought, code = split_single_call(reply)
    else:
        thought = complete(
            transport, GenRequest(prompt_infer_thought(buggy, message, bundle.doc_rag, code_rag), 0.0, max_tokens)
        )
        reply = complete(
            transport, GenRequest(prompt_correct(buggy, message, bundle.doc_rag, code_rag, thought), 0.0, max_tokens)
        )
        code = extract_code(reply)
    diags = check(code)
    return {
        "thought": thought,
        "code": code,
        "pass": not diags,
        "diagnostics": [d.format() for d in diags],
        "doc_rag": bundle.doc_rag.to_dict(),
        "code_rag": [{"id": e.instance.id, "sim": e.sim} for e in bundle.code_rag.entries],
        "clamped": bundle.code_rag.clamped,
    }


# -- commands ----------------------------------------------------------------


def cmd_gen(args, cfg: Config) -> int:
    seed_dir = Path(args.seeds) if args.seeds else shipped_seed_dir()
    if not seed_dir.is_dir():
        raise InputError(f"seed directory {seed_dir} does not exist")
    seeds = load_seed_dir(seed_dir)
    if not seeds:
        raise InputError(f"no .mhdl files in {seed_dir}")
    op_ids = args.ops.split(",") if args.ops else list(OPS)
    try:
        ops = [get_op(o.strip()) for o in op_ids]
    except KeyError as exc:
        raise InputError(str(exc)) from exc
    stats: Counter = Counter()
    instances = generate_dataset(seeds, args.per_seed, ops, args.rng_seed, stats)
    dump_jsonl(instances, Path(args.out))
    print(
        f"{len(instances)} instances from {len(seeds)} seeds x {len(ops)} ops "
        f"(not applicable {stats['not_applicable']}, accidental pass {stats['accidental_pass']}, "
        f"off target {stats['off_target']}, duplicate {stats['duplicate']}) -> {args.out}"
    )
    return EXIT_OK


def _load_dataset(path: str):
    try:
        data = load_jsonl(Path(path))
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read dataset {path}: {exc}") from exc
    if not data:
        raise InputError(f"dataset {path} is empty")
    return data


def cmd_index(args, cfg: Config) -> int:
    embedder = make_embedder(cfg)
    dataset = _load_dataset(args.dataset)
    index = build_index(dataset, embedder)
    save_index(index, args.out)
    print(f"indexed {len(index)} instances ({index.fingerprint}) -> {args.out}")
    return EXIT_OK


def _open_index(path: str, embedder):
    try:
        return load_index(path, embedder)
    except FileNotFoundError as exc:
        raise InputError(f"no index at {path}: {exc}") from exc


def _message_for(buggy: str, errors: Optional[str]) -> str:
    return read_text(errors) if errors else format_message(check(buggy))


def cmd_search(args, cfg: Config) -> int:
    embedder = make_embedder(cfg)
    index = _open_index(args.index, embedder)
    buggy = read_text(args.buggy)
    bundle = search(index, Query(buggy, _message_for(buggy, args.errors)), selection(cfg), load_db(cfg), embedder, args.exclude)
    if bundle.code_rag.clamped:
        print(f"warning: k={cfg.k} exceeds available candidates; returned {len(bundle.code_rag)}", file=sys.stderr)
    if args.json:
        emit_json(bundle.to_dict())
        return EXIT_OK
    for rec in bundle.doc_rag.entries:
        print(f"{rec.error_id}: {rec.description} | {rec.root_reason} | {rec.solution}")
    for code in bundle.doc_rag.unknown_codes:
        print(f"{code}: (no expert knowledge)")
    for rank, entry in enumerate(bundle.code_rag.entries, 1):
        print(f"{rank}. {entry.instance.id}  sim={entry.sim:.6f}  label={entry.instance.label}")
    return EXIT_OK


def _build(args, cfg: Config, journal_path: str):
    transport = make_transport(cfg)
    embedder = make_embedder(cfg, transport)
    index = _open_index(args.index, embedder)
    dataset = _load_dataset(args.dataset)
    params = ThoughtParams(n_thoughts=cfg.thoughts_l, temperature=cfg.temperature)
    result = build_training_set(
        dataset, index, load_db(cfg), transport, embedder, selection(cfg), params, Journal(journal_path)
    )
    print(
        f"{len(result.records)} records ({result.resumed} resumed), {len(result.failures)} failed",
        file=sys.stderr,
    )
    for iid, why in result.failures.items():
        print(f"  failed {iid}: {why}", file=sys.stderr)
    return result


def cmd_thoughts(args, cfg: Config) -> int:
    result = _build(args, cfg, args.out)
    return EXIT_TRANSPORT if result.failures else EXIT_OK


def cmd_export(args, cfg: Config) -> int:
    result = _build(args, cfg, args.journal)
    n = export_sft(result.records, args.out)
    print(f"exported {n} records -> {args.out}", file=sys.stderr)
    return EXIT_TRANSPORT if result.failures else EXIT_OK


def cmd_debug(args, cfg: Config) -> int:
    transport = make_transport(cfg)
    embedder = make_embedder(cfg, transport)
    index = _open_index(args.index, embedder)
    buggy = read_text(args.buggy)
    report = run_debug(
        buggy,
        _message_for(buggy, args.errors),
        index,
        load_db(cfg),
        embedder,
        transport,
        selection(cfg),
        single_call=args.single_call,
    )
    report["transport_calls"] = transport.calls
    if args.code_out:
        Path(args.code_out).write_text(report["code"], encoding="utf-8")
    if args.json or args.out:
        emit_json(report, args.out)
    else:
        print("== analysis ==")
        print(report["thought"])
        print("== corrected script ==")
        print(report["code"])
        print(f"== check: {'pass' if report['pass'] else 'FAIL'} ==")
        for d in report["diagnostics"]:
            print(d)
    return EXIT_OK


def _pred_samples(pred_dir: Path, name: str) -> List[str]:
    single = pred_dir / f"{name}.mhdl"
    if single.exists():
        return [read_text(str(single))]
    numbered = []
    for p in pred_dir.glob(f"{name}.*.mhdl"):
        tag = p.name[len(name) + 1 : -len(".mhdl")]
        if tag.isdigit():
            numbered.append((int(tag), p))
    return [read_text(str(p)) for _, p in sorted(numbered)] or [""]


def cmd_eval(args, cfg: Config) -> int:
    pred_dir, ref_dir = Path(args.pred), Path(args.refs)
    if not pred_dir.is_dir() or not ref_dir.is_dir():
        raise InputError("--pred and --refs must be directories")
    refs = sorted(ref_dir.glob("*.mhdl"))
    if not refs:
        raise InputError(f"no reference .mhdl files in {ref_dir}")
    outcomes, pairs = [], []
    for ref in refs:
        name = ref.name[: -len(".mhdl")]
        samples = _pred_samples(pred_dir, name)
        outcomes.append(RepairOutcome.checked(name, samples))
        pairs.append((samples[0], read_text(str(ref))))
    runtime = None
    if args.times:
        try:
            timing = json.loads(read_text(args.times))
            runtime = (timing["times"], timing["baseline"])
        except (ValueError, KeyError) as exc:
            raise InputError(f"bad timing file {args.times}: {exc}") from exc
    emit_json(evaluation_report(outcomes, pairs, runtime), args.out)
    return EXIT_OK


def cmd_eval_retrieval(args, cfg: Config) -> int:
    ks = sorted({int(k) for k in args.K.split(",")})
    if not ks or ks[0] < 1:
        raise InputError("-K values must be positive")
    try:
        rows = [json.loads(line) for line in read_text(args.queries).splitlines() if line.strip()]
    except ValueError as exc:
        raise InputError(f"bad query file: {exc}") from exc
    if not rows:
        raise InputError(f"query file {args.queries} is empty")
    embedder = make_embedder(cfg)
    index = _open_index(args.index, embedder)
    depth = max(ks)
    params = SelectionParams(lam=cfg.lam, stage1_n=max(cfg.stage1_n, depth), k=depth)
    db = load_db(cfg)
    results = []
    for row in rows:
        try:
            qid, buggy, message, label = row["id"], row["buggy"], row["message"], row["label"]
        except KeyError as exc:
            raise InputError(f"query row lacks {exc}") from exc
        bundle = search(index, Query(buggy, message), params, db, embedder, qid if args.exclude_self else None)
        results.append(RankedResult(qid, [e.instance.label for e in bundle.code_rag.entries], label))
    emit_json(evaluation_report(retrieval=(results, ks)), args.out)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def _config_epilog() -> str:
    d = DEFAULTS
    return (
        "configuration defaults (JSON --config keys; flags override the file):\n"
        f"  lambda={d.lam}  k={d.k}  stage1_n={d.stage1_n}  thoughts_l={d.thoughts_l}  "
        f"temperature={d.temperature}\n"
        f"  chunk_ns={d.chunk_ns}  embedder={d.embedder}  dense_dim={d.dense_dim}  "
        f"transport={d.transport}  max_in_flight={d.max_in_flight}\n"
        "  endpoint, chat_model, embedding_model, fixtures, error_db, index, dataset: unset\n"
        "API key is read from HDLDBG_API_KEY."
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdldebug",
        description="Generate, retrieve, repair and evaluate mini-HDL debugging data.",
        epilog=_config_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, epilog=_config_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(func=func)
        return p

    def retrieval_flags(p):
        p.add_argument("-k", type=int, dest="k", help=f"instances in the code RAG (default {DEFAULTS.k})")
        p.add_argument("--lambda", type=float, dest="lam", help=f"keyword weight in [0,1] (default {DEFAULTS.lam})")
        p.add_argument("--stage1-n", type=int, dest="stage1_n", help=f"stage-1 pool size (default {DEFAULTS.stage1_n})")
        p.add_argument("--embedder", choices=["hash", "remote"], help=f"(default {DEFAULTS.embedder})")
        p.add_argument("--dense-dim", type=int, dest="dense_dim", help=f"(default {DEFAULTS.dense_dim})")

    def transport_flags(p):
        p.add_argument("--transport", choices=["live", "replay", "record"], help=f"(default {DEFAULTS.transport})")
        p.add_argument("--fixtures", help="replay/record fixture directory")
        p.add_argument("--endpoint", help="service base URL")
        p.add_argument("--chat-model", dest="chat_model")

    p = add("gen", cmd_gen, "generate buggy/correct pairs from seed files")
    p.add_argument("--seeds", help="directory of .mhdl seeds (default: shipped seeds)")
    p.add_argument("--out", required=True)
    p.add_argument("--ops", help=f"comma-separated op ids (default: all of {','.join(OPS)})")
    p.add_argument("--per-seed", type=int, default=1, dest="per_seed", help="draws per (seed, op) (default 1)")
    p.add_argument("--rng-seed", type=int, default=0, dest="rng_seed", help="(default 0)")

    p = add("index", cmd_index, "build the keyword and semantic vector index")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    retrieval_flags(p)
    transport_flags(p)

    p = add("search", cmd_search, "retrieve document and code RAG for a buggy file")
    p.add_argument("--index", required=True)
    p.add_argument("--buggy", required=True)
    p.add_argument("--errors", help="error message file (default: run the checker)")
    p.add_argument("--exclude", help="instance id to leave out")
    p.add_argument("--json", action="store_true")
    retrieval_flags(p)

    for name, func, help_text in (
        ("thoughts", cmd_thoughts, "sample, score and journal repair thoughts"),
        ("export", cmd_export, "write the fine-tuning JSONL"),
    ):
        p = add(name, func, help_text)
        p.add_argument("--dataset", required=True)
        p.add_argument("--index", required=True)
        if name == "export":
            p.add_argument("--journal", required=True)
        p.add_argument("--out", required=True, help="journal path" if name == "thoughts" else "SFT JSONL path")
        p.add_argument("-L", type=int, dest="thoughts_l", help=f"thoughts per instance (default {DEFAULTS.thoughts_l})")
        p.add_argument("--temperature", type=float, help=f"(default {DEFAULTS.temperature})")
        retrieval_flags(p)
        transport_flags(p)

    p = add("debug", cmd_debug, "repair one buggy file")
    p.add_argument("--buggy", required=True)
    p.add_argument("--errors", help="error message file (default: run the checker)")
    p.add_argument("--index", required=True)
    p.add_argument("--single-call", action="store_true", dest="single_call")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--code-out", dest="code_out", help="write the corrected script here")
    retrieval_flags(p)
    transport_flags(p)

    p = add("eval", cmd_eval, "score repaired files against references")
    p.add_argument("--pred", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--times", help='JSON {"times": [...], "baseline": x}')
    p.add_argument("--out")

    p = add("eval-retrieval", cmd_eval_retrieval, "H@K, MAP@K, MRR@K over labelled queries")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("-K", default="1,3,10", help="comma-separated cutoffs (default 1,3,10)")
    p.add_argument("--exclude-self", action="store_true", dest="exclude_self")
    p.add_argument("--out")
    retrieval_flags(p)
    return parser


_OVERRIDABLE = (
    "lam", "k", "stage1_n", "thoughts_l", "temperature", "embedder", "dense_dim",
    "transport", "fixtures", "endpoint", "chat_model",
)


def resolve_config(args) -> Config:
    cfg = load_config(args.config)
    overrides = {name: getattr(args, name, None) for name in _OVERRIDABLE}
    k, n = overrides["k"], overrides["stage1_n"] or cfg.stage1_n
    if k is not None and k > n:
        # an explicit -k widens the stage-1 pool; the index size clamps it later
        print(f"warning: -k {k} exceeds stage1_n {n}; using stage1_n={k}", file=sys.stderr)
        overrides["stage1_n"] = k
    return cfg.with_overrides(**overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except (ConfigError, FingerprintMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingFixture as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except RejectedSeed as exc:
        print(f"rejected seed: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ErrorDbError, IndexFormatError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
