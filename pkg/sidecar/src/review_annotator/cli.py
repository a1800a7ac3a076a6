"""Batch annotator: sentences.jsonl in, annotations.jsonl out.

Input records: {doc_id, sentence_index, text}. Output: a header line
{schema, dim, model, created} followed by one record per sentence
{doc_id, sentence_index, embedding, aspect_probs, argument_probs} in the
input order. The file is written atomically (temp file + rename), and the
content is a pure function of the input plus the model string; only the
"created" header field varies between runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from .classifier import classify_types
from .encoder import DIM, EncoderUnavailable, embed_sentences

SCHEMA = "slate-lens/annotations/v1"

BATCH = 256


def read_sentences(path: Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            for field in ("doc_id", "sentence_index", "text"):
                if field not in rec:
                    raise ValueError(f"{path}:{lineno}: missing field {field!r}")
            records.append(rec)
    if not records:
        raise ValueError(f"{path}: no sentences")
    return records


def _fmt(x: float) -> float:
    # round-trip via repr keeps >= 9 significant digits in the JSON output
    return float(repr(float(x)))


def annotate_file(in_path: Path, out_path: Path, model: str) -> int:
    records = read_sentences(in_path)
    header = {
        "schema": SCHEMA,
        "dim": DIM,
        "model": model,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    fd, tmp = tempfile.mkstemp(dir=str(out_path.parent or Path(".")), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(json.dumps(header, sort_keys=True) + "\n")
            for start in range(0, len(records), BATCH):
                chunk = records[start:start + BATCH]
                texts = [r["text"] for r in chunk]
                embeddings = embed_sentences(texts, model=model)
                aspects, arguments = classify_types(texts)
                for rec, emb, asp, arg in zip(chunk, embeddings, aspects, arguments):
                    f.write(json.dumps({
                        "doc_id": rec["doc_id"],
                        "sentence_index": rec["sentence_index"],
                        "embedding": [_fmt(v) for v in emb],
                        "aspect_probs": [_fmt(v) for v in asp],
                        "argument_probs": [_fmt(v) for v in arg],
                    }, sort_keys=True) + "\n")
        os.replace(tmp, out_path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return len(records)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="review-annotator",
        description="Annotate sentences with embeddings and type probabilities",
    )
    parser.add_argument("--in", dest="in_path", required=True)
    parser.add_argument("--out", dest="out_path", required=True)
    parser.add_argument("--model", default="heuristic-v1")
    args = parser.parse_args(argv)
    try:
        n = annotate_file(Path(args.in_path), Path(args.out_path), args.model)
    except EncoderUnavailable as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"annotated {n} sentences -> {args.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
