#!/usr/bin/env python3
"""Convert the raw Pubmed-Diabetes tab files to the canonical JSON-lines layout.

The raw distribution ships two files:

  Pubmed-Diabetes.NODE.paper.tab      one paper per line after two header
                                      lines; fields are `label=<k>` and
                                      sparse TF-IDF entries `w-<word>=<value>`
  Pubmed-Diabetes.DIRECTED.cites.tab  one citation per line after two header
                                      lines: `<id>  paper:<src>  |  paper:<dst>`

The word vocabulary (feature order) is taken from the NODE file's second
header line, which declares every `numeric:w-<word>:0.0` attribute; this
gives a stable feature index per word. Output is `<out>.nodes.jsonl` and
`<out>.edges.jsonl` ready for `fgn --format canonical`.

Usage:
  python3 scripts/pubmed_to_canonical.py \
      --nodes Pubmed-Diabetes.NODE.paper.tab \
      --cites Pubmed-Diabetes.DIRECTED.cites.tab \
      --out data/pubmed
"""

import argparse
import json
import sys


def parse_vocabulary(header_line):
    vocab = {}
    for token in header_line.strip().split("\t"):
        parts = token.split(":")
        if len(parts) >= 2 and parts[0] == "numeric" and parts[1].startswith("w-"):
            word = parts[1]
            if word not in vocab:
                vocab[word] = len(vocab)
    return vocab


def convert(nodes_path, cites_path, out_prefix):
    with open(nodes_path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if len(lines) < 3:
        sys.exit(f"{nodes_path}: expected two header lines plus records")
    vocab = parse_vocabulary(lines[1])
    if not vocab:
        sys.exit(f"{nodes_path}: no numeric w-* attributes declared on line 2")

    known_ids = set()
    nodes_out = open(f"{out_prefix}.nodes.jsonl", "w", encoding="utf-8")
    nodes_out.write(json.dumps({"feature_dim": len(vocab), "channels": 1}) + "\n")
    for line in lines[2:]:
        if not line.strip():
            continue
        fields = line.split("\t")
        paper_id = fields[0]
        label = None
        features = []
        for token in fields[1:]:
            key, sep, value = token.partition("=")
            if not sep:
                continue
            if key == "label":
                label = value
            elif key in vocab:
                features.append([vocab[key], float(value)])
        if label is None:
            sys.exit(f"{nodes_path}: paper {paper_id} has no label field")
        features.sort()
        known_ids.add(paper_id)
        record = {"id": paper_id, "label": label, "features": features}
        nodes_out.write(json.dumps(record) + "\n")
    nodes_out.close()

    dropped = 0
    written = 0
    with open(cites_path, encoding="utf-8") as handle, open(
        f"{out_prefix}.edges.jsonl", "w", encoding="utf-8"
    ) as edges_out:
        for lineno, line in enumerate(handle):
            if lineno < 2 or not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            refs = [f.split(":", 1)[1] for f in fields if f.startswith("paper:")]
            if len(refs) != 2:
                sys.exit(f"{cites_path}:{lineno + 1}: expected two paper:<id> fields")
            src, dst = refs
            if src not in known_ids or dst not in known_ids:
                dropped += 1
                continue
            edges_out.write(json.dumps({"src": src, "dst": dst}) + "\n")
            written += 1

    print(
        f"wrote {len(known_ids)} nodes ({len(vocab)} features) and {written} edges"
        + (f"; dropped {dropped} citation lines with unknown ids" if dropped else "")
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", required=True, help="Pubmed-Diabetes.NODE.paper.tab")
    parser.add_argument("--cites", required=True, help="Pubmed-Diabetes.DIRECTED.cites.tab")
    parser.add_argument("--out", required=True, help="output path prefix")
    args = parser.parse_args()
    convert(args.nodes, args.cites, args.out)


if __name__ == "__main__":
    main()
