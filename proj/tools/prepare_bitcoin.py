#!/usr/bin/env python3
"""Convert the SNAP Bitcoin Alpha trust network into the atmgad CSV layout.

Input is soc-sign-bitcoinalpha.csv (optionally gzipped) with rows
SOURCE,TARGET,RATING,TIME.  Output goes to <out>/edges.csv, features.csv and
labels.csv, which is where the acceptance binary looks for criterion 8.

Labels: a node is fraudulent when the mean rating it receives is negative and
normal otherwise.  Nodes that were never rated are left unlabeled.

Features only use outgoing behaviour and degree counts, so the received
ratings that define the label never leak into the input.
"""

import argparse
import csv
import gzip
import math
import sys
from collections import defaultdict
from pathlib import Path


def read_rows(path):
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt", newline="") as f:
        for row in csv.reader(f):
            if not row or not row[0].lstrip("-").isdigit():
                continue
            src, dst, rating, ts = row[:4]
            yield int(src), int(dst), float(rating), int(float(ts))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", type=Path, help="soc-sign-bitcoinalpha.csv[.gz]")
    ap.add_argument("--out", type=Path, default=Path("data/bitcoin_alpha"))
    ap.add_argument("--time-unit", type=float, default=86400.0,
                    help="seconds per timestamp unit in the output (default: one day)")
    args = ap.parse_args(argv)

    rows = [r for r in read_rows(args.input) if r[0] != r[1]]
    if not rows:
        sys.exit(f"no edges read from {args.input}")

    ids = sorted({r[0] for r in rows} | {r[1] for r in rows})
    index = {raw: i for i, raw in enumerate(ids)}
    t0 = min(r[3] for r in rows)

    received = defaultdict(list)
    given = defaultdict(list)
    in_deg = defaultdict(int)
    out_deg = defaultdict(int)
    first = {}
    last = {}
    for src, dst, rating, ts in rows:
        s, d = index[src], index[dst]
        received[d].append(rating)
        given[s].append(rating)
        in_deg[d] += 1
        out_deg[s] += 1
        for v in (s, d):
            first[v] = min(first.get(v, ts), ts)
            last[v] = max(last.get(v, ts), ts)

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "edges.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["src", "dst", "timestamp"])
        for src, dst, _, ts in sorted(rows, key=lambda r: (r[3], r[0], r[1])):
            w.writerow([index[src], index[dst], int((ts - t0) // args.time_unit)])

    with open(args.out / "features.csv", "w", newline="") as f:
        w = csv.writer(f)
        for v in range(len(ids)):
            g = given.get(v, [])
            mean = sum(g) / len(g) if g else 0.0
            std = math.sqrt(sum((x - mean) ** 2 for x in g) / len(g)) if g else 0.0
            span = (last[v] - first[v]) / args.time_unit
            w.writerow([f"{math.log1p(out_deg[v]):.6f}", f"{math.log1p(in_deg[v]):.6f}",
                        f"{mean / 10:.6f}", f"{std / 10:.6f}", f"{math.log1p(span):.6f}"])

    fraud = labeled = 0
    with open(args.out / "labels.csv", "w", newline="") as f:
        w = csv.writer(f)
        for v in range(len(ids)):
            r = received.get(v)
            if not r:
                w.writerow([v, "?"])
                continue
            y = int(sum(r) / len(r) < 0)
            fraud += y
            labeled += 1
            w.writerow([v, y])

    print(f"{len(ids)} nodes, {len(rows)} edges, {labeled} labeled, {fraud} fraud -> {args.out}")


if __name__ == "__main__":
    main()
