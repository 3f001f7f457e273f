#!/usr/bin/env python3
"""Build a game manifest from a local level-corpus checkout.

    python scripts/build_manifest.py --corpus-root ~/corpora/vglc --game smb --out smb.json
"""

import argparse
import sys

from levelmix import vglc


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus-root", required=True, help="checkout directory")
    parser.add_argument("--game", required=True, choices=sorted(vglc.GAME_DIRS))
    parser.add_argument("--out", required=True)
    parser.add_argument("--levels-dir", default=None, help="override the level directory")
    parser.add_argument("--no-heuristic-types", action="store_true")
    args = parser.parse_args()
    path = vglc.build_manifest(
        args.corpus_root,
        args.game,
        args.out,
        levels_dir=args.levels_dir,
        heuristic_types=not args.no_heuristic_types,
    )
    size, d, count = vglc.ingest_summary(path)
    print(f"wrote {path}: vocab {size}, d {d}, {count} chunks")
    for delta in vglc.check_against_reference(args.game, size, d, count):
        print(f"warning: {delta}", file=sys.stderr)


if __name__ == "__main__":
    main()
