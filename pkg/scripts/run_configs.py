"""Run bundled experiment configs through the CLI and summarize assertion results.

    python scripts/run_configs.py [--outdir results] [--threads 4] [names ...]
"""

from __future__ import annotations

import argparse
import contextlib
import io
import time
from pathlib import Path

from spectral_shrink.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="config file names under configs/ (default: all)")
    ap.add_argument("--outdir", default=str(ROOT / "results"))
    ap.add_argument("--threads", type=int)
    args = ap.parse_args()
    paths = [ROOT / "configs" / n for n in args.names] or sorted((ROOT / "configs").glob("*.json"))
    for path in paths:
        argv = ["simulate", str(path), "--outdir", str(Path(args.outdir) / path.stem), "--assert"]
        if args.threads:
            argv += ["--threads", str(args.threads)]
        buf = io.StringIO()
        start = time.perf_counter()
        with contextlib.redirect_stdout(buf):
            code = cli_main(argv)
        lines = buf.getvalue().splitlines()
        failed = [l for l in lines if l.startswith("FAIL")]
        print(f"{path.name}: exit {code}, {len(lines) - len(failed)}/{len(lines)} assertions pass, "
              f"{time.perf_counter() - start:.1f}s")
        for line in failed:
            print("   ", line)


if __name__ == "__main__":
    main()
