"""CLI: export a model's similarity maps for every extended-manifest row."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .errors import ProbeError
from .models import FAMILIES, ProbeSpec, save_reference_checkpoint
from .probe import run_probe


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avlocprobe",
        description="Export audio-visual similarity maps (AVSM) from a model checkpoint.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probe", help="run a checkpoint over an extended manifest")
    p.add_argument("--manifest", required=True, help="extended manifest (JSON lines)")
    p.add_argument("--media-root", default=None, help="base dir for manifest paths (default: manifest dir)")
    p.add_argument("--model-id", required=True)
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--mode", required=True, choices=("raw-cosine", "normalized-unit"))
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image-size", type=int, default=224)
    p.add_argument("--audio-seconds", type=float, default=5.0)
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--out", required=True)

    p = sub.add_parser("make-checkpoint", help="write a seeded reference checkpoint")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "make-checkpoint":
            path = save_reference_checkpoint(args.out, args.seed)
            print(f"wrote checkpoint {path}")
            return 0
        spec = ProbeSpec(
            model_id=args.model_id,
            family=args.family,
            mode=args.mode,
            checkpoint=args.checkpoint,
            image_size=args.image_size,
            audio_window_s=args.audio_seconds,
            sample_rate=args.sample_rate,
        )
        media_root = Path(args.media_root) if args.media_root else Path(args.manifest).parent
        log = run_probe(spec, args.manifest, media_root, args.out)
        print(
            f"probed {log.rows} rows with {log.model_id} in {log.wall_time_s:.1f}s "
            f"({log.clamped_values} values clamped)"
        )
        return 0
    except ProbeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
