"""Command line: extract per-window features from a movie clip.

    affectextract extract --video clip.avi --audio clip.wav --out outdir

Produces <clip>_rgb.aff (one 2048-d row per frame), <clip>_flow.aff (one
2048-d row per 10-flow stack, n frames -> n - 10 rows), <clip>_audio.aff
(1,582 descriptors per 400 ms window, 40 ms hop), an annotations CSV
(copied, or zero-filled placeholder), and a dataset manifest consumable by
the affectfusion pipeline. Weight provenance lands in provenance.json.
"""

from __future__ import annotations

import argparse
import sys

from .job import ALL_MODALITIES, ExtractionJob, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="affectextract")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="extract features from one clip")
    p.add_argument("--video", required=True, help="video file (25 fps)")
    p.add_argument("--audio", default=None, help="sidecar WAV with the audio track")
    p.add_argument("--annotations", default=None,
                   help="frame,valence,arousal CSV to bundle into the manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--modalities", default=",".join(ALL_MODALITIES),
                   help="comma-separated subset of rgb,flow,audio")
    p.add_argument("--crop", choices=("center", "random"), default="center")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rgb-weights", default=None, help="ResNet-50 state dict")
    p.add_argument("--flow-weights", default=None, help="flow ResNet-101 state dict")
    p.add_argument("--batch-size", type=int, default=16)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExtractionJob(
            video_path=args.video,
            out_dir=args.out,
            audio_path=args.audio,
            annotations_path=args.annotations,
            modalities=tuple(m.strip() for m in args.modalities.split(",") if m.strip()),
            crop_policy=args.crop,
            seed=args.seed,
            rgb_weights=args.rgb_weights,
            flow_weights=args.flow_weights,
            batch_size=args.batch_size,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        manifest = run(job)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
