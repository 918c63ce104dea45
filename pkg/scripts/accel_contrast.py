#!/usr/bin/env python3
"""Contrast the accelerator profile of a high-degree denoising graph with a
low-degree, large-domain stereo-style graph.

The denoising model (degree-16 patch factors over binary pixels) should be
compute-bound; the stereo scanline (pairwise factors over a 256-value
domain) should be I/O-bound, because its table bytes scale like the compute
of a degree-2 factor while a degree-16 factor does 8x more arithmetic per
table byte.
"""

import argparse

from fgkit.accel import compile_stream, parse_limits, profile_text, simulate
from fgkit.corpus import denoise_image, stereo_scanline
from fgkit.schedules import flooding_schedule


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--passes", type=int, default=2)
    ap.add_argument("--limits", default="")
    ap.add_argument("--denoise-side", type=int, default=8)
    ap.add_argument("--stereo-width", type=int, default=8)
    args = ap.parse_args()

    limits = parse_limits(args.limits)
    models = (
        ("denoise (degree 16, d=2)", denoise_image(side=args.denoise_side)),
        ("stereo  (degree 2, d=256)", stereo_scanline(width=args.stereo_width)),
    )
    ratios = {}
    for name, graph in models:
        schedule = flooding_schedule(graph)
        stream = compile_stream(graph, schedule, limits, passes=args.passes)
        report = simulate(stream, graph, limits).report
        ratios[name] = report.compute_cycles / report.io_cycles
        print(f"=== {name}")
        print(profile_text(report))
        print()
    names = list(ratios)
    print(
        f"compute/io: {names[0]} = {ratios[names[0]]:.3f}, "
        f"{names[1]} = {ratios[names[1]]:.3f}"
    )


if __name__ == "__main__":
    main()
