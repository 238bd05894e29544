"""Export and verify commands.

    mrpw-export export alexnet --out weights/alexnet.mrpw [--init random --seed 7]
    mrpw-export verify weights/alexnet.mrpw

``export`` writes the weight container plus a ``<stem>.golden.mrpw``
sibling with reference activations.  ``verify`` reloads both, recomputes
the activations in torch, and fails (exit 1) on any per-block max-abs
delta above 1e-6.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import container
from .backbones import UnsupportedBackbone, build_backbone, expected_taps
from .golden import golden_entries, image_digest, run_manifest

VERIFY_TOL = 1e-6


def golden_path(out_path: Path) -> Path:
    return out_path.parent / (out_path.stem + ".golden" + out_path.suffix)


def cmd_export(args) -> int:
    try:
        manifest, entries = build_backbone(args.backbone, init=args.init,
                                           seed=args.seed)
    except UnsupportedBackbone as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    golden = golden_entries(manifest, entries)
    manifest["golden_digest"] = image_digest(golden["golden/input"])

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    crc = container.write(out, manifest, entries)

    taps = sum(1 for l in manifest["layers"] if l["block_tap"])
    golden_manifest = {
        "backbone": manifest["backbone"],
        "kind": "golden-activations",
        "blocks": taps,
        "source_framework": manifest["source_framework"],
        "golden_digest": manifest["golden_digest"],
        "weights_crc32": crc,
    }
    gpath = golden_path(out)
    container.write(gpath, golden_manifest, golden)

    print(f"backbone: {manifest['backbone']}")
    print(f"blocks (B): {taps}")
    print(f"payload crc32: 0x{crc:08X}")
    print(f"entries: {len(entries)}")
    print(f"wrote {out} and {gpath}")
    if taps != expected_taps(manifest["backbone"]):
        print("error: unexpected tap count", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args) -> int:
    path = Path(args.path)
    try:
        manifest, entries, crc = container.read(path)
    except container.ContainerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    gpath = golden_path(path)
    try:
        gmanifest, golden, _ = container.read(gpath)
    except FileNotFoundError:
        print(f"error: golden sibling {gpath} not found", file=sys.stderr)
        return 1
    except container.ContainerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    taps = sum(1 for l in manifest["layers"] if l["block_tap"])
    failures = 0
    for prefix in ("golden", "golden_x2"):
        key = f"{prefix}/input"
        if key not in golden:
            print(f"error: golden file lacks entry {key!r}", file=sys.stderr)
            return 1
        recomputed = run_manifest(manifest, entries, golden[key])
        if len(recomputed) != taps:
            print(f"error: recomputed {len(recomputed)} blocks, manifest "
                  f"declares {taps}", file=sys.stderr)
            return 1
        for i, block in enumerate(recomputed, start=1):
            name = f"{prefix}/block{i}"
            if name not in golden:
                print(f"error: golden file lacks entry {name!r}",
                      file=sys.stderr)
                return 1
            delta = float(np.max(np.abs(block - golden[name])))
            status = "ok" if delta <= VERIFY_TOL else "FAIL"
            if delta > VERIFY_TOL:
                failures += 1
            print(f"{name}: max-abs delta {delta:.3e} [{status}]")
    print(f"backbone: {manifest['backbone']}, blocks (B): {taps}, "
          f"payload crc32: 0x{crc:08X}")
    if failures:
        print(f"error: {failures} block(s) above {VERIFY_TOL}",
              file=sys.stderr)
        return 1
    print("verify: PASS")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mrpw-export",
        description="Dump a torchvision backbone into the MRPW container")
    sub = parser.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("export")
    p_exp.add_argument("backbone", help="alexnet, squeezenet, or vgg16")
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--init", choices=("pretrained", "random"),
                       default="pretrained")
    p_exp.add_argument("--seed", type=int, default=0,
                       help="seed for --init random")
    p_exp.set_defaults(fn=cmd_export)

    p_ver = sub.add_parser("verify")
    p_ver.add_argument("path")
    p_ver.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
