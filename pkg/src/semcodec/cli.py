"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 backbone
adapter failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import adapters, container, metrics
from .bench import run_bench
from .errors import AdapterError, SemcodecError, UnknownBackbone
from .imageio import read_ppm, write_ppm
from .segmap import SegMap, gen_voronoi
from .semantics import read_semz, write_semz

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ADAPTER = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _read_map(path) -> SegMap:
    return SegMap.from_bytes(Path(path).read_bytes())


def _emit(records, report):
    lines = "".join(json.dumps(r) + "\n" for r in records)
    if report:
        with open(report, "a") as f:
            f.write(lines)
    sys.stdout.write(lines)


def _registry(args):
    reg = adapters.default_registry()
    for id_, enc, dec in args.adapter or ():
        adapters.register_external_adapter(id_, enc, dec, registry=reg, suffix=args.adapter_suffix)
    return reg


def cmd_gen_map(args):
    m = gen_voronoi(args.w, args.h, args.seeds, args.classes, args.seed)
    Path(args.output).write_bytes(m.to_bytes())


def cmd_encode_sem(args):
    sem = _read_map(args.input)
    inst = _read_map(args.inst) if args.inst else None
    Path(args.output).write_bytes(write_semz(sem, inst, args.epsilon))


def cmd_decode_sem(args):
    sem, inst = read_semz(Path(args.input).read_bytes())
    Path(args.output).write_bytes(sem.to_bytes())
    if args.inst_out and inst is not None:
        Path(args.inst_out).write_bytes(inst.to_bytes())


def cmd_compress(args):
    reg = _registry(args)
    img = read_ppm(args.input)
    sem = _read_map(args.sem)
    inst = _read_map(args.inst) if args.inst else None
    f = container.compress(img, sem, inst, reg.get_adapter(args.backbone), args.quality, args.epsilon)
    container.write_container(args.output, f)


def cmd_decompress(args):
    f = container.read_container(args.input)
    img, sem, inst = container.decompress(f, _registry(args))
    write_ppm(args.output, img)
    if args.sem_out:
        Path(args.sem_out).write_bytes(sem.to_bytes())
    if args.inst_out and inst is not None:
        Path(args.inst_out).write_bytes(inst.to_bytes())


def cmd_metrics(args):
    a, b = read_ppm(args.original), read_ppm(args.reconstruction)
    f = container.read_container(args.container) if args.container else None
    rep = metrics.evaluate(a, b, f)
    if args.report:
        with open(args.report, "a") as fh:
            fh.write(rep.to_json() + "\n")
    print(rep.to_json())


def cmd_bench(args):
    _emit(run_bench(args.maps, args.w, args.h, args.seeds, args.classes, args.seed, not args.no_baseline), args.report)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="semcodec", description="Segmentation-map codec and two-stream image container.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def adapter_opts(sp):
        sp.add_argument(
            "--adapter", nargs=3, action="append", metavar=("ID", "ENCODE_CMD", "DECODE_CMD"),
            help="register an external backbone; templates use {in}, {out}, {q}",
        )
        sp.add_argument("--adapter-suffix", default=".bin", help="file suffix for external payloads")

    g = sub.add_parser("gen-map", help="write a synthetic Voronoi map (SMAP)")
    g.add_argument("--w", type=int, required=True)
    g.add_argument("--h", type=int, required=True)
    g.add_argument("--seeds", type=int, required=True)
    g.add_argument("--classes", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen_map)

    e = sub.add_parser("encode-sem", help="SMAP -> .semz")
    e.add_argument("input")
    e.add_argument("--inst", help="instance-id map (SMAP)")
    e.add_argument("--epsilon", type=float, default=0.0, help="lossy smoothing tolerance in grid units")
    e.add_argument("-o", "--output", required=True)
    e.set_defaults(func=cmd_encode_sem)

    d = sub.add_parser("decode-sem", help=".semz -> SMAP")
    d.add_argument("input")
    d.add_argument("-o", "--output", required=True)
    d.add_argument("--inst-out")
    d.set_defaults(func=cmd_decode_sem)

    c = sub.add_parser("compress", help="PPM image + SMAP -> JPSE container")
    c.add_argument("input", help="P6 PPM image")
    c.add_argument("--sem", required=True)
    c.add_argument("--inst")
    c.add_argument("--backbone", default="null")
    c.add_argument("--quality", type=int, default=75)
    c.add_argument("--epsilon", type=float, default=0.0)
    c.add_argument("-o", "--output", required=True)
    adapter_opts(c)
    c.set_defaults(func=cmd_compress)

    x = sub.add_parser("decompress", help="JPSE container -> PPM image (+ maps)")
    x.add_argument("input")
    x.add_argument("-o", "--output", required=True)
    x.add_argument("--sem-out")
    x.add_argument("--inst-out")
    adapter_opts(x)
    x.set_defaults(func=cmd_decompress)

    m = sub.add_parser("metrics", help="PSNR / MS-SSIM / bpp as a JSON line")
    m.add_argument("original")
    m.add_argument("reconstruction")
    m.add_argument("--container")
    m.add_argument("--report", help="append the JSON line to this file")
    m.set_defaults(func=cmd_metrics)

    b = sub.add_parser("bench", help="semantics rate on synthetic maps, JSON lines")
    b.add_argument("--maps", type=int, default=20)
    b.add_argument("--w", type=int, default=1024)
    b.add_argument("--h", type=int, default=512)
    b.add_argument("--seeds", type=int, default=200)
    b.add_argument("--classes", type=int, default=35)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--report")
    b.add_argument("--no-baseline", action="store_true", help="skip the PNG baseline")
    b.set_defaults(func=cmd_bench)
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    try:
        args.func(args)
    except (AdapterError, UnknownBackbone) as e:
        print(f"semcodec: adapter error: {e}", file=sys.stderr)
        return EXIT_ADAPTER
    except (SemcodecError, OSError, ValueError) as e:
        print(f"semcodec: {e}", file=sys.stderr)
        return EXIT_IO
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
