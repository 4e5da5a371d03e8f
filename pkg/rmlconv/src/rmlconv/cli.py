"""Command line front end: rmlconv --input archive.pkl --output data.bin."""

import argparse
import sys

from .convert import ArchiveError, ConvertSpec, FilterError, convert


class _UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(
        prog="rmlconv",
        description="Convert a RadioML 2016.10A pickle archive to an IQDS "
        "dataset file.",
    )
    parser.add_argument("--input", required=True, help="pickle archive path")
    parser.add_argument("--output", required=True, help="IQDS file to write")
    parser.add_argument(
        "--classes", nargs="+", metavar="NAME",
        help="modulation subset (default: all 8 digital classes)",
    )
    parser.add_argument(
        "--snrs", nargs="+", type=int, metavar="DB",
        help="SNR subset in dB (default: -6..14 step 2)",
    )
    parser.add_argument(
        "--swap-iq", action="store_true",
        help="treat archive row 0 as Q and row 1 as I",
    )
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        kwargs = {}
        if args.classes is not None:
            kwargs["classes"] = args.classes
        if args.snrs is not None:
            kwargs["snrs"] = args.snrs
        spec = ConvertSpec(
            input=args.input, output=args.output, swap_iq=args.swap_iq,
            **kwargs,
        )
        total = convert(spec)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FilterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ArchiveError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    print(f"total frames: {total}")
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
