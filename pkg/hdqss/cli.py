import sys
import argparse
import logging
from typing import List, Optional

from .analysis import (
    MAX_AUDIT_BITS,
    MAX_AUDIT_PRIMARIES,
    MAX_LOCK_AUDIT_BITS,
    audit_collusion,
    audit_permutation_lock,
    detection_decay,
)
from .config import FORMATS, SimulationConfig
from .errors import ConfigError, HdqssError, ParseError
from .harness import run_scenario
from .report import emit_report, generate_table_cli
from .scenario import parse_scenario
from .storage import TranscriptStorage


DEFAULT_DECAY_COUNTS = [8, 16, 32, 64, 128]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Hierarchical dynamic quantum secret sharing simulator'
    )
    parser.add_argument(
        '--verbose',
        action='store_true',
        help='Log membership changes and sub-protocol details to stderr'
    )

    subparsers = parser.add_subparsers(dest='command', help='Commands')

    # Run a scenario script
    run_parser = subparsers.add_parser('run', help='Run a scenario and print its transcript')
    run_parser.add_argument(
        '--scenario',
        help='Scenario file path (default: standard input)'
    )
    run_parser.add_argument(
        '--seed',
        type=int,
        default=0,
        help='Random seed, unsigned 64-bit (default: 0)'
    )
    run_parser.add_argument(
        '--key-bits',
        type=int,
        default=128,
        help='Length of every shared key (default: 128)'
    )
    run_parser.add_argument(
        '--qber-threshold',
        type=float,
        default=0.11,
        help='BB84 abort threshold (default: 0.11)'
    )
    run_parser.add_argument(
        '--format',
        choices=FORMATS,
        default='text',
        help='Transcript format (default: text)'
    )
    run_parser.add_argument(
        '--out',
        help='Also write the transcript to this path'
    )

    # Comparison table
    table_parser = subparsers.add_parser('table', help='Reproduce the efficiency comparison table')
    table_parser.add_argument(
        '--m',
        type=int,
        action='append',
        help='Party count (can be specified multiple times; default: 3 and 50)'
    )
    table_parser.add_argument(
        '--format',
        choices=FORMATS,
        default='text',
        help='Output format (default: text)'
    )
    table_parser.add_argument(
        '--out',
        help='Output directory; writes both formats'
    )

    # Enumeration audits
    audit_parser = subparsers.add_parser('audit', help='Run the collusion and permutation-lock audits')
    audit_parser.add_argument(
        '--bits',
        type=int,
        default=2,
        help='Key length for the collusion audit (default: 2)'
    )
    audit_parser.add_argument(
        '--primaries',
        type=int,
        default=3,
        help='Primary agents for the collusion audit (default: 3)'
    )
    audit_parser.add_argument(
        '--lock-bits',
        type=int,
        default=3,
        help='Key length for the permutation-lock audit (default: 3)'
    )

    # Detection decay
    decay_parser = subparsers.add_parser('decay', help='Monte Carlo of intercept-resend detection')
    decay_parser.add_argument(
        '--check-bits',
        type=int,
        action='append',
        help='Check-bit count (can be specified multiple times; default: 8 16 32 64 128)'
    )
    decay_parser.add_argument(
        '--trials',
        type=int,
        default=10000,
        help='Trials per check-bit count (default: 10000)'
    )
    decay_parser.add_argument(
        '--seed',
        type=int,
        default=0,
        help='Random seed (default: 0)'
    )
    decay_parser.add_argument(
        '--qber-threshold',
        type=float,
        default=0.11,
        help='BB84 abort threshold (default: 0.11)'
    )

    return parser


def main(argv: Optional[List[str]] = None):
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    if args.command == 'run':
        run_command(args)
    elif args.command == 'table':
        table_command(args)
    elif args.command == 'audit':
        audit_command(args)
    elif args.command == 'decay':
        decay_command(args)
    else:
        parser.print_help()
        sys.exit(1)


def run_command(args):
    """Parse, run and print one scenario; exit 1 on parse/config or unexpected errors"""
    try:
        config = SimulationConfig(
            seed=args.seed,
            key_bits=args.key_bits,
            qber_threshold=args.qber_threshold,
            output_format=args.format,
        ).validate()
        if args.scenario:
            with open(args.scenario, 'r', encoding='utf-8') as f:
                text = f.read()
        else:
            text = sys.stdin.read()
        scenario = parse_scenario(text)
    except (ParseError, ConfigError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)

    transcript = run_scenario(scenario, config.seed, config)
    print(emit_report(transcript, config.output_format), end='')

    if args.out:
        TranscriptStorage(args.out).save(transcript, config.output_format)
        print(f"Transcript saved to: {args.out}", file=sys.stderr)

    if transcript.unexpected_errors:
        print(f"Error: {len(transcript.unexpected_errors)} event(s) failed unexpectedly", file=sys.stderr)
        sys.exit(1)


def audit_command(args):
    if not 1 <= args.bits <= MAX_AUDIT_BITS or not 1 <= args.primaries <= MAX_AUDIT_PRIMARIES:
        print(f"Error: collusion audit supports 1..{MAX_AUDIT_BITS} bits and 1..{MAX_AUDIT_PRIMARIES} primaries")
        sys.exit(1)
    if not 1 <= args.lock_bits <= MAX_LOCK_AUDIT_BITS:
        print(f"Error: permutation-lock audit supports 1..{MAX_LOCK_AUDIT_BITS} bits")
        sys.exit(1)

    collusion = audit_collusion(args.bits, args.primaries)
    print(f"\n=== Collusion audit (n={args.bits}, primaries={args.primaries}) ===")
    print(f"  Assignments: {collusion.assignments}")
    print(f"  Proper subsets: {len(collusion.fractions)}")
    print(f"  Expected match fraction: {collusion.expected}")
    for subset in collusion.failing_subsets():
        print(f"  FAIL {subset}: {collusion.fractions[subset]}")
    print(f"  Result: {'PASS' if collusion.passed else 'FAIL'}")

    lock = audit_permutation_lock(args.lock_bits)
    print(f"\n=== Permutation-lock audit (n={args.lock_bits}) ===")
    print(f"  Cases: {lock.cases}")
    print(f"  Fixed pairs: {lock.fixed_pairs} (cycle count says {lock.expected_fixed_pairs})")
    print(f"  Recovered before disclosure: {lock.pre_disclosure_matches}")
    print(f"  Recovered after disclosure: {lock.post_disclosure_matches}")
    print(f"  Result: {'PASS' if lock.passed else 'FAIL'}")

    if not (collusion.passed and lock.passed):
        sys.exit(1)


def table_command(args):
    try:
        generate_table_cli(m_values=args.m, output_dir=args.out, fmt=args.format)
    except (HdqssError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)


def decay_command(args):
    counts = args.check_bits or DEFAULT_DECAY_COUNTS
    try:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {args.seed}")
        if not 0.0 <= args.qber_threshold <= 1.0:
            raise ConfigError(f"qber threshold must lie in [0, 1], got {args.qber_threshold}")
        points = detection_decay(counts, args.trials, args.seed, args.qber_threshold)
    except HdqssError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)

    print(f"{'check_bits':>10}  {'accepted':>8}  {'rate':>10}  {'binomial':>10}")
    for point in points:
        print(f"{point.check_bits:>10}  {point.accepted:>8}  "
              f"{point.acceptance_rate:>10.6f}  {point.binomial_acceptance:>10.6f}")


if __name__ == '__main__':
    main()
