"""
Base class of the pipeline management commands.

Every pipeline command accepts --config, --seed, --out, --json and --threads,
writes the effective configuration (config.json) and a run manifest (run.json)
into its output directory, records one RunRecord, and maps pipeline errors to
exit code 2. Usage errors exit with code 1.
"""
import functools
import json
import logging
import sys
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Dict

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.utils import timezone

from apps.runs.config import RunConfig
from apps.runs.models import RunRecord
from apps.runs.utils import json_serial, record_run

from .error_handling import EXIT_USAGE, InvalidConfigError, PipelineError, command_exception_handler

logger = logging.getLogger(__name__)

VERSIONED_PACKAGES = ('django', 'numpy', 'scipy', 'scikit-learn', 'matplotlib')


def package_versions() -> Dict[str, str]:
    versions = {'python': sys.version.split()[0]}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = 'missing'
    return versions


def write_json(path: Path, data: Any):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as handle:
        json.dump(data, handle, indent=2, sort_keys=True, default=json_serial)
        handle.write('\n')


def _usage_error(parser, message):
    """Replacement for CommandParser.error that exits with code 1."""
    if parser.called_from_command_line:
        parser.print_usage(sys.stderr)
        parser.exit(EXIT_USAGE, f"{parser.prog}: error: {message}\n")
    raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)


@dataclass
class RunContext:
    """
    Everything a command needs besides its own options.

    Attributes:
        command: Management command name
        config: Effective run configuration
        seed: Global seed (--seed, then config seed, then settings)
        threads: Sample/tree/candidate-level worker count
        out_dir: Artifact directory, created on demand
        json_output: Whether --json was given
        fingerprints: Solver/dataset fingerprints, filled in by the command
    """
    command: str
    config: RunConfig
    seed: int
    threads: int
    out_dir: Path
    json_output: bool = False
    fingerprints: Dict[str, str] = field(default_factory=dict)

    def path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def write_json(self, name: str, data: Any) -> Path:
        target = self.path(name)
        write_json(target, data)
        return target


class PipelineCommand(BaseCommand):
    """
    Management command with the shared pipeline flags.

    Subclasses implement add_command_arguments() and execute_run(), which
    returns a JSON-safe summary dict.
    """

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.error = functools.partial(_usage_error, parser)
        return parser

    @property
    def command_name(self) -> str:
        return self.__class__.__module__.rsplit('.', 1)[-1]

    def add_arguments(self, parser):
        parser.add_argument('--config', type=Path, help='Run configuration JSON file')
        parser.add_argument('--seed', type=int, help='Global seed; overrides the config seed')
        parser.add_argument('--out', type=Path, help='Output directory')
        parser.add_argument(
            '--json',
            action='store_true',
            dest='json_output',
            help='Print a machine-readable JSON summary on stdout'
        )
        parser.add_argument(
            '--threads',
            type=int,
            help='Worker processes (default: METASURFACE_THREADS); results do not depend on it'
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        """Hook for command-specific flags."""

    def execute_run(self, ctx: RunContext, **options) -> Dict[str, Any]:
        raise NotImplementedError

    def report(self, ctx: RunContext, summary: Dict[str, Any]):
        """Human-readable output; commands override for nicer tables."""
        for key, value in summary.items():
            if isinstance(value, (dict, list)):
                continue
            self.stdout.write(f"  {key}: {value}")

    def build_context(self, options: Dict[str, Any]) -> RunContext:
        config = RunConfig.load(options.get('config'))
        metasurface = settings.METASURFACE

        seed = options.get('seed')
        if seed is None:
            seed = config.seed if config.seed is not None else metasurface['DEFAULT_SEED']
        if not 0 <= seed < 2 ** 64:
            raise InvalidConfigError(f"seed must be in [0, 2^64), got {seed}")
        config.seed = seed

        threads = options.get('threads') or metasurface['THREADS']
        if threads < 1:
            raise InvalidConfigError(f"--threads must be >= 1, got {threads}")

        out_dir = options.get('out') or Path(metasurface['OUTPUT_ROOT']) / self.command_name
        return RunContext(
            command=self.command_name,
            config=config,
            seed=seed,
            threads=threads,
            out_dir=Path(out_dir),
            json_output=bool(options.get('json_output')),
        )

    @command_exception_handler
    def handle(self, *args, **options):
        started_at = timezone.now()
        ctx = self.build_context(options)
        logger.info(f"{ctx.command}: seed {ctx.seed}, {ctx.threads} thread(s), output {ctx.out_dir}")
        try:
            summary = self.execute_run(ctx, **options)
        except PipelineError as e:
            record_run(
                ctx.command, RunRecord.FAILED, ctx.seed, ctx.out_dir, ctx.config.to_dict(), started_at,
                fingerprints=ctx.fingerprints, error=f"{e.__class__.__name__}: {e}",
            )
            raise

        # commands may fold their flags into the config
        effective = ctx.config.to_dict()
        ctx.write_json('config.json', effective)
        ctx.write_json('run.json', {
            'command': ctx.command,
            'seed': ctx.seed,
            'versions': package_versions(),
            'fingerprints': ctx.fingerprints,
            'summary': summary,
        })
        record_run(
            ctx.command, RunRecord.SUCCESS, ctx.seed, ctx.out_dir, effective, started_at,
            summary=json.loads(json.dumps(summary, default=json_serial)), fingerprints=ctx.fingerprints,
        )

        if ctx.json_output:
            self.stdout.write(json.dumps(summary, sort_keys=True, default=json_serial))
        else:
            self.report(ctx, summary)
            self.stdout.write(self.style.SUCCESS(f"{ctx.command} finished; artifacts in {ctx.out_dir}"))
