from django.core.management.base import CommandError

from experiments.config import ExperimentKind
from experiments.management.commands._base import FAILURE, ExperimentCommand


class Command(ExperimentCommand):
    help = 'Run the invariant suite and print PASS/FAIL per check'

    experiment = ExperimentKind.VALIDATE

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--tolerance-scale',
            type=float,
            help='Multiply every check threshold by this factor (below 1 tightens)'
        )

    def run(self, service, config, options):
        self.stdout.write(f'Validating {config.policy.value} routing, dim={config.deployment.dim}, '
                          f'{config.trials} trials, seed {config.master_seed}...')

        report = service.validate()

        for check in report.checks:
            if check.message:
                line = f'FAIL {check.name}: {check.message}'
            else:
                verdict = 'PASS' if check.passed else 'FAIL'
                line = f'{verdict} {check.name}: measured={check.measured:.6e} threshold={check.threshold:.6e}'
            style = self.style.SUCCESS if check.passed else self.style.ERROR
            self.stdout.write(style(line))

        summary = f'{len(report.checks) - len(report.failures)}/{len(report.checks)} checks passed in {report.duration}'
        if not report.passed:
            raise CommandError(f'Validation failed: {summary}', returncode=FAILURE)
        self.stdout.write(self.style.SUCCESS(summary))
