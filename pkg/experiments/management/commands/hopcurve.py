from experiments.config import ExperimentKind
from experiments.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Tabulate the expected hop count N(x): exact, linear approximation, Gamma baseline and Monte Carlo'

    experiment = ExperimentKind.HOP_CURVE

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--analytic-only',
            action='store_true',
            help='Skip the Monte Carlo columns'
        )

    def run(self, service, config, options):
        self.emit(config, service.hop_curve(with_monte_carlo=not options['analytic_only']))
