from experiments.config import ExperimentKind
from experiments.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Tabulate maximum throughput of both MAC models across node densities'

    experiment = ExperimentKind.DENSITY_SWEEP

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--lambdas',
            type=str,
            help='Node densities: comma-separated or start:stop:step'
        )

    def run(self, service, config, options):
        self.emit(config, service.density_sweep())
