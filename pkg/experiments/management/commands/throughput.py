from experiments.config import ExperimentKind
from experiments.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Tabulate end-to-end throughput against offered rate for the perfect and 802.11 MAC models'

    experiment = ExperimentKind.THROUGHPUT

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--rates',
            type=str,
            help='Offered rates in bit/s: comma-separated or start:stop:step'
        )

    def run(self, service, config, options):
        self.emit(config, service.throughput())
