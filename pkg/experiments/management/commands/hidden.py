from experiments.config import ExperimentKind
from experiments.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Tabulate the forwarding nodes in each window of one mean hop length, N(x + E[d]) - N(x)'

    experiment = ExperimentKind.HIDDEN_NODES

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--analytic-only',
            action='store_true',
            help='Skip the Monte Carlo columns'
        )

    def run(self, service, config, options):
        self.emit(config, service.hidden_nodes(with_monte_carlo=not options['analytic_only']))
