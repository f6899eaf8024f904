from experiments.config import ExperimentKind
from experiments.management.commands._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Compare analytic and simulated first and second moments of a single hop'

    experiment = ExperimentKind.MOMENTS

    def run(self, service, config, options):
        self.emit(config, service.hop_moments())
