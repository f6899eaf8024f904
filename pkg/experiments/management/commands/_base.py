from django.core.management.base import BaseCommand, CommandError

from analytic.exceptions import CapacityError, ConfigError
from experiments.config import ExperimentKind, RunConfig, build_run_config
from experiments.csv_output import emit_csv
from experiments.services import ExperimentService, Table


USAGE_ERROR = 2
FAILURE = 1


class ExperimentCommand(BaseCommand):
    """Shared flags, config resolution and error mapping of the experiment commands"""

    experiment: ExperimentKind = ExperimentKind.HOP_CURVE

    def add_arguments(self, parser):
        parser.add_argument('--config', type=str, help='INI file with experiment settings (flags win over it)')
        parser.add_argument('--policy', type=str, choices=['random', 'furthest'], help='Routing policy')
        parser.add_argument('--dim', type=int, choices=[1, 2], help='1 for a line, 2 for a planar region')
        parser.add_argument('--lambda', type=float, help='Node density (nodes/m, or nodes/m^2 in 2-D)')
        parser.add_argument('--aop-deg', type=float, help='Angle of progression in degrees (2-D)')
        parser.add_argument('--length', type=float, help='Line length in meters (1-D)')
        parser.add_argument('--width', type=float, help='Region width in meters (2-D)')
        parser.add_argument('--height', type=float, help='Region height in meters (2-D)')

        parser.add_argument('--rtx', type=float, help='Transmission range (m)')
        parser.add_argument('--ri', type=float, help='Interference range (m)')
        parser.add_argument('--rcs', type=float, help='Carrier sensing range (m)')
        parser.add_argument('--capacity', type=float, help='Single-hop capacity C (bit/s)')
        parser.add_argument('--airtime-a', type=float, help='Airtime fraction of a frame exchange in (0, 1)')
        parser.add_argument('--derive-a', action='store_true',
                            help='Derive the airtime fraction from the 802.11 timing flags')
        parser.add_argument('--data-rate', type=float, help='PHY data rate (bit/s)')
        parser.add_argument('--payload-bytes', type=int, help='Payload size (bytes)')
        parser.add_argument('--mac-overhead-bytes', type=int, help='MAC header and FCS (bytes)')
        parser.add_argument('--phy-header-us', type=float, help='PHY preamble and header (us)')
        parser.add_argument('--ack-bytes', type=int, help='ACK frame size (bytes)')
        parser.add_argument('--sifs-us', type=float, help='SIFS (us)')
        parser.add_argument('--difs-us', type=float, help='DIFS (us)')
        parser.add_argument('--slot-us', type=float, help='Slot time (us)')
        parser.add_argument('--cw-min', type=int, help='Minimum contention window (slots)')

        parser.add_argument('--xmax', type=float, help='Largest distance of the grid (m)')
        parser.add_argument('--xstep', type=float, help='Distance grid step (m)')
        parser.add_argument('--trials', type=int, help='Monte Carlo trials per data point')
        parser.add_argument('--seed', type=int, help='Master seed of the Monte Carlo streams')
        parser.add_argument('--ci', type=float, help='Confidence level of reported intervals')
        parser.add_argument('--workers', type=int, help='Monte Carlo worker processes')
        parser.add_argument('--out', type=str, help='Output CSV path (stdout when omitted)')

    def handle(self, *args, **options):
        try:
            config = build_run_config(options, self.experiment)
        except ConfigError as e:
            raise CommandError(f'Invalid configuration: {e}', returncode=USAGE_ERROR)

        service = ExperimentService(config)
        try:
            return self.run(service, config, options)
        except ConfigError as e:
            raise CommandError(f'Invalid configuration: {e}', returncode=USAGE_ERROR)
        except CapacityError as e:
            raise CommandError(f'{self.experiment.value} failed: {e}', returncode=FAILURE)

    def run(self, service: ExperimentService, config: RunConfig, options) -> None:
        raise NotImplementedError('subclasses of ExperimentCommand must provide a run() method')

    def emit(self, config: RunConfig, table: Table) -> None:
        count = emit_csv(config.output_path, config.describe(), table.columns, table.rows, table.footer,
                         stream=self.stdout)
        if config.output_path:
            self.stderr.write(self.style.SUCCESS(f'Wrote {count} rows to {config.output_path}'))
