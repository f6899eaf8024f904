"""
Experiment configuration.

Values are resolved per key with the precedence command-line flag, then the
INI file given by --config, then the defaults in settings. INI keys are the
long flag names without the leading dashes, grouped in the sections listed in
SECTIONS.
"""

import configparser
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from django.conf import settings

from analytic.exceptions import ConfigError
from analytic.types import Deployment, Line, RadioParams, RoutingPolicy, Sector
from throughput.airtime import AirtimeTiming


logger = logging.getLogger('experiments')


class ExperimentKind(str, Enum):
    HOP_CURVE = 'HopCurve'
    HIDDEN_NODES = 'HiddenNodes'
    THROUGHPUT = 'Throughput'
    MOMENTS = 'Moments'
    DENSITY_SWEEP = 'DensitySweep'
    VALIDATE = 'Validate'


SECTIONS: Dict[str, Tuple[str, ...]] = {
    'radio': ('rtx', 'ri', 'rcs', 'capacity', 'airtime-a', 'derive-a'),
    'deployment': ('dim', 'lambda', 'aop-deg', 'length', 'width', 'height'),
    'experiment': ('policy', 'xmax', 'xstep', 'rates', 'lambdas', 'out', 'tolerance-scale'),
    'monte_carlo': ('trials', 'seed', 'ci', 'workers'),
    'timing': ('data-rate', 'payload-bytes', 'mac-overhead-bytes', 'phy-header-us', 'ack-bytes',
               'sifs-us', 'difs-us', 'slot-us', 'cw-min'),
}

TIMING_FIELDS = {
    'data-rate': ('data_rate_bps', float),
    'payload-bytes': ('payload_bytes', int),
    'mac-overhead-bytes': ('mac_overhead_bytes', int),
    'phy-header-us': ('phy_header_us', float),
    'ack-bytes': ('ack_bytes', int),
    'sifs-us': ('sifs_us', float),
    'difs-us': ('difs_us', float),
    'slot-us': ('slot_us', float),
    'cw-min': ('cw_min', int),
}

DEFAULT_RATES = '10000:300000:10000'
DEFAULT_LAMBDAS = '0.02,0.04,0.08,0.12,0.2,0.4'


def option_name(key: str) -> str:
    """argparse destination of a long flag name"""
    return key.replace('-', '_')


def read_config_file(path: str) -> Dict[str, str]:
    """
    Flatten an INI experiment file into {flag name: raw value}

    Raises:
        ConfigError: if the file is unreadable or holds unknown sections or keys
    """
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding='utf-8') as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"Cannot read config file {path}: {e}")

    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"Unknown section [{section}] in {path}")
        for key, value in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(f"Unknown key '{key}' in section [{section}] of {path}")
            values[key] = value
    logger.debug(f"Read {len(values)} settings from {path}")
    return values


def parse_float_list(text: str, name: str) -> Tuple[float, ...]:
    """Comma-separated values, or start:stop:step with stop included"""
    text = text.strip()
    if not text:
        return ()
    try:
        if ':' in text:
            start, stop, step = (float(part) for part in text.split(':'))
            if not step > 0:
                raise ConfigError(f"--{name} step must be positive, got {step}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(start + k * step for k in range(max(count, 0)))
        return tuple(float(part) for part in text.split(','))
    except ValueError as e:
        raise ConfigError(f"Cannot parse --{name} '{text}': {e}")


def distance_grid(xmax: float, xstep: float) -> Tuple[float, ...]:
    """xstep, 2 xstep, ... up to xmax"""
    if not xstep > 0:
        raise ConfigError(f"--xstep must be positive, got {xstep}")
    if not xmax >= 0:
        raise ConfigError(f"--xmax must be nonnegative, got {xmax}")
    count = int(math.floor(xmax / xstep + 1e-9))
    return tuple(k * xstep for k in range(1, count + 1))


@dataclass(frozen=True)
class RunConfig:
    radio: RadioParams
    deployment: Deployment
    policy: RoutingPolicy
    experiment: ExperimentKind
    grid: Tuple[float, ...]
    trials: int
    master_seed: int
    ci_level: float
    output_path: Optional[str] = None
    workers: int = 1
    timing: Optional[AirtimeTiming] = None
    tolerance_scale: float = 1.0

    def describe(self) -> Dict[str, Any]:
        """Effective configuration, in a fixed key order, for the CSV header"""
        values: Dict[str, Any] = {
            'experiment': self.experiment.value,
            'policy': self.policy.value,
            'dim': self.deployment.dim,
        }
        values.update(self.deployment.describe())
        values.update({
            'r_tx': self.radio.r_tx,
            'r_i': self.radio.r_i,
            'r_cs': self.radio.r_cs,
            'capacity_bps': self.radio.capacity_c,
            'airtime_a': self.radio.airtime_fraction_a,
            'trials': self.trials,
            'seed': self.master_seed,
            'ci': self.ci_level,
            'grid': ','.join(repr(float(value)) for value in self.grid),
        })
        if self.timing is not None:
            values.update({f'timing_{key}': value for key, value in self.timing.describe().items()})
        if self.tolerance_scale != 1.0:
            values['tolerance_scale'] = self.tolerance_scale
        return values


class ConfigResolver:
    """Resolves each key from flags, then the config file, then settings"""

    def __init__(self, options: Dict[str, Any]):
        self.options = options
        path = options.get('config')
        self.file_values = read_config_file(path) if path else {}

    def raw(self, key: str) -> Any:
        value = self.options.get(option_name(key))
        if value is not None and value is not False:
            return value
        return self.file_values.get(key)

    def get(self, key: str, cast, default):
        value = self.raw(key)
        if value is None:
            return default
        try:
            return cast(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid value for --{key}: {value!r} ({e})")

    def flag(self, key: str) -> bool:
        value = self.raw(key)
        if isinstance(value, str):
            return value.strip().lower() in ('1', 'true', 'yes', 'on')
        return bool(value)


def _timing(resolver: ConfigResolver) -> AirtimeTiming:
    overrides = {}
    for key, (name, cast) in TIMING_FIELDS.items():
        value = resolver.get(key, cast, None)
        if value is not None:
            overrides[name] = value
    return AirtimeTiming(**overrides)


def build_run_config(options: Dict[str, Any], experiment: ExperimentKind) -> RunConfig:
    """
    Build the effective RunConfig of a command invocation

    Args:
        options: Parsed command options (argparse destinations)
        experiment: Experiment the command runs

    Returns:
        RunConfig with every value resolved

    Raises:
        ConfigError: for unusable values, including domain-type violations
    """
    resolver = ConfigResolver(options)
    try:
        dim = resolver.get('dim', int, 1)
        if dim not in (1, 2):
            raise ConfigError(f"--dim must be 1 or 2, got {dim}")

        policy = RoutingPolicy(resolver.get('policy', str, RoutingPolicy.RANDOM.value))

        timing = None
        airtime_a = None if resolver.flag('derive-a') else resolver.get('airtime-a', float, None)
        if airtime_a is None:
            timing = _timing(resolver)
            airtime_a = timing.airtime_fraction()
        radio = RadioParams(
            r_tx=resolver.get('rtx', float, settings.RADIO_R_TX),
            r_i=resolver.get('ri', float, settings.RADIO_R_I),
            r_cs=resolver.get('rcs', float, settings.RADIO_R_CS),
            capacity_c=resolver.get('capacity', float, settings.RADIO_CAPACITY_BPS),
            airtime_fraction_a=airtime_a,
        )

        if dim == 1:
            line_default = settings.HOPCURVE_LINE_LENGTH if experiment is ExperimentKind.HOP_CURVE \
                else settings.DEPLOYMENT_LINE_LENGTH
            deployment = Deployment(
                resolver.get('lambda', float, settings.DEPLOYMENT_LAMBDA),
                Line(resolver.get('length', float, line_default)),
            )
        else:
            deployment = Deployment(
                resolver.get('lambda', float, settings.DEPLOYMENT_LAMBDA_2D),
                Sector(
                    math.radians(resolver.get('aop-deg', float, settings.DEPLOYMENT_AOP_DEG)),
                    width=resolver.get('width', float, settings.DEPLOYMENT_REGION_WIDTH),
                    height=resolver.get('height', float, settings.DEPLOYMENT_REGION_HEIGHT),
                ),
            )

        if experiment is ExperimentKind.THROUGHPUT:
            grid = parse_float_list(resolver.get('rates', str, DEFAULT_RATES), 'rates')
            if not all(0 <= r <= radio.capacity_c for r in grid):
                raise ConfigError(f"--rates must lie within [0, {radio.capacity_c:g}] bit/s")
        elif experiment is ExperimentKind.DENSITY_SWEEP:
            grid = parse_float_list(resolver.get('lambdas', str, DEFAULT_LAMBDAS), 'lambdas')
        elif experiment is ExperimentKind.MOMENTS:
            grid = ()
        else:
            grid = distance_grid(resolver.get('xmax', float, settings.HOPCURVE_LINE_LENGTH),
                                 resolver.get('xstep', float, 125.0))
        if not grid and experiment not in (ExperimentKind.MOMENTS, ExperimentKind.VALIDATE):
            raise ConfigError(f"The {experiment.value} grid is empty")

        default_trials = settings.THROUGHPUT_TRIALS if experiment is ExperimentKind.THROUGHPUT \
            else settings.MONTE_CARLO_TRIALS
        trials = resolver.get('trials', int, default_trials)
        if trials < 2:
            raise ConfigError(f"--trials must be at least 2, got {trials}")
        ci_level = resolver.get('ci', float, settings.MONTE_CARLO_CI_LEVEL)
        if not (0 < ci_level < 1):
            raise ConfigError(f"--ci must lie in (0, 1), got {ci_level}")
        tolerance_scale = resolver.get('tolerance-scale', float, 1.0)
        if not tolerance_scale > 0:
            raise ConfigError(f"--tolerance-scale must be positive, got {tolerance_scale}")

        return RunConfig(
            radio=radio,
            deployment=deployment,
            policy=policy,
            experiment=experiment,
            grid=grid,
            trials=trials,
            master_seed=resolver.get('seed', int, settings.MONTE_CARLO_SEED),
            ci_level=ci_level,
            output_path=resolver.get('out', str, None),
            workers=resolver.get('workers', int, settings.MONTE_CARLO_WORKERS),
            timing=timing,
            tolerance_scale=tolerance_scale,
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"Invalid configuration: {e}")
