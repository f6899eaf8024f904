import logging
from dataclasses import asdict, dataclass
from typing import Dict

from analytic.exceptions import DomainError


logger = logging.getLogger('throughput')


@dataclass(frozen=True)
class AirtimeTiming:
    """
    Basic-access 802.11 exchange (no RTS/CTS): DIFS, mean backoff, DATA, SIFS, ACK

    Times are in microseconds, sizes in bytes, rate in bit/s. The defaults are
    the 1 Mbit/s DSSS long-preamble timings with a 1000-byte payload.
    """
    data_rate_bps: float = 1_000_000.0
    payload_bytes: int = 1000
    mac_overhead_bytes: int = 28
    phy_header_us: float = 192.0
    ack_bytes: int = 14
    sifs_us: float = 10.0
    difs_us: float = 50.0
    slot_us: float = 20.0
    cw_min: int = 31

    def __post_init__(self):
        if not self.data_rate_bps > 0:
            raise DomainError(f"data_rate_bps must be positive, got {self.data_rate_bps}")
        if self.payload_bytes <= 0:
            raise DomainError(f"payload_bytes must be positive, got {self.payload_bytes}")
        for name in ('mac_overhead_bytes', 'phy_header_us', 'ack_bytes', 'sifs_us',
                     'difs_us', 'slot_us', 'cw_min'):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be nonnegative, got {getattr(self, name)}")

    def _bits_us(self, size_bytes: int) -> float:
        return size_bytes * 8 * 1e6 / self.data_rate_bps

    @property
    def data_frame_us(self) -> float:
        return self.phy_header_us + self._bits_us(self.payload_bytes + self.mac_overhead_bytes)

    @property
    def ack_frame_us(self) -> float:
        return self.phy_header_us + self._bits_us(self.ack_bytes)

    @property
    def mean_backoff_us(self) -> float:
        return self.cw_min / 2 * self.slot_us

    @property
    def overhead_us(self) -> float:
        return self.difs_us + self.mean_backoff_us + self.sifs_us + self.ack_frame_us

    @property
    def exchange_us(self) -> float:
        return self.data_frame_us + self.overhead_us

    def airtime_fraction(self) -> float:
        """Share of one successful exchange taken by the data frame"""
        return self.data_frame_us / self.exchange_us

    def capacity_bps(self) -> float:
        """Payload throughput of a single hop with back-to-back exchanges"""
        return self.payload_bytes * 8 * 1e6 / self.exchange_us

    def describe(self) -> Dict[str, float]:
        return asdict(self)
