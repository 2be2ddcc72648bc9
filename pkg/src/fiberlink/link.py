"""Physical link description: fiber spans, optical elements, budgets, delays.

Losses here are bookkeeping for detected-power margins and warnings; they do
not inject phase noise (detection noise is a servo-side configurable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import PowerLawNoiseModel

__all__ = [
    "FiberSpan",
    "OpticalElement",
    "LinkTopology",
    "BudgetRow",
    "BudgetReport",
    "CrosstalkReport",
    "build_link",
    "link_budget",
    "crosstalk_report",
    "propagation_delays",
    "PropagationDelays",
]

ELEMENT_KINDS = ("oadm", "connector", "amplifier", "coupler")

DEFAULT_GROUP_VELOCITY_M_PER_S = 2.0e8
DEFAULT_CARRIER_FREQUENCY_HZ = 1.944e14  # 1542.14 nm, ITU channel 44
DEFAULT_SENSITIVITY_W = 1.0e-8  # below this, heterodyne detection is marginal


@dataclass(frozen=True)
class FiberSpan:
    id: str
    length_km: float
    loss_db: float
    lineic_noise: PowerLawNoiseModel | None = None
    group_velocity_m_per_s: float = DEFAULT_GROUP_VELOCITY_M_PER_S

    def __post_init__(self):
        if not self.length_km > 0.0:
            raise ValueError(f"span {self.id!r}: length must be > 0")
        if self.loss_db < 0.0:
            raise ValueError(f"span {self.id!r}: loss must be >= 0")
        if not self.group_velocity_m_per_s > 0.0:
            raise ValueError(f"span {self.id!r}: group velocity must be > 0")
        if self.lineic_noise is not None and not self.lineic_noise.lineic:
            raise ValueError(f"span {self.id!r}: noise model must be lineic")

    @property
    def one_way_delay_s(self) -> float:
        return self.length_km * 1000.0 / self.group_velocity_m_per_s


@dataclass(frozen=True)
class OpticalElement:
    id: str
    kind: str
    insertion_loss_db: float = 0.0
    gain_db: float = 0.0
    isolation_adjacent_db: float | None = None
    isolation_other_db: float | None = None
    bidirectional: bool = True

    def __post_init__(self):
        if self.kind not in ELEMENT_KINDS:
            raise ValueError(f"element {self.id!r}: unknown kind {self.kind!r}")
        if self.insertion_loss_db < 0.0:
            raise ValueError(f"element {self.id!r}: loss must be >= 0")
        if self.gain_db < 0.0:
            raise ValueError(f"element {self.id!r}: gain must be >= 0")
        if self.gain_db > 0.0 and self.kind != "amplifier":
            raise ValueError(f"element {self.id!r}: only amplifiers have gain")
        for iso in (self.isolation_adjacent_db, self.isolation_other_db):
            if iso is not None:
                if self.kind != "oadm":
                    raise ValueError(
                        f"element {self.id!r}: isolation applies to oadm only")
                if iso < 0.0:
                    raise ValueError(f"element {self.id!r}: isolation must be >= 0")


@dataclass(frozen=True)
class LinkTopology:
    elements: tuple
    carrier_frequency_hz: float = DEFAULT_CARRIER_FREQUENCY_HZ
    input_power_w: float = 2.0e-3
    injection_node_id: str | None = None

    def __post_init__(self):
        if not any(isinstance(e, FiberSpan) for e in self.elements):
            raise ValueError("topology needs at least one fiber span")
        if not self.carrier_frequency_hz > 0.0:
            raise ValueError("carrier frequency must be > 0")
        if self.input_power_w < 0.0:
            raise ValueError("input power must be >= 0")
        ids = [e.id for e in self.elements]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate element ids in topology")
        if self.injection_node_id is not None and self.injection_node_id not in ids:
            raise ValueError(f"injection node {self.injection_node_id!r} not in topology")

    def spans(self) -> tuple[FiberSpan, ...]:
        return tuple(e for e in self.elements if isinstance(e, FiberSpan))

    @property
    def total_length_km(self) -> float:
        return sum(s.length_km for s in self.spans())

    @property
    def one_way_delay_s(self) -> float:
        return sum(s.one_way_delay_s for s in self.spans())

    @property
    def total_one_way_loss_db(self) -> float:
        loss = 0.0
        for e in self.elements:
            loss += e.loss_db if isinstance(e, FiberSpan) else \
                e.insertion_loss_db - e.gain_db
        return loss


@dataclass(frozen=True)
class BudgetRow:
    element_id: str
    kind: str
    loss_db: float
    gain_db: float
    cumulative_db: float
    power_w: float


@dataclass(frozen=True)
class BudgetReport:
    rows: tuple[BudgetRow, ...]
    total_one_way_loss_db: float
    total_round_trip_loss_db: float
    node_powers_w: np.ndarray
    warnings: tuple[str, ...]

    def row(self, element_id: str) -> BudgetRow:
        for r in self.rows:
            if r.element_id == element_id:
                return r
        raise KeyError(element_id)


@dataclass(frozen=True)
class CrosstalkRow:
    element_id: str
    isolation_db: float
    leaked_power_w: float
    metrology_power_w: float
    margin_db: float


@dataclass(frozen=True)
class CrosstalkReport:
    rows: tuple[CrosstalkRow, ...]
    channel_separation: int
    worst_margin_db: float


def _span_from_config(cfg: dict, noise_cfg: dict | None) -> FiberSpan:
    known = {"id", "length_km", "loss_db", "group_velocity_m_per_s"}
    unknown = set(cfg) - known
    if unknown:
        raise ValueError(f"span entry has unknown keys {sorted(unknown)}")
    model = None
    if noise_cfg and cfg.get("id") in noise_cfg:
        model = noise_cfg[cfg["id"]]
    return FiberSpan(
        id=str(cfg["id"]),
        length_km=float(cfg["length_km"]),
        loss_db=float(cfg.get("loss_db", 0.0)),
        lineic_noise=model,
        group_velocity_m_per_s=float(
            cfg.get("group_velocity_m_per_s", DEFAULT_GROUP_VELOCITY_M_PER_S)),
    )


def _element_from_config(cfg: dict, index: int) -> OpticalElement:
    known = {"id", "kind", "insertion_loss_db", "gain_db",
             "isolation_adjacent_db", "isolation_other_db", "bidirectional"}
    unknown = set(cfg) - known
    if unknown:
        raise ValueError(f"element entry has unknown keys {sorted(unknown)}")
    kind = str(cfg.get("kind", ""))
    kwargs = dict(
        id=str(cfg.get("id", f"element_{index}")),
        kind=kind,
        insertion_loss_db=float(cfg.get("insertion_loss_db", 0.0)),
        gain_db=float(cfg.get("gain_db", 0.0)),
        bidirectional=bool(cfg.get("bidirectional", True)),
    )
    if kind == "oadm":
        kwargs["isolation_adjacent_db"] = float(cfg.get("isolation_adjacent_db", 25.0))
        kwargs["isolation_other_db"] = float(cfg.get("isolation_other_db", 40.0))
    else:
        if "isolation_adjacent_db" in cfg or "isolation_other_db" in cfg:
            raise ValueError(f"element {kwargs['id']!r}: isolation applies to oadm only")
    return OpticalElement(**kwargs)


def build_link(config: dict, noise_models: dict[str, PowerLawNoiseModel] | None = None
               ) -> LinkTopology:
    """Build a validated topology from a structured description.

    `config` mirrors the scenario file link section: an ordered `elements`
    list whose entries are {"span": {...}} or {"element": {...}} mappings,
    plus optional carrier_frequency_hz / input_power_w / injection_node_id.
    `noise_models` maps span ids to lineic PowerLawNoiseModel instances.
    """
    entries = config.get("elements", [])
    if not isinstance(entries, (list, tuple)):
        raise ValueError("link elements must be a list")
    built = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or len(entry) != 1:
            raise ValueError(f"link element #{i} must be a single span/element mapping")
        key, body = next(iter(entry.items()))
        if key == "span":
            built.append(_span_from_config(body, noise_models))
        elif key == "element":
            built.append(_element_from_config(body, i))
        else:
            raise ValueError(f"unknown link entry kind {key!r}")
    return LinkTopology(
        elements=tuple(built),
        carrier_frequency_hz=float(
            config.get("carrier_frequency_hz", DEFAULT_CARRIER_FREQUENCY_HZ)),
        input_power_w=float(config.get("input_power_w", 2.0e-3)),
        injection_node_id=config.get("injection_node_id"),
    )


def link_budget(link: LinkTopology, sensitivity_w: float = DEFAULT_SENSITIVITY_W
                ) -> BudgetReport:
    """Loss/gain ledger with node powers and sensitivity warnings.

    Round-trip loss counts bidirectional elements twice and one-way elements
    once.  Never fails; problems surface as warnings.
    """
    rows = []
    warnings = []
    powers = []
    cum = 0.0
    rt = 0.0
    for e in link.elements:
        if isinstance(e, FiberSpan):
            kind, loss, gain, bidir = "span", e.loss_db, 0.0, True
        else:
            kind, loss, gain, bidir = e.kind, e.insertion_loss_db, e.gain_db, e.bidirectional
        cum += loss - gain
        rt += (2.0 if bidir else 1.0) * (loss - gain)
        power = link.input_power_w * 10.0 ** (-cum / 10.0)
        rows.append(BudgetRow(e.id, kind, loss, gain, cum, power))
        powers.append(power)
        if power < sensitivity_w:
            warnings.append(
                f"heterodyne detection marginal at {e.id!r}: "
                f"{power:.3e} W < {sensitivity_w:.1e} W")
    return BudgetReport(
        rows=tuple(rows),
        total_one_way_loss_db=cum,
        total_round_trip_loss_db=rt,
        node_powers_w=np.array(powers),
        warnings=tuple(warnings),
    )


def crosstalk_report(link: LinkTopology, data_channel_power_w: float,
                     channel_separation: int) -> CrosstalkReport:
    """Data-channel leakage into the metrology path at each OADM.

    Separation 1 (100 GHz grid neighbour) uses the adjacent-channel isolation;
    anything farther uses the other-channel figure.  Margin compares the leak
    against the metrology signal power at the same node.
    """
    channel_separation = int(channel_separation)
    if channel_separation < 1:
        raise ValueError("channel separation must be >= 1 grid slot")
    if data_channel_power_w < 0.0:
        raise ValueError("data channel power must be >= 0")
    oadms = [e for e in link.elements
             if isinstance(e, OpticalElement) and e.kind == "oadm"]
    if not oadms:
        raise ValueError("link contains no oadm")
    budget = link_budget(link)
    rows = []
    for e in oadms:
        iso = e.isolation_adjacent_db if channel_separation == 1 else e.isolation_other_db
        iso = 25.0 if iso is None and channel_separation == 1 else iso
        iso = 40.0 if iso is None else iso
        leaked = data_channel_power_w * 10.0 ** (-iso / 10.0)
        signal = budget.row(e.id).power_w
        if leaked == 0.0:
            margin = math.inf
        else:
            margin = 10.0 * math.log10(signal / leaked)
        rows.append(CrosstalkRow(e.id, iso, leaked, signal, margin))
    return CrosstalkReport(
        rows=tuple(rows),
        channel_separation=channel_separation,
        worst_margin_db=min(r.margin_db for r in rows),
    )


@dataclass(frozen=True)
class PropagationDelays:
    positions_km: np.ndarray
    delay_from_input_s: np.ndarray  # one way, input to position
    delay_to_output_s: np.ndarray   # one way, position to remote end
    round_trip_s: float             # full round trip, far-end reflection


def propagation_delays(link: LinkTopology, positions_km) -> PropagationDelays:
    """One-way delays for positions along the fiber, measured from the input.

    Positions are cumulative fiber distance (elements other than spans are
    treated as points).  delay(z) is monotone in z and additive over
    concatenated spans.
    """
    positions = np.atleast_1d(np.asarray(positions_km, dtype=float))
    total = link.total_length_km
    if np.any(positions < 0.0) or np.any(positions > total * (1.0 + 1e-12)):
        raise ValueError(f"positions must lie within [0, {total}] km")
    # Per-span cumulative start distance and start delay.
    starts_km = []
    starts_s = []
    z = 0.0
    t = 0.0
    for s in link.spans():
        starts_km.append(z)
        starts_s.append(t)
        z += s.length_km
        t += s.one_way_delay_s
    tau_total = t
    spans = link.spans()
    delays = np.empty_like(positions)
    for i, p in enumerate(positions):
        j = int(np.searchsorted(starts_km, min(p, z), side="right") - 1)
        s = spans[j]
        delays[i] = starts_s[j] + (p - starts_km[j]) * 1000.0 / s.group_velocity_m_per_s
    return PropagationDelays(
        positions_km=positions,
        delay_from_input_s=delays,
        delay_to_output_s=tau_total - delays,
        round_trip_s=2.0 * tau_total,
    )
