"""Optical budget and data-channel crosstalk for a metro-haul link.

Builds a 108 km topology with patch connectors and OADMs, walks the power
ledger from the 2 mW launch down to the remote output, and checks how much
of a neighbouring data channel leaks into the metrology path.
"""

from fiberlink import (
    FiberSpan,
    LinkTopology,
    OpticalElement,
    PowerLawNoiseModel,
    crosstalk_report,
    link_budget,
    propagation_delays,
)

LINEIC = PowerLawNoiseModel(((2.0, 1.4),), lineic=True)


def main():
    link = LinkTopology(
        elements=(
            OpticalElement(id="inj_patch", kind="connector",
                           insertion_loss_db=6.4),
            FiberSpan(id="haul_a", length_km=45.0, loss_db=9.9,
                      lineic_noise=LINEIC),
            OpticalElement(id="oadm_drop_a", kind="oadm",
                           insertion_loss_db=1.2),
            FiberSpan(id="metro_a", length_km=9.0, loss_db=2.0,
                      lineic_noise=LINEIC.scaled(10.0)),
            OpticalElement(id="oadm_add_b", kind="oadm",
                           insertion_loss_db=1.2),
            FiberSpan(id="metro_b", length_km=9.0, loss_db=2.0,
                      lineic_noise=LINEIC.scaled(10.0)),
            OpticalElement(id="oadm_drop_b", kind="oadm",
                           insertion_loss_db=1.2),
            FiberSpan(id="haul_b", length_km=45.0, loss_db=9.9,
                      lineic_noise=LINEIC),
            OpticalElement(id="oadm_add_c", kind="oadm",
                           insertion_loss_db=1.2),
            OpticalElement(id="end_patch", kind="connector",
                           insertion_loss_db=3.0),
        ),
        input_power_w=2.0e-3,
        injection_node_id="oadm_add_b",
    )
    print(f"link: {link.total_length_km:g} km, one-way delay "
          f"{link.one_way_delay_s * 1e3:.3f} ms")

    budget = link_budget(link)
    print()
    print(f"{'element':<14} {'kind':<10} {'loss':>6}  {'cum':>6}  power")
    for row in budget.rows:
        print(f"{row.element_id:<14} {row.kind:<10} {row.loss_db:>5.1f} "
              f" {row.cumulative_db:>6.1f}  {row.power_w * 1e6:8.2f} uW")
    print(f"total one-way {budget.total_one_way_loss_db:.1f} dB, "
          f"round trip {budget.total_round_trip_loss_db:.1f} dB")
    inj = budget.row(link.injection_node_id)
    print(f"power at the {inj.element_id!r} injection point: "
          f"{inj.power_w * 1e6:.1f} uW from 2 mW launched")
    for w in budget.warnings:
        print(f"warning: {w}")

    print()
    xtalk = crosstalk_report(link, data_channel_power_w=1.0e-3,
                             channel_separation=1)
    print("crosstalk from a 1 mW data channel one grid slot away:")
    for row in xtalk.rows:
        print(f"  {row.element_id:<14} isolation {row.isolation_db:g} dB, "
              f"leak {row.leaked_power_w * 1e9:.1f} nW, "
              f"margin {row.margin_db:+.1f} dB")
    print(f"  worst margin: {xtalk.worst_margin_db:+.1f} dB")

    print()
    delays = propagation_delays(link, [0.0, 54.0, 108.0])
    for z, d in zip(delays.positions_km, delays.delay_from_input_s):
        print(f"  delay to km {z:5.1f}: {d * 1e6:7.1f} us")


if __name__ == "__main__":
    main()
