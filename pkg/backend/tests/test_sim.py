# /backend/tests/test_sim.py

import math

import pytest

from app.core.exceptions import DomainError
from app.modules.ble_link.ble_link_models import (
    ChannelMap,
    ConnectionParams,
    LinkLayerPacket,
    ParseResult,
    ParseStatus,
    PduType,
)
from app.modules.ble_link.ble_link_service import ADVERTISING_ACCESS_ADDRESS, encode_connect_ind
from app.modules.edge_core.edge_models import ControllerState, PerProfile
from app.modules.edge_core.latency_service import LAPTOP_PROFILE, MCU_PROFILE
from app.modules.hop_select.hop_models import ExcitationMode, ExcitationSchedule, HopAlgorithm, HopState
from app.modules.hop_select.hop_service import channel_for_event
from app.modules.sim import sim_service
from app.modules.sim.channel_model import ChannelRuntime, cell_rng, success_probability
from app.modules.sim.event_loop import EventLoop
from app.modules.sim.network import Network, PeripheralReceiver, Receiver
from app.modules.sim.sim_models import ChannelModelConfig, EventKind, MappingMode
from app.modules.tag_core.tag_models import TagState

IDEAL = ChannelModelConfig(name="ideal")
LOSSY = ChannelModelConfig(
    name="lossy",
    default_per=0.01,
    base_per={3: 0.03, 8: 0.03},
    neighbor_2mhz_fail=True,
    degraded_shift_band=(26, 30),
    degraded_loss=0.6,
)
HOP_SET = ChannelMap(used=frozenset(range(17, 32)))

# ==============================================================================
# Bucle de eventos
# ==============================================================================

def test_event_loop_orders_by_time_then_priority_then_insertion():
    loop = EventLoop()
    seen = []
    loop.schedule(10.0, EventKind.EDGE_ANNOUNCE, counter=1)
    loop.schedule(10.0, EventKind.EXCITATION_START, counter=2)
    loop.schedule(10.0, EventKind.EXCITATION_START, counter=3)
    loop.schedule(5.0, EventKind.RECEIVER_DECODE, counter=4)
    loop.schedule(10.0, EventKind.DOWNLINK_SEND, counter=5)
    handlers = {kind: (lambda event: seen.append(event.counter)) for kind in EventKind}
    assert loop.run(handlers) == 5
    assert seen == [4, 5, 2, 3, 1]
    assert loop.now == 10.0


def test_event_loop_rejects_past_events_and_stops_at_horizon():
    loop = EventLoop()
    loop.schedule(1.0, EventKind.EDGE_ANNOUNCE)
    loop.schedule(50.0, EventKind.EDGE_ANNOUNCE)
    assert loop.run({}, until_us=10.0) == 1
    assert len(loop) == 1
    with pytest.raises(ValueError):
        loop.schedule(0.5, EventKind.EDGE_ANNOUNCE)

# ==============================================================================
# Modelo de canal
# ==============================================================================

def test_success_probability_rules():
    assert success_probability(IDEAL, 0, 1) == 1.0
    # 0 (2404 MHz) -> 1 (2406 MHz): vecino a 2 MHz.
    assert success_probability(LOSSY, 0, 1) == 0.0
    assert success_probability(LOSSY, 0, 37) == 0.0
    # 0 -> 13 (2432 MHz): 28 MHz, dentro de la banda degradada.
    assert success_probability(LOSSY, 0, 13) == pytest.approx(0.99 * 0.4)
    assert success_probability(LOSSY, 37, 3) == pytest.approx(0.97)


def test_cell_streams_are_independent_of_other_cells():
    alone = ChannelRuntime(LOSSY.model_copy(update={"default_per": 0.5}), seed=11)
    mixed = ChannelRuntime(LOSSY.model_copy(update={"default_per": 0.5}), seed=11)
    first = [alone.delivered(37, 20) for _ in range(50)]
    second = []
    for _ in range(50):
        mixed.delivered(37, 21)
        second.append(mixed.delivered(37, 20))
    assert first == second


def test_cell_rng_depends_on_seed_and_pair():
    a = cell_rng(1, 37, 20).random(4).tolist()
    assert a == cell_rng(1, 37, 20).random(4).tolist()
    assert a != cell_rng(2, 37, 20).random(4).tolist()
    assert a != cell_rng(1, 20, 37).random(4).tolist()


def test_channel_model_rng_seed_overrides_run_seed():
    pinned = LOSSY.model_copy(update={"rng_seed": 99})
    assert ChannelRuntime(pinned, seed=1).seed == 99
    assert ChannelRuntime(LOSSY, seed=1).seed == 1


def test_network_requires_packets():
    schedule = ExcitationSchedule(mode=ExcitationMode.FIXED, fixed_channel=37)
    network = Network(
        controller=ControllerState(schedule=schedule, interval_us=10_000),
        tag=TagState(excitation_schedule=schedule, fixed_target=12),
        latency=MCU_PROFILE,
        channel_model=IDEAL,
        seed=1,
    )
    with pytest.raises(DomainError):
        network.run(0)


def test_network_fixed_target_delivers_every_packet_on_ideal_channel():
    schedule = ExcitationSchedule(mode=ExcitationMode.FIXED, fixed_channel=37)
    target = Receiver(12)
    other = Receiver(13)
    network = Network(
        controller=ControllerState(schedule=schedule, interval_us=10_000),
        tag=TagState(excitation_schedule=schedule, fixed_target=12),
        latency=MCU_PROFILE,
        channel_model=IDEAL,
        seed=1,
        receivers=[target, other],
    ).run(25)
    assert network.excitations == 25
    assert network.emitted == 25
    assert network.off_target == 0
    assert target.decoded == 25
    assert other.arrivals == 0


def hopping_network(latency, n_packets, *, refresh_every=1, target_channel=37):
    hop = HopState(hop_increment=7)
    schedule = ExcitationSchedule(mode=ExcitationMode.CSA1, hop=hop)
    target = Receiver(target_channel)
    network = Network(
        controller=ControllerState(schedule=schedule, interval_us=7_500, refresh_every=refresh_every),
        tag=TagState(excitation_schedule=schedule, fixed_target=target_channel),
        latency=latency,
        channel_model=IDEAL,
        seed=1,
        receivers=[target],
    ).run(n_packets)
    return network, target


def test_network_late_downlink_frames_are_stale_and_tag_self_heals():
    # Con 7.5 ms entre paquetes, cada trama del laptop llega después de su excitación.
    network, target = hopping_network(LAPTOP_PROFILE, 200)
    assert network.excitations == 200
    assert network.off_target == 0
    assert target.decoded == 200
    assert network.tag.stale_frames == 199
    assert network.tag.self_heals == 200


def test_network_refresh_every_tenth_packet_keeps_the_tag_on_schedule():
    network, target = hopping_network(MCU_PROFILE, 200, refresh_every=10)
    assert network.off_target == 0
    assert target.decoded == 200
    assert network.tag.self_heals == 180
    assert network.tag.stale_frames == 0


@pytest.mark.parametrize("mode, target_channel", [(ExcitationMode.ADVERTISING, 20), (ExcitationMode.CSA1, 37)])
def test_network_stays_on_target_past_the_16_bit_counter_wrap(mode, target_channel):
    n_packets = 0x10000 + 30
    hop = HopState(hop_increment=7) if mode is ExcitationMode.CSA1 else None
    schedule = ExcitationSchedule(mode=mode, hop=hop)
    target = Receiver(target_channel)
    network = Network(
        controller=ControllerState(schedule=schedule, interval_us=7_500),
        tag=TagState(excitation_schedule=schedule, fixed_target=target_channel),
        latency=MCU_PROFILE,
        channel_model=IDEAL,
        seed=1,
        receivers=[target],
    ).run(n_packets)
    assert network.off_target == 0
    assert target.decoded == n_packets
    assert network.tag.tick_index == n_packets - 1
    assert network.tag.packet_counter == (n_packets - 1) & 0xFFFF


def test_peripheral_follows_csa1_past_the_16_bit_counter_wrap():
    params = ConnectionParams(channel_map=ChannelMap(used=frozenset({15, 30})), hop_increment=7)
    connect_ind = LinkLayerPacket(
        access_address=ADVERTISING_ACCESS_ADDRESS,
        pdu_type=PduType.CONNECT_IND,
        payload=encode_connect_ind(params),
        whitening_channel=37,
    )
    peripheral = PeripheralReceiver(37)
    peripheral.on_tick(0)
    peripheral.on_packet(ParseResult(status=ParseStatus.OK, packet=connect_ind), 0)
    oracle = HopState(
        algorithm=HopAlgorithm.CSA1,
        hop_increment=7,
        access_address=params.access_address,
        channel_map=params.channel_map,
    )
    for tick in range(1, 0x10000 + 5):
        peripheral.on_tick(tick & 0xFFFF)
    assert peripheral.listening() == channel_for_event(oracle, 0x10000 + 3)

# ==============================================================================
# Matrices de éxito
# ==============================================================================

def test_mapping_pairs_sizes():
    assert len(sim_service.mapping_pairs(MappingMode.N_TO_1, target=20)) == 39
    assert len(sim_service.mapping_pairs(MappingMode.ONE_TO_N, excitation=37)[0][1]) == 39
    rows = sim_service.mapping_pairs(MappingMode.N_TO_N)
    assert sum(len(targets) for _, targets in rows) == 1560


@pytest.mark.parametrize(
    "mode, kwargs",
    [
        (MappingMode.N_TO_1, {}),
        (MappingMode.ONE_TO_N, {}),
        (MappingMode.EXPLICIT, {"excitations": [33]}),
    ],
)
def test_mapping_pairs_require_their_arguments(mode, kwargs):
    with pytest.raises(DomainError):
        sim_service.mapping_pairs(mode, **kwargs)


def test_ideal_mapping_subset_is_all_ones():
    report = sim_service.run_mapping(
        MappingMode.EXPLICIT, 30, IDEAL, excitations=[37, 0, 20], targets=[37, 1, 12, 39], seed=3,
    )
    assert report.cells == 11
    values = [v for row in report.matrix.rate for v in row if v is not None]
    assert values == [1.0] * 11
    assert report.median == 1.0


def test_lossy_mapping_has_neighbor_nulls_and_degraded_band():
    report = sim_service.run_mapping(
        MappingMode.EXPLICIT, 400, LOSSY, excitations=[0], targets=[1, 13, 25], seed=5,
    )
    axis = report.matrix.axis
    row = report.matrix.rate[axis.index(0)]
    assert row[axis.index(1)] == 0.0
    assert 0.3 < row[axis.index(13)] < 0.5
    # 0 -> 25 (2456 MHz): 52 MHz, fuera de la banda.
    assert row[axis.index(25)] > 0.95


def test_mapping_is_deterministic_for_a_seed():
    kwargs = dict(excitations=[33, 34], targets=[22, 23], seed=42)
    first = sim_service.run_mapping(MappingMode.EXPLICIT, 200, LOSSY, **kwargs)
    second = sim_service.run_mapping(MappingMode.EXPLICIT, 200, LOSSY, **kwargs)
    assert first == second


def test_mapping_rejects_zero_packets():
    with pytest.raises(DomainError):
        sim_service.run_mapping(MappingMode.N_TO_N, 0, IDEAL)

# ==============================================================================
# Algoritmos de salto
# ==============================================================================

@pytest.mark.parametrize("algorithm", [HopAlgorithm.CSA1, HopAlgorithm.CSA2])
def test_ideal_hopping_matches_the_oracle_exactly(algorithm):
    report = sim_service.run_hop_algorithm(algorithm, HOP_SET, 400, IDEAL, seed=1)
    assert report.observed == report.expected
    assert report.aggregate_success == 1.0
    assert sum(report.expected.values()) == 400


def test_lossy_hopping_stays_within_binomial_tolerance():
    report = sim_service.run_hop_algorithm(HopAlgorithm.CSA1, HOP_SET, 1000, LOSSY, seed=7)
    for channel in report.used:
        n = report.expected[channel]
        p = success_probability(LOSSY, 37, channel)
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(report.observed[channel] - n * p) <= 4 * sigma + 1
    assert report.min_channel_success >= 0.9


def test_hopping_rejects_excitation_inside_hop_set():
    with pytest.raises(DomainError):
        sim_service.run_hop_algorithm(HopAlgorithm.CSA1, HOP_SET, 10, IDEAL, excitation_channel=20)

# ==============================================================================
# Conexión
# ==============================================================================

def test_connection_follows_csa1_and_survives_a_dropped_counter():
    params = ConnectionParams(channel_map=ChannelMap(used=frozenset({15, 30})), hop_increment=7)
    report = sim_service.run_connection(params, 10, drop_counters=[6], seed=1)
    assert report.connected
    assert report.event_channels == report.expected_channels
    assert report.event_channels[:5] == [30, 15, 30, 15, 30]
    assert report.writes_received >= 10
    assert report.off_channel_emissions == 0
    assert report.dropped_downlink == [6]
    assert report.self_heals == 1
    assert report.trace[0].pdu_type == "ADV_IND"
    assert any(record.pdu_type == "CONNECT_IND" and record.source == "peripheral" for record in report.trace)
    assert any(record.status == "dropped" for record in report.trace)


def test_connection_rejects_non_advertising_channel():
    with pytest.raises(DomainError):
        sim_service.run_connection(ConnectionParams(), 5, adv_channel=12)

# ==============================================================================
# Throughput
# ==============================================================================

def test_throughput_full_utilization():
    report = sim_service.run_throughput(37, 8.08, 31, cycles=2, seed=1)
    assert report.model_kbps == pytest.approx(30.69, abs=0.01)
    assert report.simulated_kbps == pytest.approx(report.model_kbps)
    assert report.ratio_vs_full == 1.0


def test_throughput_scales_with_channels_used():
    half = sim_service.run_throughput(18, 8.08, 31, cycles=2, seed=1)
    assert half.utilization == pytest.approx(18 / 37)
    assert half.simulated_kbps == pytest.approx(half.model_kbps)
    assert half.model_kbps == pytest.approx(30.69 * 18 / 37, abs=0.01)


def test_throughput_tag_only_emits_on_handled_excitations():
    report = sim_service.run_throughput(18, 8.08, 31, cycles=2, seed=1)
    assert report.emitted_packets == 18 * 2


def test_throughput_rejects_bad_channel_count():
    with pytest.raises(DomainError):
        sim_service.run_throughput(0, 8.08, 31)

# ==============================================================================
# Optimización
# ==============================================================================

def test_uniform_profile_gain_is_exactly_one():
    profile = PerProfile(name="flat", per={ch: 0.05 for ch in range(37) if ch != 19})
    report = sim_service.run_optimization(profile, 50, 180, scan_packets=50, seed=2)
    assert report.excluded == []
    assert report.gain == 1.0
    assert report.before_kbps == report.after_kbps


def test_single_perfect_channel_keeps_lowest_index_tie_and_reports_delivered_gain():
    profile = PerProfile(name="one-perfect", per={0: 0.0, 1: 1.0, 2: 1.0, 3: 1.0})
    report = sim_service.run_optimization(profile, 50, 20, scan_packets=50, seed=3)
    assert report.kept == [0, 1]
    assert report.excluded == [2, 3]
    assert report.bottom_before_kbps == 0.0
    assert report.aggregate_gain == pytest.approx(2.0)
    assert report.gain == report.aggregate_gain


def test_skewed_profile_improves_bottom_goodput(fixtures_dir):
    bad = {2: 0.9, 5: 0.85, 8: 0.8, 11: 0.75, 14: 0.7, 23: 0.65, 26: 0.6, 29: 0.55, 32: 0.5, 35: 0.45}
    per = {ch: bad.get(ch, 0.0003 * (i + 1)) for i, ch in enumerate(c for c in range(37) if c != 19)}
    report = sim_service.run_optimization(PerProfile(name="skewed", per=per), 50, 180, scan_packets=100, seed=4)
    assert set(report.excluded) >= set(bad)
    assert report.gain >= 3.0
    assert all(ch not in report.after_kbps for ch in report.excluded)


def test_optimization_requires_enough_packets_per_channel():
    profile = PerProfile(per={ch: 0.05 for ch in range(10)})
    with pytest.raises(DomainError):
        sim_service.run_optimization(profile, 50, 1)

# ==============================================================================
# Latencia
# ==============================================================================

def test_latency_report():
    report = sim_service.run_latency(20, (MCU_PROFILE, LAPTOP_PROFILE))
    assert report.breakdowns[0].total_us == pytest.approx(5800.0)
    assert report.plm_ms == 2240
    assert report.ratio >= 380
    assert all(row["feasible"] for row in report.feasibility["mcu"])
    assert not all(row["feasible"] for row in report.feasibility["laptop"])
    assert report.resources[0]["n_states"] == 2


def test_latency_requires_a_profile():
    with pytest.raises(DomainError):
        sim_service.run_latency(20, ())
