# /backend/tests/test_tag_core.py

import math
from fractions import Fraction

import numpy as np
import pytest

from app.core.exceptions import DomainError
from app.modules.ble_link.ble_link_models import ChannelMap, ConnectionParams, ParseStatus, PduType
from app.modules.ble_link.ble_link_service import parse, unpack_bits
from app.modules.edge_core import downlink_service
from app.modules.hop_select.hop_models import ExcitationMode, ExcitationSchedule, HopAlgorithm, HopState
from app.modules.hop_select.hop_service import channel_for_event
from app.modules.tag_core import clock_service, tag_service
from app.modules.tag_core.tag_models import LinkPhase, Sideband, TagState

PI = math.pi


def fixed_schedule(channel: int) -> ExcitationSchedule:
    return ExcitationSchedule(mode=ExcitationMode.FIXED, fixed_channel=channel)


def started(tag: TagState) -> TagState:
    return tag_service.apply_control(tag, downlink_service.encode_start())

# ==============================================================================
# Modulación de fase
# ==============================================================================

def test_phase_sequence_example():
    controls = tag_service.phase_sequence([0, 1, 1, 0, 1, 0, 1, 1]).controls
    assert controls == (0.0, PI, 0.0, 0.0, PI, PI, 0.0, PI)


def test_phase_sequence_matches_running_parity():
    rng = np.random.default_rng(7)
    for _ in range(20):
        bits = rng.integers(0, 2, size=int(rng.integers(1, 200)))
        parity = 0
        expected = []
        for bit in bits:
            parity ^= int(bit)
            expected.append(PI if parity else 0.0)
        assert tag_service.phase_sequence(bits).controls == tuple(expected)

# ==============================================================================
# Tabla de reloj
# ==============================================================================

def test_clock_table_has_39_exact_states():
    table = clock_service.build_clock_table()
    assert len(table.states) == 39
    for k, state in enumerate(table.states, start=1):
        assert state.output_freq == Fraction(2 * k)


def test_every_channel_pair_resolves_to_a_table_state():
    states = set()
    pairs = 0
    for excitation in range(40):
        for target in range(40):
            if excitation == target:
                continue
            pairs += 1
            state = clock_service.lookup(excitation, target)
            plan = clock_service.shift_for(excitation, target)
            assert state.output_mhz == plan.shift_mhz
            states.add(state)
    assert pairs == 1560
    assert len(states) == 39


def test_shift_plan_sideband_and_mirror():
    plan = clock_service.shift_for(4, 6)
    assert plan.shift_mhz == 4
    assert plan.sideband is Sideband.UPPER
    assert plan.mirror == 2

    lower = clock_service.shift_for(6, 4)
    assert lower.sideband is Sideband.LOWER
    assert lower.mirror == 8

    # 37 (2402 MHz) hacia 39 (2480 MHz): el espejo cae fuera de la banda.
    assert clock_service.shift_for(37, 39).mirror is None


def test_shift_for_same_channel_is_rejected():
    with pytest.raises(DomainError):
        clock_service.shift_for(12, 12)


def test_resource_estimate_single_state():
    estimate = clock_service.resource_estimate(1, 4)
    assert estimate.words == 17
    assert estimate.bits == 663
    assert estimate.lut_equivalents == 11


@pytest.mark.parametrize("clocks", [0, 7])
def test_resource_estimate_rejects_clock_count(clocks):
    with pytest.raises(DomainError):
        clock_service.resource_estimate(4, clocks)


def test_resource_report_lists_measured_points():
    report = clock_service.resource_report(4)
    assert [row["n_states"] for row in report] == [2, 4, 8, 16, 32, 64]
    assert report[0]["bits"] == 2 * 663

# ==============================================================================
# Downlink y auto-reparación
# ==============================================================================

def test_unsynchronized_tag_ignores_frames_and_stays_silent():
    tag = TagState(excitation_schedule=fixed_schedule(37), fixed_target=12)
    assert tag_service.on_downlink(tag, downlink_service.encode_packet_counter(4)) == tag
    assert tag_service.backscatter(tag, 37) is None


def test_start_resets_counter_so_first_tick_is_zero():
    tag = started(TagState(excitation_schedule=fixed_schedule(37), fixed_target=12))
    assert tag.synchronized
    tag = tag_service.on_downlink(tag, None)
    assert tag.packet_counter == 0
    assert tag.excitation_channel == 37
    assert tag.target_channel == 12
    assert tag.active_clock == clock_service.lookup(37, 12)


def test_counter_advances_one_per_tick_without_frames():
    tag = started(TagState(excitation_schedule=fixed_schedule(37), fixed_target=12))
    for expected in range(5):
        tag = tag_service.on_downlink(tag, None)
        assert tag.packet_counter == expected
    assert tag.self_heals == 5


def hopping_tag() -> TagState:
    hop = HopState(hop_increment=7)
    schedule = ExcitationSchedule(mode=ExcitationMode.CSA1, hop=hop)
    return started(TagState(excitation_schedule=schedule, fixed_target=37))


def test_packet_counter_frame_sets_counter_and_predicts_excitation():
    tag = tag_service.on_downlink(hopping_tag(), downlink_service.encode_packet_counter(5))
    assert tag.packet_counter == 5
    assert tag.excitation_channel == channel_for_event(HopState(hop_increment=7), 5)
    assert tag.self_heals == 0


def test_missing_frame_self_heals_to_the_same_state():
    full = hopping_tag()
    lossy = hopping_tag()
    for counter in range(8):
        frame = downlink_service.encode_packet_counter(counter)
        full = tag_service.on_downlink(full, frame)
        lossy = tag_service.on_downlink(lossy, None if counter == 3 else frame)
        assert lossy.packet_counter == full.packet_counter
        assert lossy.excitation_channel == full.excitation_channel
        assert lossy.active_clock == full.active_clock
    assert lossy.self_heals == 1


def test_corrupted_frame_is_treated_as_missing():
    tag = hopping_tag()
    frame = bytearray(downlink_service.encode_packet_counter(9))
    frame[-1] ^= 0xFF
    tag = tag_service.on_downlink(tag, bytes(frame))
    assert tag.packet_counter == 0
    assert tag.self_heals == 1


def test_stale_counter_is_discarded():
    tag = hopping_tag()
    for counter in range(11):
        tag = tag_service.on_downlink(tag, downlink_service.encode_packet_counter(counter))
    tag = tag_service.on_downlink(tag, downlink_service.encode_packet_counter(3))
    assert tag.packet_counter == 11
    assert tag.stale_frames == 1


def test_counter_behind_the_tick_is_stale_and_tag_self_heals():
    hop = HopState(hop_increment=7)
    tag = tag_service.on_downlink(hopping_tag(), None)
    for counter in range(5):
        # Cada trama llega un tick tarde.
        tag = tag_service.on_downlink(tag, downlink_service.encode_packet_counter(counter))
        assert tag.packet_counter == counter + 1
        assert tag.excitation_channel == channel_for_event(hop, counter + 1)
    assert tag.stale_frames == 5
    assert tag.self_heals == 6


def test_counter_wraps_at_16_bits_and_tick_index_keeps_counting():
    hop = HopState(hop_increment=7)
    tag = hopping_tag().model_copy(update={"packet_counter": 0xFFFE, "tick_index": 0xFFFE})
    tag = tag_service.on_downlink(tag, downlink_service.encode_packet_counter(0xFFFF))
    assert tag.excitation_channel == channel_for_event(hop, 0xFFFF)
    tag = tag_service.on_downlink(tag, downlink_service.encode_packet_counter(0))
    assert tag.packet_counter == 0
    assert tag.tick_index == 0x10000
    assert tag.excitation_channel == channel_for_event(hop, 0)
    assert tag.stale_frames == 0
    tag = tag_service.on_downlink(tag, None)
    assert tag.packet_counter == 1
    assert tag.tick_index == 0x10001


def test_channel_info_under_unknown_schedule_applies_to_one_tick():
    schedule = ExcitationSchedule(mode=ExcitationMode.UNKNOWN)
    tag = started(TagState(excitation_schedule=schedule, fixed_target=12))
    tag = tag_service.on_downlink(tag, downlink_service.encode_channel_info(38))
    assert tag.excitation_channel == 38
    assert tag.active_clock == clock_service.lookup(38, 12)
    tag = tag_service.on_downlink(tag, None)
    assert tag.excitation_channel is None
    assert tag.active_clock is None
    assert tag_service.backscatter(tag, 38) is None


def test_channel_info_replaces_fixed_schedule():
    tag = started(TagState(excitation_schedule=fixed_schedule(37), fixed_target=12))
    tag = tag_service.on_downlink(tag, downlink_service.encode_channel_info(39))
    tag = tag_service.on_downlink(tag, None)
    assert tag.excitation_channel == 39
    assert tag.excitation_schedule.fixed_channel == 39


def test_channel_map_update_changes_hop_set():
    hop = HopState(hop_increment=7)
    tag = started(TagState(excitation_schedule=fixed_schedule(37), hop_state=hop))
    update = ChannelMap(used=frozenset({15, 30}))
    tag = tag_service.apply_control(tag, downlink_service.encode_channel_map(update))
    assert tag.channel_map == update
    tag = tag_service.on_downlink(tag, None)
    assert tag.target_channel == 30

# ==============================================================================
# Backscatter
# ==============================================================================

def test_backscatter_lands_on_target_and_decodes():
    tag = tag_service.on_downlink(started(TagState(excitation_schedule=fixed_schedule(37), fixed_target=12)), None)
    emitted = tag_service.backscatter(tag, 37)
    assert emitted.on_target
    assert emitted.channel == 12
    result = parse(unpack_bits(emitted.air)[: emitted.n_bits], 12)
    assert result.status is ParseStatus.OK
    assert result.packet.pdu_type is PduType.ADV_NONCONN_IND
    assert len(emitted.phase) == emitted.n_bits


def test_wrong_excitation_lands_off_target_and_fails_crc():
    tag = tag_service.on_downlink(started(TagState(excitation_schedule=fixed_schedule(37), fixed_target=12)), None)
    emitted = tag_service.backscatter(tag, 38)
    assert not emitted.on_target
    # 2426 + (2430 - 2402) = 2454 MHz -> canal 24
    assert emitted.channel == 24
    assert parse(unpack_bits(emitted.air)[: emitted.n_bits], 24).status is not ParseStatus.OK


def test_tag_rejects_both_target_sources():
    with pytest.raises(ValueError):
        TagState(excitation_schedule=fixed_schedule(37), fixed_target=12, hop_state=HopState())

# ==============================================================================
# Conexión
# ==============================================================================

def test_conn_info_drives_connect_ind_then_csa1_events():
    params = ConnectionParams(channel_map=ChannelMap(used=frozenset({15, 30})), hop_increment=7)
    schedule = ExcitationSchedule(mode=ExcitationMode.ADVERTISING)
    tag = started(TagState(excitation_schedule=schedule, adv_channel=37))
    tag = tag_service.apply_control(tag, downlink_service.encode_conn_info(params))
    assert tag.link_phase is LinkPhase.CONNECT_PENDING
    # El tick 0 excita en 37, el mismo canal de advertising: el CONNECT_IND va en el tick 1.
    assert tag.connect_ind_counter == 1
    assert tag.hop_origin == 2

    tag = tag_service.on_downlink(tag, downlink_service.encode_packet_counter(0))
    assert tag.target_channel is None
    assert tag_service.backscatter(tag, 37) is None

    tag = tag_service.on_downlink(tag, downlink_service.encode_packet_counter(1))
    emitted = tag_service.backscatter(tag, 38)
    assert emitted.pdu_type is PduType.CONNECT_IND
    assert emitted.channel == 37

    hop = HopState(algorithm=HopAlgorithm.CSA1, hop_increment=7, channel_map=params.channel_map)
    for event in range(4):
        tag = tag_service.on_downlink(tag, downlink_service.encode_packet_counter(2 + event))
        assert tag.link_phase is LinkPhase.CONNECTED
        assert tag.target_channel == channel_for_event(hop, event)
        emitted = tag_service.backscatter(tag, tag.excitation_channel)
        assert emitted.pdu_type is PduType.LL_DATA_START
        result = parse(unpack_bits(emitted.air)[: emitted.n_bits], emitted.channel, crc_init=params.crc_init)
        assert result.ok


def test_phase_sequence_small_cases():
    assert tag_service.phase_sequence([0] * 6).controls == (0.0,) * 6
    assert tag_service.phase_sequence([1, 1]).controls == (PI, 0.0)


def test_phase_sequence_all_byte_patterns():
    for value in range(256):
        bits = [(value >> i) & 1 for i in range(8)]
        expected = tuple(float((sum(bits[: i + 1]) * PI) % (2 * PI)) for i in range(8))
        assert tag_service.phase_sequence(bits).controls == pytest.approx(expected)


def test_resource_estimate_extremes():
    assert clock_service.resource_estimate(0, 3).bits == 0
    largest = clock_service.resource_estimate(64, 4)
    assert largest.bits == 42432
    assert largest.lut_equivalents == 663


def test_double_sideband_example_lands_on_target_and_mirror():
    tag = started(TagState(excitation_schedule=fixed_schedule(4), fixed_target=6))
    tag = tag_service.on_downlink(tag, None)
    assert tag.active_clock.output_mhz == 4
    emitted = tag_service.backscatter(tag, 4)
    assert (emitted.channel, emitted.mirror_channel) == (6, 2)


def test_tag_stays_silent_on_excitations_it_does_not_handle():
    schedule = ExcitationSchedule(mode=ExcitationMode.CSA1, hop=HopState(hop_increment=7))
    tag = started(TagState(excitation_schedule=schedule, fixed_target=37, handled_excitations=frozenset({7})))
    tag = tag_service.on_downlink(tag, downlink_service.encode_packet_counter(0))
    assert tag.excitation_channel == 7
    assert tag.active_clock == clock_service.lookup(7, 37)
    tag = tag_service.on_downlink(tag, downlink_service.encode_packet_counter(1))
    assert tag.excitation_channel == channel_for_event(HopState(hop_increment=7), 1)
    assert tag.active_clock is None
    assert tag_service.backscatter(tag, tag.excitation_channel) is None
