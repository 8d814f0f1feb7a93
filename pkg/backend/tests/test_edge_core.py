# /backend/tests/test_edge_core.py

import pytest

from app.core.exceptions import DomainError, FrameDecodeError
from app.modules.ble_link.ble_link_models import ChannelMap, ConnectionParams
from app.modules.edge_core import controller_service, downlink_service, latency_service
from app.modules.edge_core.edge_models import ActionKind, ControllerState, FrameKind, PerProfile
from app.modules.edge_core.optimizer_service import scan_and_optimize
from app.modules.hop_select.hop_models import ExcitationMode, ExcitationSchedule, HopState
from app.modules.hop_select.hop_service import channel_for_event

# ==============================================================================
# Tramas de downlink
# ==============================================================================

def test_crc8_check_value():
    # CRC-8 (poly 0x07, init 0) sobre "123456789".
    assert downlink_service.crc8(b"123456789") == 0xF4


def test_frame_layout():
    frame = downlink_service.encode_packet_counter(0x1234)
    assert frame[:3] == bytes((0xAA, FrameKind.PACKET_COUNTER, 2))
    assert frame[3:5] == b"\x34\x12"
    assert frame[5] == downlink_service.crc8(frame[1:5])
    assert len(frame) == downlink_service.frame_wire_length(FrameKind.PACKET_COUNTER) == 6


@pytest.mark.parametrize(
    "frame, reader, expected",
    [
        (downlink_service.encode_channel_info(38), downlink_service.read_channel, 38),
        (downlink_service.encode_packet_counter(70000), downlink_service.read_counter, 70000 & 0xFFFF),
        (
            downlink_service.encode_channel_map(ChannelMap(used=frozenset({1, 36}))),
            downlink_service.read_channel_map,
            ChannelMap(used=frozenset({1, 36})),
        ),
    ],
)
def test_frame_payload_readers(frame, reader, expected):
    assert reader(downlink_service.frame_decode(frame)) == expected


def test_conn_info_frame_carries_connect_ind():
    params = ConnectionParams(channel_map=ChannelMap(used=frozenset({15, 30})))
    frame = downlink_service.encode_conn_info(params)
    assert len(frame) == 38
    assert downlink_service.read_conn_info(downlink_service.frame_decode(frame)) == params


@pytest.mark.parametrize(
    "mutate",
    [
        lambda f: b"\x55" + f[1:],
        lambda f: f[:-1] + bytes((f[-1] ^ 0x01,)),
        lambda f: f[:-1],
        lambda f: f[:1] + b"\x09" + f[2:],
        lambda f: b"\xaa\x02",
    ],
    ids=["preambulo", "crc", "longitud", "tipo", "corta"],
)
def test_frame_decode_rejects_invalid_frames(mutate):
    frame = downlink_service.encode_channel_info(12)
    with pytest.raises(FrameDecodeError):
        downlink_service.frame_decode(mutate(frame))


def test_frame_encode_rejects_wrong_payload_length():
    with pytest.raises(DomainError):
        downlink_service.frame_encode(FrameKind.CHANNEL_INFO, b"\x01\x02")
    with pytest.raises(DomainError):
        downlink_service.encode_channel_info(40)


def test_channel_info_with_invalid_channel_is_a_decode_error():
    body = bytes((FrameKind.CHANNEL_INFO, 1, 45))
    frame = downlink_service.frame_decode(b"\xaa" + body + bytes((downlink_service.crc8(body),)))
    with pytest.raises(FrameDecodeError):
        downlink_service.read_channel(frame)

# ==============================================================================
# Latencia
# ==============================================================================

def test_mcu_forwarding_delay_for_20_bytes():
    breakdown = latency_service.forwarding_delay(latency_service.MCU_PROFILE, 20)
    assert breakdown.total_us == pytest.approx(5800.0)
    assert breakdown.components["uart"] == pytest.approx(200.0)
    assert breakdown.components["spi"] == pytest.approx(40.0)
    assert sum(breakdown.components.values()) == pytest.approx(breakdown.total_us)


@pytest.mark.parametrize("n_bytes, total", [(0, 5560.0), (6, 5632.0), (38, 6016.0)])
def test_mcu_delay_grows_12us_per_byte(n_bytes, total):
    assert latency_service.forwarding_delay(latency_service.MCU_PROFILE, n_bytes).total_us == pytest.approx(total)


def test_plm_delay_and_ratio():
    plm_ms = latency_service.plm_delay(20, 14)
    assert plm_ms == 2240
    assert plm_ms * 1000 / 5800 >= 380
    assert latency_service.plm_delay(20, 14, symbol_bits=2) == 1120


def test_latency_rejects_bad_inputs():
    with pytest.raises(DomainError):
        latency_service.forwarding_delay(latency_service.MCU_PROFILE, -1)
    with pytest.raises(DomainError):
        latency_service.plm_delay(20, 0)
    with pytest.raises(DomainError):
        latency_service.uart_time(10, 0)


def test_hopping_feasibility_mcu_fits_laptop_misses():
    frame = downlink_service.frame_wire_length(FrameKind.PACKET_COUNTER)
    mcu = latency_service.hopping_feasibility(latency_service.forwarding_delay(latency_service.MCU_PROFILE, frame))
    assert all(row["feasible"] for row in mcu)

    laptop_delay = latency_service.forwarding_delay(latency_service.LAPTOP_PROFILE, frame)
    assert laptop_delay.total_us == pytest.approx(7959.8, abs=0.1)
    laptop = {row["mode"]: row["feasible"] for row in latency_service.hopping_feasibility(laptop_delay)}
    assert laptop == {"advertising": True, "periodic_advertising": False, "connection": False}

# ==============================================================================
# Optimizador
# ==============================================================================

def test_optimizer_keeps_channels_at_or_below_median():
    profile = PerProfile(per={0: 0.01, 1: 0.02, 2: 0.5, 3: 0.03, 4: 0.9})
    assert scan_and_optimize(profile).sorted_used == [0, 1, 3]


def test_optimizer_uniform_profile_keeps_everything():
    profile = PerProfile(per={ch: 0.05 for ch in range(37)})
    assert scan_and_optimize(profile).sorted_used == list(range(37))


def test_optimizer_guard_keeps_two_lowest():
    profile = PerProfile(per={5: 0.1, 9: 0.4})
    kept = scan_and_optimize(profile).sorted_used
    assert kept == [5, 9]


def test_optimizer_single_perfect_channel_keeps_it_and_lowest_index_tie():
    # Mediana = peor PER: se conservan los canales por debajo del peor y la
    # guarda completa el mínimo con el índice más bajo del empate.
    profile = PerProfile(per={0: 0.0, 1: 1.0, 2: 1.0, 3: 1.0})
    assert scan_and_optimize(profile).sorted_used == [0, 1]


def test_optimizer_needs_two_channels():
    with pytest.raises(DomainError):
        scan_and_optimize(PerProfile(per={5: 0.1}))

# ==============================================================================
# Controlador
# ==============================================================================

def test_controller_first_tick_sends_start_then_counter():
    hop = HopState(hop_increment=7)
    state = ControllerState(schedule=ExcitationSchedule(mode=ExcitationMode.CSA1, hop=hop), interval_us=7500)
    actions, state = controller_service.edge_tick(state, 0.0)
    kinds = [action.frame_kind for action in actions if action.kind is ActionKind.SEND_FRAME]
    assert kinds == [FrameKind.START, FrameKind.PACKET_COUNTER]
    excite = actions[-1]
    assert excite.kind is ActionKind.EXCITE
    assert excite.time_us == 7500
    assert excite.channel == channel_for_event(hop, 0)

    actions, state = controller_service.edge_tick(state, 7500.0)
    kinds = [action.frame_kind for action in actions if action.kind is ActionKind.SEND_FRAME]
    assert kinds == [FrameKind.PACKET_COUNTER]
    assert actions[-1].counter == 1
    assert state.next_counter == 2


def test_controller_start_is_sent_once_ahead_of_the_first_tick():
    hop = HopState(hop_increment=7)
    state = ControllerState(schedule=ExcitationSchedule(mode=ExcitationMode.CSA1, hop=hop), interval_us=7500)
    actions, state = controller_service.edge_start(state, 0.0)
    assert [a.frame_kind for a in actions] == [FrameKind.START]
    assert state.started
    assert controller_service.edge_start(state, 10.0) == ([], state)
    actions, state = controller_service.edge_tick(state, 7770.0)
    kinds = [a.frame_kind for a in actions if a.kind is ActionKind.SEND_FRAME]
    assert kinds == [FrameKind.PACKET_COUNTER]
    assert state.next_counter == 1


def test_controller_counter_wraps_at_16_bits():
    hop = HopState(hop_increment=7)
    state = ControllerState(
        schedule=ExcitationSchedule(mode=ExcitationMode.CSA1, hop=hop),
        interval_us=7500,
        next_counter=0xFFFF,
        started=True,
    )
    actions, state = controller_service.edge_tick(state, 0.0)
    assert actions[-1].counter == 0xFFFF
    assert actions[-1].channel == channel_for_event(hop, 0xFFFF)
    assert state.next_counter == 0
    actions, state = controller_service.edge_tick(state, 7500.0)
    assert actions[-1].counter == 0
    assert actions[-1].channel == channel_for_event(hop, 0)
    assert downlink_service.read_counter(downlink_service.frame_decode(actions[0].frame)) == 0


def test_controller_refresh_every_sends_counter_every_nth_tick():
    state = ControllerState(
        schedule=ExcitationSchedule(mode=ExcitationMode.CSA1, hop=HopState(hop_increment=7)),
        interval_us=7500,
        refresh_every=4,
        started=True,
    )
    sent = []
    for tick in range(10):
        actions, state = controller_service.edge_tick(state, tick * 7500.0)
        if any(a.frame_kind is FrameKind.PACKET_COUNTER for a in actions):
            sent.append(tick)
    assert sent == [0, 4, 8]


def test_controller_fixed_schedule_announces_channel_once():
    state = ControllerState(schedule=ExcitationSchedule(mode=ExcitationMode.FIXED, fixed_channel=19), interval_us=10000)
    actions, state = controller_service.edge_tick(state, 0.0)
    assert [a.frame_kind for a in actions[:-1]] == [FrameKind.START, FrameKind.CHANNEL_INFO]
    actions, _ = controller_service.edge_tick(state, 10000.0)
    assert [a.kind for a in actions] == [ActionKind.EXCITE]


def test_controller_without_schedule_sends_channel_info_every_tick():
    state = ControllerState(
        schedule=ExcitationSchedule(mode=ExcitationMode.ADVERTISING),
        interval_us=10000,
        announce_schedule=False,
    )
    channels = []
    for tick in range(4):
        actions, state = controller_service.edge_tick(state, tick * 10000.0)
        infos = [a for a in actions if a.frame_kind is FrameKind.CHANNEL_INFO]
        assert len(infos) == 1
        channels.append(downlink_service.read_channel(downlink_service.frame_decode(infos[0].frame)))
    assert channels == [37, 38, 39, 37]


def test_controller_sends_queued_control_once():
    params = ConnectionParams()
    state = controller_service.queue_control(
        ControllerState(schedule=ExcitationSchedule(mode=ExcitationMode.ADVERTISING), interval_us=7500),
        downlink_service.encode_conn_info(params),
    )
    actions, state = controller_service.edge_tick(state, 0.0)
    assert [a.frame_kind for a in actions[:-1]] == [FrameKind.START, FrameKind.CONN_INFO, FrameKind.PACKET_COUNTER]
    actions, _ = controller_service.edge_tick(state, 7500.0)
    assert FrameKind.CONN_INFO not in [a.frame_kind for a in actions]


def test_controller_rejects_unknown_real_schedule():
    state = ControllerState(schedule=ExcitationSchedule(mode=ExcitationMode.UNKNOWN), interval_us=7500)
    with pytest.raises(DomainError):
        controller_service.edge_tick(state, 0.0)
