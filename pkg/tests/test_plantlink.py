import socket
import threading

import numpy as np
import pytest

from dptestbed.controlloop import ControlStack
from dptestbed.hydrodb import synthetic_st_database
from dptestbed.plant import (
    PlantConfig,
    PlantServer,
    PlantSession,
    build_plant,
    connect_controller,
    run_controller,
    run_lockstep_inprocess,
)
from dptestbed.scaling import ScaleSpec, to_model_scale
from dptestbed.thrusters import st_layout
from dptestbed.waves import EnvironmentSpec
from dptestbed.wire import (
    MessageStream,
    ProtocolViolation,
    WireTimeout,
    decode_body,
    encode_message,
    make_cmd,
    make_hello,
    make_state,
)


@pytest.fixture(scope="module")
def db():
    return synthetic_st_database(n_freq=32)


def make_config(db, hs=0.0, seed=1, **kw):
    env = EnvironmentSpec(
        hs=hs, tp=8.0, wave_dir=np.radians(45.0),
        wind_speed=5.0 if hs else 0.0, wind_dir=np.radians(45.0),
        current_speed=0.5 if hs else 0.0, current_dir=np.radians(45.0),
        seed=seed,
    )
    return PlantConfig(db=db, layout=st_layout(), env=env,
                       cutoff_time=30.0, n_wave_components=40, **kw)


def stream_pair(timeout=5.0, tap_a=None):
    a, b = socket.socketpair()
    return MessageStream(a, timeout=timeout, tap=tap_a), MessageStream(b, timeout=timeout)


# --------------------------------------------------------------------- framing


def test_canonical_encoding_round_trip():
    msg = make_state(1.5, np.arange(6.0), np.arange(6.0) / 7.0)
    frame = encode_message(msg)
    assert frame[:4] == len(frame[4:]).to_bytes(4, "big")
    back = decode_body(frame[4:])
    assert back == msg
    assert encode_message(back) == frame


def test_encoding_is_key_sorted_and_compact():
    frame = encode_message({"kind": "BYE", "reason": "x"})
    assert frame[4:] == b'{"kind":"BYE","reason":"x"}'


def test_nan_rejected():
    with pytest.raises(ProtocolViolation):
        encode_message(make_state(float("nan"), np.zeros(6), np.zeros(6)))


def test_garbage_frame_rejected():
    with pytest.raises(ProtocolViolation):
        decode_body(b"not json")
    with pytest.raises(ProtocolViolation):
        decode_body(b'{"kind":"NOPE"}')


# --------------------------------------------------------------------- session


def run_plant_session(sim, stream, **kw):
    errors = []

    def target():
        try:
            PlantSession(sim, stream, **kw).run()
        except Exception as exc:
            errors.append(exc)

    th = threading.Thread(target=target, daemon=True)
    th.start()
    return th, errors


def test_handshake_and_three_cycles(db):
    sim = build_plant(make_config(db))
    plant_stream, ctl_stream = stream_pair()
    th, errors = run_plant_session(sim, plant_stream)
    stack = ControlStack(st_layout())
    log = run_controller(ctl_stream, stack, n_steps=3)
    th.join(timeout=5)
    assert not errors
    assert len(log.times) == 3
    assert log.times == [0.0, 0.5, 1.0]


def test_wrong_thruster_count_closes_session(db):
    sim = build_plant(make_config(db))
    plant_stream, ctl_stream = stream_pair()
    th, errors = run_plant_session(sim, plant_stream)
    ctl_stream.recv()  # plant HELLO
    ctl_stream.send(make_hello("controller", m=4, h=0.5))
    state = ctl_stream.recv()
    bad = make_cmd(state["t"], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    ctl_stream.send(bad)
    bye = ctl_stream.recv()
    assert bye["kind"] == "BYE"
    assert "3 thrusters" in bye["reason"]
    th.join(timeout=5)
    assert len(errors) == 1 and isinstance(errors[0], ProtocolViolation)


def test_out_of_order_time_closes_session(db):
    sim = build_plant(make_config(db))
    plant_stream, ctl_stream = stream_pair()
    th, errors = run_plant_session(sim, plant_stream)
    ctl_stream.recv()
    ctl_stream.send(make_hello("controller", m=4, h=0.5))
    ctl_stream.recv()
    ctl_stream.send(make_cmd(99.0, np.zeros(4), np.zeros(4)))
    bye = ctl_stream.recv()
    assert bye["kind"] == "BYE" and "does not answer" in bye["reason"]
    th.join(timeout=5)
    assert len(errors) == 1


def test_version_mismatch_rejected(db):
    sim = build_plant(make_config(db))
    plant_stream, ctl_stream = stream_pair()
    th, errors = run_plant_session(sim, plant_stream)
    ctl_stream.recv()
    hello = make_hello("controller", m=4, h=0.5)
    hello["version"] = 99
    ctl_stream.send(hello)
    th.join(timeout=5)
    assert len(errors) == 1 and "version" in str(errors[0])


def test_step_count_bookkeeping_1000_steps(db):
    sim = build_plant(make_config(db))
    plant_stream, ctl_stream = stream_pair(timeout=30.0)
    th, errors = run_plant_session(sim, plant_stream)
    stack = ControlStack(st_layout())
    log = run_controller(ctl_stream, stack, n_steps=1000)
    th.join(timeout=30)
    assert not errors
    assert len(log.times) == 1000
    assert abs(log.times[-1] - 999 * 0.5) <= 1e-9
    assert abs(sim.state.t - 1000 * 0.5) <= 1e-9


def test_param_before_first_state_and_lag_update(db):
    sim = build_plant(make_config(db))
    plant_stream, ctl_stream = stream_pair()
    th, errors = run_plant_session(sim, plant_stream)
    ctl_stream.recv()
    ctl_stream.send(make_hello("controller", m=4, h=0.5))
    ctl_stream.recv()  # STATE 0
    ctl_stream.send({"kind": "PARAM", "params": {"plant.thruster_lag": 0.25}})
    ack = ctl_stream.recv()
    assert ack["kind"] == "ACK" and ack["ok"]
    assert sim.thruster_lag == 0.25
    ctl_stream.send({"kind": "PARAM", "params": {"plant.paint": 1.0}})
    nack = ctl_stream.recv()
    assert nack["kind"] == "ACK" and not nack["ok"]
    ctl_stream.send(make_cmd(0.0, np.zeros(4), np.zeros(4)))
    ctl_stream.recv()  # next STATE arrives: session still healthy
    ctl_stream.send({"kind": "BYE", "reason": "done"})
    th.join(timeout=5)
    assert not errors


def test_wire_path_matches_inprocess_exactly(db):
    cfg = make_config(db, hs=1.5, seed=3)
    sim_wire = build_plant(cfg)
    plant_stream, ctl_stream = stream_pair(timeout=30.0)
    th, errors = run_plant_session(sim_wire, plant_stream)
    log = run_controller(ctl_stream, ControlStack(st_layout()), n_steps=60)
    th.join(timeout=30)
    assert not errors

    sim_direct = build_plant(cfg)
    outputs = run_lockstep_inprocess(sim_direct, ControlStack(st_layout()), 60)
    for a, b in zip(log.outputs, outputs):
        assert np.array_equal(a.u, b.u)
        assert np.array_equal(a.alpha, b.alpha)
    assert np.array_equal(sim_wire.state.eta.as_array(), sim_direct.state.eta.as_array())


def test_scale_transparency_full_vs_model(db):
    cfg = make_config(db, hs=1.5, seed=5)
    logs = {}
    for lam in (1.0, 50.0):
        scale = ScaleSpec(lam=lam)
        sim = build_plant(cfg, scale)
        plant_stream, ctl_stream = stream_pair(timeout=30.0)
        th, errors = run_plant_session(sim, plant_stream, scale=scale)
        log = run_controller(ctl_stream, ControlStack(st_layout()), n_steps=80)
        th.join(timeout=30)
        assert not errors
        logs[lam] = log

    for a, b in zip(logs[1.0].outputs, logs[50.0].outputs):
        assert np.allclose(a.u, b.u, rtol=1e-6, atol=1e-6)
        assert np.allclose(a.alpha, b.alpha, rtol=1e-6, atol=1e-9)


def test_model_scale_commands_follow_cube_law(db):
    # what the scaled plant actuates equals the full-scale command / (gamma lam^3)
    cfg = make_config(db)
    scale = ScaleSpec(lam=50.0)
    sim = build_plant(cfg, scale)
    plant_stream, ctl_stream = stream_pair()
    th, errors = run_plant_session(sim, plant_stream, scale=scale)

    ctl_stream.recv()
    ctl_stream.send(make_hello("controller", m=4, h=0.5))
    state = ctl_stream.recv()
    u_full = np.array([100.0, -50.0, 25.0, 400.0])
    ctl_stream.send(make_cmd(state["t"], u_full, np.zeros(4)))
    ctl_stream.recv()  # next STATE: command was applied
    expected = to_model_scale(u_full, "force", scale)
    lag = 1.0 - np.exp(-sim.h / sim.thruster_lag)
    assert np.allclose(sim.u_actual, lag * expected, rtol=1e-12)
    ctl_stream.send({"kind": "BYE", "reason": "done"})
    th.join(timeout=5)
    assert not errors


def test_tcp_server_hosts_concurrent_sessions(db):
    cfg = make_config(db)
    server = PlantServer(lambda: build_plant(cfg), max_steps=None).start()
    host, port = server.address
    try:
        results = {}

        def client(name):
            stream = connect_controller(host, port, timeout=10.0)
            log = run_controller(stream, ControlStack(st_layout()), n_steps=20)
            results[name] = log

        threads = [threading.Thread(target=client, args=(i,)) for i in range(3)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=20)
        assert len(results) == 3
        for log in results.values():
            assert len(log.times) == 20
        # independent sessions: identical trajectories from identical configs
        u0 = [out.u for out in results[0].outputs]
        u1 = [out.u for out in results[1].outputs]
        assert all(np.array_equal(a, b) for a, b in zip(u0, u1))
    finally:
        server.stop()


def test_recv_timeout(db):
    a, b = socket.socketpair()
    stream = MessageStream(a, timeout=0.2)
    with pytest.raises(WireTimeout):
        stream.recv()
    a.close()
    b.close()
