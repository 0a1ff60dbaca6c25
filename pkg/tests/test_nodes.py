import pytest

from wcsim.engine import Simulator, derive_rng, to_us
from wcsim.medium import ChannelParams, Medium, Packet, SAMPLE, COMMAND
from wcsim.metrics import LoopTrace
from wcsim.nodes import (ControlLoop, InterferenceSource, PidController,
                         ReferenceSpec, SCHEME_ADAPTIVE, SCHEME_FIXED)
from wcsim.plant import LtiPlant
from wcsim.sampler import SamplerParams


def make_loop(scheme=SCHEME_FIXED, loss_prob=0.0, initial_period=0.010,
              sampler_params=None, report_over_medium=False):
    sim = Simulator()
    medium = Medium(sim, ChannelParams(loss_prob=loss_prob))
    trace = LoopTrace(1)
    loop = ControlLoop(
        sim, medium, 1, scheme=scheme, trace=trace, plant=LtiPlant(),
        sampler_params=sampler_params or SamplerParams(),
        reference=ReferenceSpec(), initial_period=initial_period,
        rng_factory=lambda node_id: derive_rng(1, node_id),
        report_over_medium=report_over_medium)
    return sim, medium, trace, loop


# -- reference wave ---------------------------------------------------------

def test_reference_square_wave_defaults():
    ref = ReferenceSpec()
    assert ref.value(0) == 1.0
    assert ref.value(to_us(1.999999)) == 1.0
    assert ref.value(to_us(2.0)) == 0.0
    assert ref.value(to_us(3.5)) == 0.0
    assert ref.value(to_us(4.0)) == 1.0


def test_reference_phase_and_amplitudes():
    ref = ReferenceSpec(wave_period=2.0, high=3.0, low=-1.0, phase=0.5)
    assert ref.value(to_us(0.5)) == 3.0
    assert ref.value(to_us(1.5)) == -1.0
    assert ref.value(0) == -1.0   # half a period before the phase anchor


def test_reference_rejects_bad_wave_period():
    with pytest.raises(ValueError):
        ReferenceSpec(wave_period=0.0)


# -- PID controller ---------------------------------------------------------

def test_pid_first_call_from_rest():
    pid = PidController()
    assert pid.step(1.0, 0.0, 0.01) == pytest.approx(301.0, abs=1e-12)


def test_pid_second_identical_call():
    pid = PidController()
    pid.step(1.0, 0.0, 0.01)
    assert pid.step(1.0, 0.0, 0.01) == pytest.approx(103.0, abs=1e-12)


def test_pid_zero_error_gives_zero():
    pid = PidController()
    assert pid.step(0.0, 0.0, 0.02) == 0.0
    assert pid.step(5.0, 5.0, 0.01) == 0.0


def test_pid_with_twenty_ms_period():
    pid = PidController()
    assert pid.step(1.0, 0.0, 0.02) == pytest.approx(202.0, abs=1e-12)


def test_pid_rejects_nonpositive_period():
    pid = PidController()
    with pytest.raises(ValueError):
        pid.step(1.0, 0.0, 0.0)


def test_pid_reset_clears_memory():
    pid = PidController()
    pid.step(1.0, 0.0, 0.01)
    pid.reset()
    assert pid.step(1.0, 0.0, 0.01) == pytest.approx(301.0, abs=1e-12)


# -- sensor timing ----------------------------------------------------------

def test_fixed_scheme_samples_on_exact_grid():
    sim, medium, trace, loop = make_loop()
    loop.schedule_windows([[0.0, 0.1]])
    sim.run_until(to_us(0.1))
    releases = [tr.packet.release_us for tr in medium.tx_log
                if tr.packet.kind == SAMPLE]
    assert releases == [i * 10_000 for i in range(10)]


def test_inactive_loop_stays_silent():
    sim, medium, trace, loop = make_loop()
    loop.schedule_windows([[0.05, 0.1]])
    sim.run_until(to_us(0.049))
    assert medium.stats.offered == 0
    assert loop.periods_count == 0


def test_period_change_takes_effect_at_next_release():
    sim, medium, trace, loop = make_loop()
    loop.schedule_windows([[0.0, 1.0]])
    sim.run_until(to_us(0.0201))   # samples released at 0, 10, 20 ms
    loop.h = 0.01448               # as if an adaptation tick changed the period
    sim.run_until(to_us(0.2))
    releases = [tr.packet.release_us for tr in medium.tx_log
                if tr.packet.kind == SAMPLE]
    assert releases[:3] == [0, 10_000, 20_000]
    assert releases[3] == 30_000           # already scheduled under the old period
    assert releases[4] == 30_000 + 14_480  # first gap under the new period


def test_sample_packets_carry_period_and_deadline():
    sim, medium, trace, loop = make_loop()
    loop.schedule_windows([[0.0, 0.05]])
    sim.run_until(to_us(0.05))
    for tr in medium.tx_log:
        p = tr.packet
        if p.kind in (SAMPLE, COMMAND):
            assert p.period == 0.010
            assert p.deadline_us == p.release_us + 10_000


def test_adaptive_scheme_reacts_to_overload():
    # no reports ever arrive (loss_prob 1), so the miss ratio is 1 and the
    # period must ratchet upward toward its ceiling across adaptation ticks
    sim, medium, trace, loop = make_loop(scheme=SCHEME_ADAPTIVE, loss_prob=1.0)
    loop.schedule_windows([[0.0, 6.0]])
    sim.run_until(to_us(6.0))
    loop.finalize(to_us(6.0))
    periods = [h for _, h in trace.periods]
    assert periods[0] == 0.010
    assert periods[-1] == 0.030
    assert all(b >= a - 1e-12 for a, b in zip(periods, periods[1:]))


def test_adaptive_scheme_shrinks_period_when_idle():
    # a clean single-loop channel has zero misses: the period walks down
    sim, medium, trace, loop = make_loop(scheme=SCHEME_ADAPTIVE)
    loop.schedule_windows([[0.0, 6.0]])
    sim.run_until(to_us(6.0))
    periods = [h for _, h in trace.periods]
    assert periods[-1] < 0.010
    assert periods[-1] >= loop.params.h_min


def test_fixed_scheme_records_miss_ratio_without_adapting():
    sim, medium, trace, loop = make_loop(scheme=SCHEME_FIXED, loss_prob=1.0)
    loop.schedule_windows([[0.0, 2.0]])
    sim.run_until(to_us(2.0))
    assert len(trace.periods) == 1          # only the activation row
    assert loop.h == 0.010
    # ticks at 0.5, 1.0, 1.5; deactivation at 2.0 precedes that instant's tick
    assert [t for t, _, _ in trace.miss_ratios] == [500_000, 1_000_000, 1_500_000]
    assert all(m == 1.0 for _, m, _ in trace.miss_ratios)


# -- actuator deadline handling ----------------------------------------------

def run_single_loop(loss_prob=0.0, report_over_medium=False, horizon=1.0):
    sim, medium, trace, loop = make_loop(loss_prob=loss_prob,
                                         report_over_medium=report_over_medium)
    loop.schedule_windows([[0.0, horizon]])
    sim.run_until(to_us(horizon))
    loop.finalize(to_us(horizon))
    return sim, medium, trace, loop


def test_clean_channel_every_command_reported_on_time():
    sim, medium, trace, loop = run_single_loop(horizon=0.5)
    # one report per delivered command: a clean single-sender channel has
    # round trips around 2-6 ms, well inside the 10 ms deadline
    commands = [tr for tr in medium.tx_log if tr.packet.kind == COMMAND]
    assert commands
    assert all(tr.end_us <= tr.packet.deadline_us for tr in commands)
    assert all(m == 0.0 for _, m, _ in trace.miss_ratios)


def test_late_command_is_still_applied_but_not_reported():
    sim, medium, trace, loop = make_loop()
    loop.schedule_windows([[0.0, 1.0]])
    sim.run_until(20_000)
    packet_late = Packet(
        src=loop.controller_id, dst=loop.actuator_id, kind=COMMAND,
        loop_id=1, command_value=2.5, period=0.010,
        release_us=0, deadline_us=10_000)
    before = loop.success_count
    loop._on_command(packet_late)   # arrives 10 ms past its deadline
    assert loop.plant.u_held == 2.5
    assert loop.success_count == before


def test_command_at_exact_deadline_counts_on_time():
    sim, medium, trace, loop = make_loop()
    loop.schedule_windows([[0.0, 1.0]])
    sim.run_until(10_000)
    packet = Packet(
        src=loop.controller_id, dst=loop.actuator_id, kind=COMMAND,
        loop_id=1, command_value=1.0, period=0.010,
        release_us=0, deadline_us=10_000)
    before = loop.success_count
    loop._on_command(packet)
    assert loop.success_count == before + 1


def test_lost_commands_leave_previous_input_held():
    sim, medium, trace, loop = run_single_loop(loss_prob=1.0, horizon=0.2)
    assert loop.plant.u_held == 0.0
    assert all(m == 1.0 for _, m, _ in trace.miss_ratios)


def test_reports_can_ride_the_medium():
    sim, medium, trace, loop = run_single_loop(report_over_medium=True,
                                               horizon=0.5)
    reports = [tr for tr in medium.tx_log if tr.packet.kind == "report"]
    assert reports
    assert all(m == 0.0 for _, m, _ in trace.miss_ratios)


# -- interferers --------------------------------------------------------------

def test_interferer_offers_exact_packet_count():
    sim = Simulator()
    medium = Medium(sim, ChannelParams())
    InterferenceSource(sim, medium, 0, period=0.010, packet_bytes=32,
                       window=[6.0, 12.0],
                       rng_factory=lambda node_id: derive_rng(1, node_id))
    sim.run_until(to_us(18.0))
    assert medium.stats.offered == 600
    starts = [tr.start_us for tr in medium.tx_log]
    assert min(starts) >= to_us(6.0)


def test_interferer_silent_outside_window():
    sim = Simulator()
    medium = Medium(sim, ChannelParams())
    InterferenceSource(sim, medium, 0, period=0.008, packet_bytes=32,
                       window=[6.0, 12.0],
                       rng_factory=lambda node_id: derive_rng(1, node_id))
    sim.run_until(to_us(5.999))
    assert medium.stats.offered == 0
    sim.run_until(to_us(18.0))
    assert medium.stats.offered == 750


def test_interferer_load_fraction():
    # 1.024 ms on air every 8 ms is 12.8 percent of the channel
    sim = Simulator()
    medium = Medium(sim, ChannelParams())
    InterferenceSource(sim, medium, 0, period=0.008, packet_bytes=32,
                       window=[0.0, 10.0],
                       rng_factory=lambda node_id: derive_rng(1, node_id))
    sim.run_until(to_us(10.0))
    busy = medium.busy_time_us(to_us(10.0)) / to_us(10.0)
    assert busy == pytest.approx(0.128, abs=0.002)
