"""Trickle timer dynamics, event by event.

The timer starts at its minimum interval and doubles after every quiet
interval, up to a cap. Hearing enough consistent traffic (the redundancy
constant k) suppresses the pending transmission; an inconsistency slams
the interval back to the minimum.
"""

from tschsim import TrickleConfig, TrickleEvent, TrickleState, trickle_step

cfg = TrickleConfig(i_min_ms=4096, doublings=8, k=1)
print(f"I_min = {cfg.i_min_ms} ms, I_max = {cfg.i_max_ms} ms, k = {cfg.k}")

state = TrickleState(cfg)
state, _ = trickle_step(state, TrickleEvent.START, u=0.5)

## Quiet network: the interval doubles at each interval end
print("\nquiet doublings:")
for n in range(9):
    print(f"  after {n} quiet intervals: I = {state.i_ms} ms")
    state, _ = trickle_step(state, TrickleEvent.INTERVAL_END, u=0.5)
print(f"  capped at I_max: I = {state.i_ms} ms")

## The firing point t always falls in the second half of the interval
fresh, _ = trickle_step(TrickleState(cfg), TrickleEvent.START, u=0.0)
print(f"\nfiring point with u=0.0: t = {fresh.t_ms} ms (= I/2)")
fresh, _ = trickle_step(TrickleState(cfg), TrickleEvent.START, u=0.99)
print(f"firing point with u=0.99: t = {fresh.t_ms} ms (just under I)")

## Redundancy: a consistent reception beats the firing point to it
state2, _ = trickle_step(TrickleState(cfg), TrickleEvent.START, u=0.5)
state2, _ = trickle_step(state2, TrickleEvent.CONSISTENT_RX)
_state, fired = trickle_step(state2, TrickleEvent.T_REACHED)
print(f"\nheard {state2.c} consistent DIO(s) with k={cfg.k}: transmit? {fired}")

## An inconsistency resets a grown interval to the minimum
state, _ = trickle_step(state, TrickleEvent.INCONSISTENCY, u=0.5)
print(f"after an inconsistency: I = {state.i_ms} ms")
