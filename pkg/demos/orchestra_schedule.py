"""What an Orchestra schedule looks like on one node.

Each node derives every cell from identities alone: the common shared
slot anchors at a fixed position, beacon cells hash on the node itself,
and unicast cells hash on routing neighbors. Watch the cell table react
to a parent switch without a single frame being exchanged.
"""

from tschsim import OrchestraConfig
from tschsim.kernel import RngStreams
from tschsim.mac import CellOption, HoppingSequence, TschMac
from tschsim.scheduling import OrchestraSchedule, slot_of

changes = []
mac = TschMac(9, HoppingSequence(), RngStreams(1).for_node(9), is_coordinator=True)
mac.time_source = 3
sched = OrchestraSchedule(
    mac, OrchestraConfig(), network_size_hint=6,
    on_cell_change=lambda change, sf, nbr, cause: changes.append((change, sf, nbr, cause)),
)


def show(mac):
    for sf in mac.slotframes:
        names = {0: "unicast", 1: "rpl-signaling", 2: "beacon"}
        print(f"  slotframe {names[sf.handle]:14s} length {sf.length:3d} priority {sf.priority}")
        for offset in sorted(sf.cells):
            for cell in sf.cells[offset]:
                opts = "/".join(o.name for o in CellOption if o in cell.options)
                peer = "broadcast" if cell.peer < 0 else f"node {cell.peer}"
                print(f"    slot {offset:3d} chOf {cell.channel_offset}  {opts:12s} -> {peer}")


print("node 9, freshly joined with time source node 3:")
show(mac)

## RPL reports a parent and a child; unicast cells appear at their hashed slots
print(f"\nslot_of(3, 17) = {slot_of(3, 17)}, slot_of(2, 17) = {slot_of(2, 17)}")
sched.neighbor_added(3, cause="parent")
sched.neighbor_added(2, cause="neighbor_add")
print("\nafter learning parent 3 and child 2:")
show(mac)

## A parent switch re-keys cells with zero frames on the air
frames_before = mac.queue.counters.enqueued
sched.neighbor_removed(2)
print("\nafter losing node 2:")
show(mac)
print(f"\nframes transmitted to make all {len(changes)} cell changes: "
      f"{mac.queue.counters.enqueued - frames_before}")
