"""A walk through TSCH channel hopping.

Every timeslot, a cell's logical channel offset maps to a physical
channel through the hopping vector V: the slot counter (ASN) plus the
offset, modulo the vector length, indexes into V. Because consecutive
slotframes shift the index, a fixed cell visits every channel before it
repeats one.
"""

from tschsim import HoppingSequence, channel_for

V = HoppingSequence()
print(f"hopping vector V ({V.n_ch} channels): {list(V.channels)}")

## The classic worked example: ASN 4, channel offset 1 lands on V[5]
print("\nASN 4, offset 1 ->", channel_for(4, 1, V), "(V[(4+1) mod 16] = V[5])")

## One cell, sixteen consecutive slotframes: all channels visited. The
## slotframe length (17) is coprime with |V| (16), so the cell's slot
## index drifts through the whole vector before repeating.
cell_offset = 1
slotframe_length = 17
visited = [channel_for(asn, cell_offset, V) for asn in range(0, 16 * slotframe_length, slotframe_length)]
print(f"\nchannel of the same cell across 16 slotframes:\n  {visited}")
print("distinct channels visited:", len(set(visited)))

## Two different offsets never share a physical channel in the same slot
for asn in (0, 100, 12345):
    ch0 = channel_for(asn, 0, V)
    ch1 = channel_for(asn, 1, V)
    print(f"slot {asn}: offset 0 -> channel {ch0}, offset 1 -> channel {ch1}")
