"""AHA 17-segment lookup on LV wall coordinates.

Ring boundaries sit at ab = 0.1 (apex cap), 0.4 and 0.7.  The basal and
mid rings split rt into six equal sectors, the apical ring into four;
exact boundary hits resolve to the lower segment id.
"""

from __future__ import annotations

from .geometry import CobivecoCoord

AB_APEX_CAP = 0.1
AB_APICAL_MID = 0.4
AB_MID_BASAL = 0.7

# sector tables indexed by floor(rt * sectors), rt = 0 at the posterior
# LV/RV junction: inferoseptal, anteroseptal, anterior, anterolateral,
# inferolateral, inferior
BASAL_SEGMENTS = (3, 2, 1, 6, 5, 4)
MID_SEGMENTS = (9, 8, 7, 12, 11, 10)
APICAL_SEGMENTS = (14, 13, 16, 15)

SEGMENT_NAMES = {
    1: "basal anterior", 2: "basal anteroseptal", 3: "basal inferoseptal",
    4: "basal inferior", 5: "basal inferolateral", 6: "basal anterolateral",
    7: "mid anterior", 8: "mid anteroseptal", 9: "mid inferoseptal",
    10: "mid inferior", 11: "mid inferolateral", 12: "mid anterolateral",
    13: "apical anterior", 14: "apical septal", 15: "apical inferior",
    16: "apical lateral", 17: "apex",
}


class UnsupportedChamberError(ValueError):
    """The AHA map covers the left ventricle only."""


def _sector_segment(rt: float, table: tuple[int, ...]) -> int:
    n = len(table)
    x = rt * n
    k = int(x) % n
    if x == int(x):  # exact sector boundary: lower id of the two neighbors wins
        return min(table[k], table[(k - 1) % n])
    return table[k]


def aha_segment(c: CobivecoCoord) -> int:
    """AHA segment id (1..17) of an LV coordinate."""
    if c.side != "LV":
        raise UnsupportedChamberError(f"AHA segments are defined for the LV only, got side={c.side}")
    if c.ab < AB_APEX_CAP:
        return 17
    if c.ab < AB_APICAL_MID:
        return _sector_segment(c.rt, APICAL_SEGMENTS)
    if c.ab < AB_MID_BASAL:
        return _sector_segment(c.rt, MID_SEGMENTS)
    return _sector_segment(c.rt, BASAL_SEGMENTS)
