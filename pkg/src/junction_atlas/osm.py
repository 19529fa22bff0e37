"""Road-network ingestion: parse OSM-style XML and identify intersections.

The stages mirror the identification pipeline: parse nodes/ways, keep the
drivable subset, find nodes shared by several ways, prune spots with no real
turning opportunity, merge nearby node groups into single intersections,
handle roundabouts separately, then classify and read signalization.
"""
from __future__ import annotations

import math
import warnings
import xml.parsers.expat
from dataclasses import dataclass, field

import numpy as np

from .geo import (
    EARTH_RADIUS_M,
    GridIndex,
    haversine_m,
    initial_bearing_deg,
    local_xy,
    local_xy_inverse,
)

SIMPLIFIED_CLASSES = ("O", "T", "X", "#")

#: default highway values considered drivable, plus their _link variants
DRIVABLE_HIGHWAYS = frozenset(
    {
        "motorway", "trunk", "primary", "secondary", "tertiary",
        "unclassified", "residential", "service", "living_street",
    }
)
DRIVABLE_LINKS = frozenset(f"{v}_link" for v in DRIVABLE_HIGHWAYS)


class OsmParseError(ValueError):
    """Malformed XML; carries the byte offset where parsing failed."""

    def __init__(self, message: str, byte_offset: int, line: int):
        super().__init__(f"{message} (byte offset {byte_offset}, line {line})")
        self.byte_offset = byte_offset
        self.line = line


@dataclass
class RoadNode:
    id: int
    lat: float
    lon: float
    tags: dict[str, str] = field(default_factory=dict)


@dataclass
class RoadWay:
    id: int
    node_ids: list[int]
    tags: dict[str, str] = field(default_factory=dict)


@dataclass
class IntersectionCandidate:
    node_id: int
    lat: float
    lon: float
    way_ids: set[int]
    leg_count: int


@dataclass
class Intersection:
    id: int
    lat: float
    lon: float
    simplified_class: str
    signalized: bool
    leg_count: int
    merged_node_ids: set[int]
    from_roundabout: bool = False

    @property
    def merged_count(self) -> int:
        return len(self.merged_node_ids)


@dataclass
class OsmData:
    nodes: dict[int, RoadNode]
    ways: list[RoadWay]
    warnings: list[str] = field(default_factory=list)


class _Handler:
    """Expat callbacks accumulating nodes and ways, skipping everything else."""

    def __init__(self):
        self.nodes: dict[int, RoadNode] = {}
        self.ways: list[RoadWay] = []
        self._cur_node: RoadNode | None = None
        self._cur_way: RoadWay | None = None

    def start(self, name, attrs):
        if name == "node":
            try:
                self._cur_node = RoadNode(
                    id=int(attrs["id"]), lat=float(attrs["lat"]), lon=float(attrs["lon"])
                )
            except (KeyError, ValueError):
                self._cur_node = None
        elif name == "way":
            try:
                self._cur_way = RoadWay(id=int(attrs["id"]), node_ids=[])
            except (KeyError, ValueError):
                self._cur_way = None
        elif name == "nd" and self._cur_way is not None:
            try:
                self._cur_way.node_ids.append(int(attrs["ref"]))
            except (KeyError, ValueError):
                pass
        elif name == "tag":
            k, v = attrs.get("k"), attrs.get("v", "")
            if k is None:
                return
            if self._cur_way is not None:
                self._cur_way.tags[k] = v
            elif self._cur_node is not None:
                self._cur_node.tags[k] = v

    def end(self, name):
        if name == "node" and self._cur_node is not None:
            self.nodes[self._cur_node.id] = self._cur_node
            self._cur_node = None
        elif name == "way" and self._cur_way is not None:
            self.ways.append(self._cur_way)
            self._cur_way = None


def parse_osm(source) -> OsmData:
    """Parse an OSM XML byte stream into nodes and ways.

    ``source`` is a binary file-like object or a bytes object. Ways that
    reference undefined nodes are dropped, one warning per way. Ways with
    fewer than two resolvable nodes are dropped as degenerate.
    """
    if isinstance(source, (bytes, bytearray)):
        import io

        source = io.BytesIO(bytes(source))
    handler = _Handler()
    parser = xml.parsers.expat.ParserCreate()
    parser.StartElementHandler = handler.start
    parser.EndElementHandler = handler.end
    try:
        while True:
            chunk = source.read(1 << 16)
            if not chunk:
                parser.Parse(b"", True)
                break
            parser.Parse(chunk, False)
    except xml.parsers.expat.ExpatError as err:
        raise OsmParseError(
            xml.parsers.expat.errors.messages[err.code],
            parser.ErrorByteIndex,
            parser.ErrorLineNumber,
        ) from err

    data = OsmData(nodes=handler.nodes, ways=[])
    for way in handler.ways:
        missing = [nid for nid in way.node_ids if nid not in data.nodes]
        if missing:
            data.warnings.append(
                f"way {way.id} dropped: dangling node reference(s) {missing[:5]}"
            )
            continue
        if len(way.node_ids) < 2:
            data.warnings.append(f"way {way.id} dropped: fewer than 2 nodes")
            continue
        data.ways.append(way)
    return data


def default_drivable_rule(tags: dict[str, str]) -> bool:
    hw = tags.get("highway")
    return hw in DRIVABLE_HIGHWAYS or hw in DRIVABLE_LINKS


def filter_drivable(ways: list[RoadWay], rules=default_drivable_rule) -> list[RoadWay]:
    """Keep ways whose tags pass ``rules`` (motor-vehicle subset by default)."""
    return [w for w in ways if rules(w.tags)]


def detect_intersections(
    nodes: dict[int, RoadNode], ways: list[RoadWay]
) -> list[IntersectionCandidate]:
    """Nodes appearing in at least two distinct ways, with incident leg counts.

    A node interior to a way contributes two legs from that way, an endpoint
    contributes one. A closed way contributes two legs at its shared endpoint.
    """
    way_sets: dict[int, set[int]] = {}
    legs: dict[int, int] = {}
    for way in ways:
        last = len(way.node_ids) - 1
        for pos, nid in enumerate(way.node_ids):
            way_sets.setdefault(nid, set()).add(way.id)
            legs[nid] = legs.get(nid, 0) + (1 if pos in (0, last) else 2)
    out = []
    for nid in sorted(way_sets):
        if len(way_sets[nid]) >= 2:
            node = nodes[nid]
            out.append(
                IntersectionCandidate(
                    node_id=nid,
                    lat=node.lat,
                    lon=node.lon,
                    way_ids=way_sets[nid],
                    leg_count=legs[nid],
                )
            )
    return out


def _incident_bearings(cand: IntersectionCandidate, nodes, ways_by_id) -> list[float]:
    bearings = []
    for wid in sorted(cand.way_ids):
        way = ways_by_id[wid]
        ids = way.node_ids
        for pos, nid in enumerate(ids):
            if nid != cand.node_id:
                continue
            for nb in (pos - 1, pos + 1):
                if 0 <= nb < len(ids):
                    other = nodes[ids[nb]]
                    bearings.append(
                        initial_bearing_deg(cand.lat, cand.lon, other.lat, other.lon)
                    )
    return bearings


def _heading_cluster_count(bearings: list[float], tol_deg: float) -> int:
    """Number of distinct directions, merging bearings within tol_deg circularly."""
    if not bearings:
        return 0
    rest = sorted(bearings)
    clusters = 0
    while rest:
        ref = rest.pop(0)
        clusters += 1
        rest = [b for b in rest if min((b - ref) % 360.0, (ref - b) % 360.0) > tol_deg]
    return clusters


def prune_false_intersections(
    candidates: list[IntersectionCandidate],
    nodes: dict[int, RoadNode],
    ways: list[RoadWay],
    heading_tol_deg: float = 15.0,
) -> list[IntersectionCandidate]:
    """Drop candidates that offer no real turning opportunity.

    Removes candidates with at most two legs (way endpoints meeting due to
    renamed streets or split attributes), and candidates whose incident ways
    all carry one identical name while the legs point in at most two distinct
    directions, i.e. a single logical road passing through.
    """
    ways_by_id = {w.id: w for w in ways}
    kept = []
    for cand in candidates:
        if cand.leg_count <= 2:
            continue
        names = {ways_by_id[wid].tags.get("name") for wid in cand.way_ids}
        if len(names) == 1 and None not in names:
            bearings = _incident_bearings(cand, nodes, ways_by_id)
            if _heading_cluster_count(bearings, heading_tol_deg) <= 2:
                continue
        kept.append(cand)
    return kept


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass
class SpatialPartition:
    """One merge work unit: a box plus its halo-extended member set."""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    halo_m: float
    member_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))


def _partition_boxes(lats, lons, target_parts: int):
    """Recursively halve the bounding box on the wider axis into ~target_parts."""
    boxes = [(lats.min(), lats.max(), lons.min(), lons.max())]
    while len(boxes) < target_parts:
        new_boxes = []
        for (la0, la1, lo0, lo1) in boxes:
            if (la1 - la0) >= (lo1 - lo0):
                mid = (la0 + la1) / 2.0
                new_boxes += [(la0, mid, lo0, lo1), (mid, la1, lo0, lo1)]
            else:
                mid = (lo0 + lo1) / 2.0
                new_boxes += [(la0, la1, lo0, mid), (la0, la1, mid, lo1)]
        boxes = new_boxes
    return boxes


def merge_nearby(
    candidates: list[IntersectionCandidate],
    threshold_m: float = 30.0,
    partitions: int = 16,
) -> list[Intersection]:
    """Group candidates by single-linkage haversine connectivity and merge.

    Each connected group (edges are pairs at distance <= threshold_m) becomes
    one Intersection at the group centroid, computed in a planar frame about
    the group's lowest-id member. Partitions are processed independently with
    a halo of one threshold so every qualifying pair is seen in at least one
    partition; a union-find reconciliation pass stitches groups that span
    partition borders. Output is invariant to input order and partition count.
    """
    if threshold_m <= 0:
        raise ValueError("threshold_m must be positive")
    if not candidates:
        return []
    cands = sorted(candidates, key=lambda c: c.node_id)
    lats = np.array([c.lat for c in cands])
    lons = np.array([c.lon for c in cands])
    uf = _UnionFind(len(cands))

    m_per_deg = EARTH_RADIUS_M * math.pi / 180.0
    halo_lat = threshold_m / m_per_deg
    cos_lat = max(0.05, math.cos(math.radians(float(np.max(np.abs(lats))))))
    halo_lon = threshold_m / (m_per_deg * cos_lat)

    parts = []
    for (la0, la1, lo0, lo1) in _partition_boxes(lats, lons, max(1, partitions)):
        sel = np.where(
            (lats >= la0 - halo_lat)
            & (lats <= la1 + halo_lat)
            & (lons >= lo0 - halo_lon)
            & (lons <= lo1 + halo_lon)
        )[0]
        parts.append(SpatialPartition(la0, la1, lo0, lo1, threshold_m, sel))

    for part in parts:
        sel = part.member_idx
        for ii in range(sel.size):
            i = sel[ii]
            for jj in range(ii + 1, sel.size):
                j = sel[jj]
                if haversine_m(lats[i], lons[i], lats[j], lons[j]) <= threshold_m:
                    uf.union(int(i), int(j))

    groups: dict[int, list[int]] = {}
    for i in range(len(cands)):
        groups.setdefault(uf.find(i), []).append(i)

    out = []
    for root in sorted(groups):
        members = [cands[i] for i in groups[root]]
        ref = members[0]
        xs, ys = local_xy(
            np.array([m.lat for m in members]),
            np.array([m.lon for m in members]),
            ref.lat,
            ref.lon,
        )
        clat, clon = local_xy_inverse(float(xs.mean()), float(ys.mean()), ref.lat, ref.lon)
        out.append(
            Intersection(
                id=min(m.node_id for m in members),
                lat=float(clat),
                lon=float(clon),
                simplified_class="",
                signalized=False,
                leg_count=sum(m.leg_count for m in members),
                merged_node_ids={m.node_id for m in members},
            )
        )
    return out


@dataclass
class RoundaboutComponent:
    way_ids: set[int]
    node_ids: set[int]


def extract_roundabouts(
    ways: list[RoadWay],
    nodes: dict[int, RoadNode],
    min_nodes: int = 3,
) -> tuple[list[Intersection], list[RoundaboutComponent]]:
    """Intersections for junction=roundabout ways, merging separated segments.

    Ways sharing any node form one component; components with fewer than
    ``min_nodes`` distinct nodes are dropped with a warning as mislabeled.
    """
    rways = [w for w in ways if w.tags.get("junction") == "roundabout"]
    if not rways:
        return [], []
    uf = _UnionFind(len(rways))
    owner: dict[int, int] = {}
    for i, way in enumerate(rways):
        for nid in way.node_ids:
            if nid in owner:
                uf.union(owner[nid], i)
            else:
                owner[nid] = i
    comp_ways: dict[int, list[RoadWay]] = {}
    for i, way in enumerate(rways):
        comp_ways.setdefault(uf.find(i), []).append(way)

    intersections, components = [], []
    for root in sorted(comp_ways):
        member_ways = comp_ways[root]
        node_ids = {nid for w in member_ways for nid in w.node_ids}
        if len(node_ids) < min_nodes:
            warnings.warn(
                f"roundabout component (ways {sorted(w.id for w in member_ways)}) "
                f"dropped: only {len(node_ids)} nodes"
            )
            continue
        ordered = sorted(node_ids)
        ref = nodes[ordered[0]]
        xs, ys = local_xy(
            np.array([nodes[n].lat for n in ordered]),
            np.array([nodes[n].lon for n in ordered]),
            ref.lat,
            ref.lon,
        )
        clat, clon = local_xy_inverse(float(xs.mean()), float(ys.mean()), ref.lat, ref.lon)
        intersections.append(
            Intersection(
                id=ordered[0],
                lat=float(clat),
                lon=float(clon),
                simplified_class="O",
                signalized=False,
                leg_count=len(node_ids),
                merged_node_ids=set(ordered),
                from_roundabout=True,
            )
        )
        components.append(
            RoundaboutComponent(way_ids={w.id for w in member_ways}, node_ids=set(ordered))
        )
    return intersections, components


def suppress_near_roundabouts(
    candidates: list[IntersectionCandidate],
    components: list[RoundaboutComponent],
    nodes: dict[int, RoadNode],
    threshold_m: float = 30.0,
) -> list[IntersectionCandidate]:
    """Drop candidates on a roundabout or within threshold_m of its nodes."""
    if not components:
        return list(candidates)
    member_ids = set().union(*(c.node_ids for c in components))
    ordered = sorted(member_ids)
    rlats = np.array([nodes[n].lat for n in ordered])
    rlons = np.array([nodes[n].lon for n in ordered])
    index = GridIndex(rlats, rlons, threshold_m)
    kept = []
    for cand in candidates:
        if cand.node_id in member_ids:
            continue
        if index.nearest_within(cand.lat, cand.lon) is not None:
            continue
        kept.append(cand)
    return kept


def classify(intersection: Intersection, incident_lanes: list[int]) -> str:
    """Simplified class for one intersection.

    O for roundabout-derived; # when more than four legs, any multi-lane leg,
    or the intersection merged several candidate nodes; T for three legs and
    X for four.
    """
    if intersection.from_roundabout:
        return "O"
    if intersection.leg_count < 3:
        raise ValueError(
            f"intersection {intersection.id} has leg_count {intersection.leg_count}; "
            "candidates with fewer than 3 legs should have been pruned"
        )
    if (
        intersection.leg_count > 4
        or intersection.merged_count >= 2
        or any(l > 1 for l in incident_lanes)
    ):
        return "#"
    return "T" if intersection.leg_count == 3 else "X"


def _lanes_value(tags: dict[str, str]) -> int:
    try:
        return int(tags.get("lanes", "1"))
    except ValueError:
        return 1


def read_signalization(
    nodes: dict[int, RoadNode],
    intersections: list[Intersection],
    threshold_m: float = 30.0,
) -> dict[int, bool]:
    """Map intersection id -> whether a traffic_signals node sits within range."""
    signal_nodes = [n for n in nodes.values() if n.tags.get("highway") == "traffic_signals"]
    if not signal_nodes:
        return {it.id: False for it in intersections}
    slats = np.array([n.lat for n in signal_nodes])
    slons = np.array([n.lon for n in signal_nodes])
    index = GridIndex(slats, slons, threshold_m)
    return {
        it.id: index.nearest_within(it.lat, it.lon) is not None for it in intersections
    }


def identify_intersections(
    data: OsmData,
    merge_threshold_m: float = 30.0,
    partitions: int = 16,
) -> list[Intersection]:
    """Full identification pipeline from parsed OSM data to classified output."""
    drivable = filter_drivable(data.ways)
    candidates = detect_intersections(data.nodes, drivable)
    candidates = prune_false_intersections(candidates, data.nodes, drivable)
    roundabouts, components = extract_roundabouts(drivable, data.nodes)
    candidates = suppress_near_roundabouts(
        candidates, components, data.nodes, merge_threshold_m
    )
    merged = merge_nearby(candidates, merge_threshold_m, partitions)

    ways_by_id = {w.id: w for w in drivable}
    member_ways: dict[int, set[int]] = {}
    for cand in candidates:
        member_ways[cand.node_id] = cand.way_ids
    out = []
    for it in merged:
        lanes = [
            _lanes_value(ways_by_id[wid].tags)
            for nid in it.merged_node_ids
            for wid in sorted(member_ways.get(nid, ()))
        ]
        it.simplified_class = classify(it, lanes)
        out.append(it)
    out.extend(roundabouts)
    out.sort(key=lambda it: it.id)
    signal_map = read_signalization(data.nodes, out, merge_threshold_m)
    for it in out:
        it.signalized = signal_map[it.id]
    return out
