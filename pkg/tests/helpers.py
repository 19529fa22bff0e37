"""Shared fixture builders for the test suite."""
from __future__ import annotations

import math

import numpy as np


def osm_xml(nodes, ways) -> bytes:
    """Render an OSM XML document.

    ``nodes``: iterable of (id, lat, lon) or (id, lat, lon, tags dict).
    ``ways``: iterable of (id, [node ids]) or (id, [node ids], tags dict).
    """
    parts = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6">']
    for entry in nodes:
        nid, lat, lon = entry[0], entry[1], entry[2]
        tags = entry[3] if len(entry) > 3 else {}
        if tags:
            parts.append(f'  <node id="{nid}" lat="{lat!r}" lon="{lon!r}">')
            for k, v in tags.items():
                parts.append(f'    <tag k="{k}" v="{v}"/>')
            parts.append("  </node>")
        else:
            parts.append(f'  <node id="{nid}" lat="{lat!r}" lon="{lon!r}"/>')
    for entry in ways:
        wid, nids = entry[0], entry[1]
        tags = entry[2] if len(entry) > 2 else {"highway": "residential"}
        parts.append(f'  <way id="{wid}">')
        for nid in nids:
            parts.append(f'    <nd ref="{nid}"/>')
        for k, v in tags.items():
            parts.append(f'    <tag k="{k}" v="{v}"/>')
        parts.append("  </way>")
    parts.append("</osm>")
    return "\n".join(parts).encode()


def grid_osm_fixture(n_ways: int):
    """Synthetic road grid with a recorded node/way count.

    Builds ceil(n_ways/2) horizontal and floor(n_ways/2) vertical streets on
    a lat/lon grid; every grid crossing shares one node so intersections are
    well defined. Returns (xml bytes, n_nodes, n_ways).
    """
    n_h = (n_ways + 1) // 2
    n_v = n_ways // 2
    step = 0.01
    nodes = {}

    def node_id(i, j):
        return i * 10_000 + j + 1

    for i in range(n_h):
        for j in range(n_v):
            nid = node_id(i, j)
            nodes[nid] = (nid, -30.0 + i * step, 140.0 + j * step)
    ways = []
    for i in range(n_h):
        ways.append((500_000 + i, [node_id(i, j) for j in range(n_v)]))
    for j in range(n_v):
        ways.append((600_000 + j, [node_id(i, j) for i in range(n_h)]))
    return osm_xml(list(nodes.values()), ways), len(nodes), len(ways)


def chained_streets_fixture(n_ways: int):
    """Large way-count fixture: streets split into consecutive segments.

    Each street is a polyline of segments sharing endpoints, so the way
    count scales without a quadratic node grid. Returns (xml bytes,
    n_nodes, n_ways).
    """
    segs_per_street = 100
    n_streets = -(-n_ways // segs_per_street)
    nodes = []
    ways = []
    wid = 1
    for s in range(n_streets):
        street_nodes = []
        for k in range(segs_per_street + 1):
            nid = s * 1_000 + k + 1
            street_nodes.append(nid)
            nodes.append((nid, -30.0 + s * 0.01, 140.0 + k * 0.001))
        for k in range(segs_per_street):
            if wid > n_ways:
                break
            ways.append((wid, [street_nodes[k], street_nodes[k + 1]]))
            wid += 1
    return osm_xml(nodes, ways), len(nodes), len(ways)


def random_candidates(n: int, seed: int, extent_m: float = 2000.0):
    """Random candidate coordinates in a square patch, in degrees."""
    rng = np.random.default_rng(seed)
    lat0, lon0 = -33.8, 151.1
    m_per_deg = 6_371_000.0 * math.pi / 180.0
    lats = lat0 + rng.uniform(0, extent_m, n) / m_per_deg
    lons = lon0 + rng.uniform(0, extent_m, n) / (m_per_deg * math.cos(math.radians(lat0)))
    return lats, lons
