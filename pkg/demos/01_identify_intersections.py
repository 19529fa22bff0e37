"""Identify intersections in a small road network.

Builds a toy OSM XML document in memory (a crossroad, a T junction, a
renamed-street endpoint that must be pruned, and a roundabout with feeder
streets), runs the identification pipeline, and prints the classified
result.
"""
import io
import math

from junction_atlas import osm

M_PER_DEG = 6_371_000.0 * math.pi / 180.0


def ring(start_id, lat_c, lon_c, radius_m, n):
    pts = []
    for k in range(n):
        ang = 2 * math.pi * k / n
        pts.append((start_id + k,
                    lat_c + radius_m * math.sin(ang) / M_PER_DEG,
                    lon_c + radius_m * math.cos(ang) / (M_PER_DEG * math.cos(math.radians(lat_c)))))
    return pts


def xml(nodes, ways):
    out = ["<osm>"]
    for entry in nodes:
        nid, lat, lon = entry[:3]
        tags = entry[3] if len(entry) > 3 else {}
        out.append(f'<node id="{nid}" lat="{lat!r}" lon="{lon!r}">')
        out += [f'<tag k="{k}" v="{v}"/>' for k, v in tags.items()]
        out.append("</node>")
    for wid, nids, tags in ways:
        out.append(f'<way id="{wid}">')
        out += [f'<nd ref="{n}"/>' for n in nids]
        out += [f'<tag k="{k}" v="{v}"/>' for k, v in tags.items()]
        out.append("</way>")
    out.append("</osm>")
    return "\n".join(out).encode()


nodes = [
    # crossroad with a traffic signal on the shared node
    (1, 0.0, -0.002), (2, 0.0, 0.002), (4, -0.002, 0.0), (5, 0.002, 0.0),
    (3, 0.0, 0.0, {"highway": "traffic_signals"}),
    # T junction
    (6, 0.01, -0.002), (7, 0.01, 0.002), (8, 0.01, 0.0), (9, 0.012, 0.0),
    # renamed street endpoint (a false intersection)
    (10, 0.02, 0.0), (11, 0.02, 0.001), (12, 0.02, 0.002), (13, 0.02, 0.003),
]
rnodes = ring(100, 0.03, 0.0, 18.0, 10)
feeder_far = (200, 0.03, 0.004)

ways = [
    (301, [1, 3, 2], {"highway": "residential", "name": "Alpha St"}),
    (302, [4, 3, 5], {"highway": "secondary", "name": "Beta Rd", "lanes": "2"}),
    (303, [6, 8, 7], {"highway": "residential", "name": "Gamma St"}),
    (304, [8, 9], {"highway": "residential", "name": "Delta St"}),
    (305, [10, 11, 12], {"highway": "residential", "name": "Epsilon St"}),
    (306, [12, 13], {"highway": "residential", "name": "Zeta St"}),
    (307, [n[0] for n in rnodes] + [rnodes[0][0]],
     {"highway": "residential", "junction": "roundabout"}),
    (308, [rnodes[0][0], 200], {"highway": "residential", "name": "Feeder"}),
]

data = osm.parse_osm(io.BytesIO(xml(nodes + rnodes + [feeder_far], ways)))
print(f"parsed {len(data.nodes)} nodes, {len(data.ways)} ways")

intersections = osm.identify_intersections(data, merge_threshold_m=30.0)
print(f"\n{'id':>5} {'class':>5} {'legs':>4} {'signal':>6}  location")
for it in intersections:
    print(f"{it.id:>5} {it.simplified_class:>5} {it.leg_count:>4} "
          f"{str(it.signalized):>6}  ({it.lat:.5f}, {it.lon:.5f})")
print("\nnode 12 (renamed street endpoint) was pruned; the roundabout nodes"
      "\ncollapsed to one O intersection at the ring center.")
