"""Exercise the read-only API over the artifacts from demo 06.

Starts the app in-process with the test client (no network needed) and
walks the endpoints an analyst would hit: paging the embedding, brushing a
region, querying filters, and pulling an outlier's image.

Run demos/06_full_pipeline.py first.
"""
from fastapi.testclient import TestClient

from junction_atlas.service import build_app

client = TestClient(build_app("demo_out/pipeline"))

page = client.get("/api/embedding", params={"limit": 5})
print(f"embedding: total {page.headers['X-Total-Count']}, etag {page.headers['ETag']}")
for record in page.json():
    print(f"  id {record['id']:>3} class {record['class']} "
          f"({record['x']:+.2f}, {record['y']:+.2f}) volume {record['volume']}")

records = client.get("/api/embedding", params={"limit": 10000}).json()
xs = [r["x"] for r in records]
ys = [r["y"] for r in records]
poly = [[min(xs) - 1, min(ys) - 1], [max(xs) + 1, min(ys) - 1],
        [(min(xs) + max(xs)) / 2, max(ys) + 1]]
stats = client.post("/api/region/stats", json={"polygon": poly}).json()
region = stats["region"]
print(f"\nbrushed region: {region['count']} qualified of "
      f"{region['total_in_region']}, mean speed {region['speed']}")
for measure, tests in stats["comparison"].items():
    if isinstance(tests, dict) and "anova" in tests:
        print(f"  {measure}: ANOVA p={tests['anova']['p']:.3g}, "
              f"Games-Howell p={tests['games_howell']['p']:.3g}")

unsignalized = client.get("/api/query", params={"class": "#", "signalized": "false"})
print(f"\ncomplex unsignalized intersections: "
      f"{[r['id'] for r in unsignalized.json()]}")

outliers = client.post("/api/region/outliers?factor=2", json={"polygon": poly}).json()
print(f"outliers at factor 2: {outliers['outliers']}")
if outliers["outliers"]:
    iid = outliers["outliers"][0]
    img = client.get(f"/api/intersections/{iid}/image")
    print(f"image for {iid}: {img.headers['content-type']}, {len(img.content)} bytes")
