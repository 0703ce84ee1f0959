"""Serve scored windows over HTTP and query the API like the UI does.

The server is read-only over the artifacts written by `score`/`eval`;
candidates are computed with the same selection routine as the offline
pipeline, so responses match the stored results byte for byte.

Run 06_evaluate_and_compare.py first.
"""

import json
import urllib.request

from logcause.server import make_server, start_background

httpd = make_server("demo_output/run", port=0)
start_background(httpd)
host, port = httpd.server_address[:2]
base = f"http://{host}:{port}"
print(f"serving {base} (temporary)")


def get(path):
    with urllib.request.urlopen(base + path) as resp:
        return json.loads(resp.read())


windows = get("/api/windows")
print(f"\n{len(windows['windows'])} windows, scorers {windows['scorers']}")

wid = windows["windows"][0]["id"]
cands = get(f"/api/windows/{wid}/candidates?n=5&scorer=logrca")
print(f"\ntop-5 candidates of window {wid} (chronological):")
for c in cands["candidates"]:
    badge = " *" if c.get("in_truth") else "  "
    print(f" {badge} {c['ts']}  {c['service']:<12} score={c['score']:.3f}  {c['msg'][:60]}")

pos = cands["candidates"][0]["pos"]
context = get(f"/api/windows/{wid}/lines?from={max(0, pos - 2)}&to={pos + 2}")
print(f"\ncontext around the first candidate (positions {context['from']}..{context['to']}):")
for line in context["lines"]:
    print(f"    {line['pos']:>4}  {line['msg'][:70]}")

report = get("/api/report")
print(f"\nreport rows: {[(r['scorer'], r['n'], round(r['avg_recall'], 3)) for r in report['rows']]}")

httpd.shutdown()
httpd.server_close()
print("\nserver stopped; for the interactive UI run:")
print("  logcause serve --out-dir demo_output/run --ui-dir frontend/dist")
