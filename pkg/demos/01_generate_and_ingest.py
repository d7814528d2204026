"""
Synthesize a game catalog and run it through ingestion
======================================================

The generator writes the same three files a scraper would hand us:
an NDJSON catalog, a JSON map of daily player-count histories, and a
ground-truth sidecar.  Ingestion then re-reads those files cold, so
this doubles as an end-to-end check that nothing is lost on disk.
"""

import tempfile
from collections import Counter
from pathlib import Path

from gamepop.ingest import ingest_catalog
from gamepop.synthetic import SyntheticSpec, generate, write_files

spec = SyntheticSpec(n_games=120, n_genres=5, seed=42)
batch = generate(spec)
print(f"generated {len(batch.records)} games across {spec.n_genres} genres")
print(f"true genre intercepts: {batch.beta0_genre.round(3)}")

out_dir = Path(tempfile.mkdtemp(prefix="gamepop-demo-"))
paths = write_files(batch, out_dir)
for label, path in paths.items():
    print(f"wrote {label}: {path} ({path.stat().st_size} bytes)")

# Ingestion converts prices to EUR, parses storage sizes out of free-text
# system requirements, collapses daily counts to monthly medians, and
# drops rows that fail the catalog filters.  Synthetic rows are built to
# pass every filter, so the rejection report should be empty.
result = ingest_catalog(paths["catalog"], paths["history"])
reasons = Counter(r.reason for r in result.rejections)
print(f"\tkept {len(result.records)} rows, rejected {len(result.rejections)}")
print(f"\trejections by reason: {dict(reasons) or '(none)'}")
print(f"\tgenre vocabulary: {result.genre_names}")

first = result.records[0]
print("\nfirst cleaned record:")
print(f"\tapp_id      {first.app_id}")
print(f"\tprice (EUR) {first.price_eur}")
print(f"\tlanguages   {first.n_languages}")
print(f"\tstorage MB  {first.storage_mb}")
print(f"\treleased    {first.release_date}")
print(f"\tmonthly medians {first.monthly_medians}")
