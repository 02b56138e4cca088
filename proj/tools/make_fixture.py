#!/usr/bin/env python3
"""Regenerates the synthetic corpus under tests/fixtures/.

Layout of the planted signal (Materials sector):
  theme H: 60 images on SDG posts of the five high-risk companies M04-M08
  theme G: 60 images on SDG posts of all eight companies, high engagement
  noise:   SDG posts with unrelated images, and non-SDG posts
Energy and Utilities carry noise images only. A handful of images are
near-duplicate re-encodes of another image.

Usage: python3 tools/make_fixture.py [output_root]
"""

import json
import struct
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
from PIL import Image

SEED = 20240501
DIM = 32

COMPANIES = [
    # id, name, ticker, sector, risk
    ("E01", "Northwind Petroleum", "NWP", "Energy", 41.3),
    ("E02", "Bluefield Gas", "BFG", "Energy", None),
    ("M01", "Alder Minerals", "ALDM", "Materials", 10.5),
    ("M02", "Birch Chemicals", "BRCH", "Materials", 12.0),
    ("M03", "Cedar Packaging", "CDRP", "Materials", 13.8),
    ("M04", "Dunmore Steel", "DNMS", "Materials", 30.2),
    ("M05", "Elm Cement", "ELMC", "Materials", 32.6),
    ("M06", "Fir Aluminium", "FIRA", "Materials", 34.1),
    ("M07", "Gorse Mining", "GRSM", "Materials", 36.0),
    ("M08", "Hazel Metals", "HZLM", "Materials", 37.9),
    ("U01", "Ivy Water", "IVYW", "Utilities", 25.4),
    ("U02", "Juniper Power", "JNPR", "Utilities", 28.8),
]

LOW_RISK = ["M01", "M02", "M03"]
HIGH_RISK = ["M04", "M05", "M06", "M07", "M08"]
MATERIALS = LOW_RISK + HIGH_RISK

SDG_TEXT = {
    6: ("Clean water access for every community near our sites", ["cleanwater", "waterforall"]),
    7: ("Our new solar array now powers the main plant", ["renewableenergy", "gosolar"]),
    8: ("Two hundred new apprenticeships opening this year", ["decentwork", "jobcreation"]),
    9: ("Investing in low-carbon process innovation", ["sustainableinfrastructure", "sdg9"]),
    12: ("Recycled content in our products reached a record high", ["circulareconomy", "wastereduction"]),
    13: ("We cut scope 1 emissions by a third since 2017", ["climateaction", "netzero"]),
    15: ("Restoring native habitat around the quarry", ["biodiversity", "ecosystemrestoration"]),
}
PLAIN_TEXT = [
    ("Quarterly results are out, read the full release", ["earnings"]),
    ("Meet the team behind our new headquarters", ["teamwork"]),
    ("Join us at the industry expo next week", ["expo", "booth12"]),
    ("Thank you to our customers for a great year", []),
    ("Safety first: our plants passed their annual audit", ["safety"]),
]
AMBIGUOUS = ("Climate and equality go hand in hand", ["sdg13", "sdg5"])


class Builder:
    def __init__(self, rng):
        self.rng = rng
        self.posts = []
        self.images = []  # (image_id, kind, base image id or None)
        self.vectors = {}
        self.start = datetime(2018, 1, 1, tzinfo=timezone.utc)

    def image(self, kind, vector, base=None):
        image_id = f"img_{len(self.images) + 1:04d}"
        self.images.append((image_id, kind, base))
        self.vectors[image_id] = vector
        return image_id

    def post(self, company, sdg, media, likes, retweets, explicit_tags=True, ambiguous=False):
        if ambiguous:
            text, tags = AMBIGUOUS
        elif sdg is None:
            text, tags = PLAIN_TEXT[int(self.rng.integers(len(PLAIN_TEXT)))]
        else:
            text, tags = SDG_TEXT[sdg]
        body = text + " " + " ".join("#" + (t.capitalize() if i == 0 else t) for i, t in enumerate(tags))
        created = self.start + timedelta(days=int(self.rng.integers(0, 365 * 5)),
                                         seconds=int(self.rng.integers(0, 86400)))
        record = {
            "post_id": None,
            "company_id": company,
            "created_at": created.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "text": body.strip(),
            "like_count": int(likes),
            "retweet_count": int(retweets),
            "reply_count": int(self.rng.integers(0, 6)),
            "quote_count": int(self.rng.integers(0, 3)),
            "media_ids": media,
        }
        if explicit_tags:
            record["hashtags"] = list(tags)
        self.posts.append(record)


def unit(v):
    return v / np.linalg.norm(v)


def cone(rng, center, spread=0.05):
    return unit(center + rng.normal(0.0, spread, DIM))


def texture(rng, size=64):
    coarse = rng.integers(0, 256, (6, 6, 3), dtype=np.uint8)
    img = Image.fromarray(coarse, "RGB").resize((size, size), Image.BICUBIC)
    return np.asarray(img, dtype=np.int16)


def build(root: Path):
    rng = np.random.default_rng(SEED)
    b = Builder(rng)
    theme_h = unit(rng.normal(size=DIM))
    theme_g = unit(rng.normal(size=DIM))
    noise = lambda: unit(rng.normal(size=DIM))
    low_eng = lambda: (rng.integers(0, 15), rng.integers(0, 5))
    high_eng = lambda: (rng.integers(60, 120), rng.integers(10, 30))

    # Theme H: 4 posts x 3 images for each high-risk company.
    for company in HIGH_RISK:
        for _ in range(4):
            media = [b.image("H", cone(rng, theme_h)) for _ in range(3)]
            b.post(company, int(rng.choice([9, 12, 13])), media, *low_eng())

    # Theme G: 60 images over all eight companies, 3 posts each.
    per_company = [8, 8, 8, 8, 7, 7, 7, 7]
    for company, count in zip(MATERIALS, per_company):
        split = [3, 3, count - 6]
        for n in split:
            media = [b.image("G", cone(rng, theme_g)) for _ in range(n)]
            b.post(company, int(rng.choice([6, 15])), media, *high_eng(), explicit_tags=False)

    # Materials SDG posts with unrelated images (2 each).
    for i in range(20):
        company = MATERIALS[i % len(MATERIALS)]
        media = [b.image("noise", noise()) for _ in range(2)]
        b.post(company, int(rng.choice([7, 8, 12])), media, *low_eng())

    # Materials non-SDG posts, one image each.
    for i in range(30):
        company = MATERIALS[i % len(MATERIALS)]
        b.post(company, None, [b.image("noise", noise())], *low_eng())

    # Energy and Utilities: 55 posts with two images, 51 without.
    others = ["E01", "E02", "U01", "U02"]
    for i in range(55):
        company = others[i % 4]
        sdg = None if i % 3 == 0 else int(rng.choice([6, 7, 13]))
        media = [b.image("noise", noise()) for _ in range(2)]
        b.post(company, sdg, media, *low_eng(), explicit_tags=(i % 2 == 0))
    for i in range(51):
        company = others[i % 4]
        if i % 10 == 0:
            b.post(company, None, [], *low_eng(), ambiguous=True)
        else:
            sdg = None if i % 2 == 0 else int(rng.choice([6, 7, 8, 13]))
            b.post(company, sdg, [], *low_eng())

    assert len(b.posts) == 200, len(b.posts)
    assert len(b.images) == 300, len(b.images)

    # Shuffle post order on disk; ids follow creation order.
    for i, p in enumerate(b.posts):
        p["post_id"] = f"p{i + 1:04d}"
    order = rng.permutation(len(b.posts))

    out = root / "synthetic"
    (out / "images").mkdir(parents=True, exist_ok=True)
    for stale in (out / "images").glob("*"):
        stale.unlink()

    with open(out / "companies.csv", "w", newline="") as f:
        f.write("company_id,name,ticker,sector,esg_risk\n")
        for cid, name, ticker, sector, risk in COMPANIES:
            f.write(f"{cid},{name},{ticker},{sector},{'' if risk is None else risk}\n")

    with open(out / "posts.jsonl", "w") as f:
        for i in order:
            f.write(json.dumps(b.posts[i], ensure_ascii=False) + "\n")

    # Near-duplicates: later noise images re-encoded from an earlier one.
    noise_ids = [iid for iid, kind, _ in b.images if kind == "noise"]
    dup_pairs = [(noise_ids[k], noise_ids[k + 40]) for k in (0, 25, 60, 75, 90)]
    dup_of = {later: earlier for earlier, later in dup_pairs}

    pixels = {}
    for image_id, _, _ in b.images:
        pixels[image_id] = texture(rng)
    for later, earlier in dup_of.items():
        jitter = rng.integers(-2, 3, pixels[earlier].shape)
        pixels[later] = np.clip(pixels[earlier] + jitter, 0, 255)
        b.vectors[later] = cone(rng, b.vectors[earlier], 0.01)

    jpeg_ids = set(list(dup_of)[:2])
    for image_id, arr in pixels.items():
        img = Image.fromarray(arr.astype(np.uint8), "RGB")
        if image_id in jpeg_ids:
            img.save(out / "images" / f"{image_id}.jpg", quality=92)
        else:
            img.save(out / "images" / f"{image_id}.png", optimize=False)

    ids = [iid for iid, _, _ in b.images]
    matrix = np.stack([b.vectors[i] for i in ids]).astype("<f4")
    with open(out / "embeddings.emb", "wb") as f:
        f.write(b"EMB1" + struct.pack("<HHIQ", 1, 0, DIM, len(ids)))
        f.write(matrix.tobytes())
    (out / "embedding_ids.txt").write_text("\n".join(ids) + "\n")

    planted = {
        "theme_high_risk": sorted(i for i, k, _ in b.images if k == "H"),
        "theme_general": sorted(i for i, k, _ in b.images if k == "G"),
        "near_duplicates": sorted(dup_of),
    }
    (out / "planted.json").write_text(json.dumps(planted, indent=2) + "\n")

    # pHash fixture pair: an image and its lossy re-encode.
    ph = root / "phash"
    ph.mkdir(parents=True, exist_ok=True)
    scene = texture(np.random.default_rng(SEED + 1), 160)
    Image.fromarray(scene.astype(np.uint8), "RGB").save(ph / "scene.png")
    Image.fromarray(scene.astype(np.uint8), "RGB").save(ph / "scene_q40.jpg", quality=40)


if __name__ == "__main__":
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    build(root)
