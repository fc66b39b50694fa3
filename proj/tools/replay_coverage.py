#!/usr/bin/env python3
"""Recompute coverage from a trace and compare it with a run report.

Usage: replay_coverage.py TRACE REPORT

Coverage of an item at time t is the fraction of ADS nodes interested in its
category that have a HOLD line for it at or before t. The mean is taken over
items with at least one interested node.
"""

import sys


def parse_fields(text):
    out = {}
    for part in text.split(";"):
        if "=" in part:
            k, v = part.split("=", 1)
            out[k] = v
    return out


def read_trace(path):
    meta = None
    interests = {}
    items = {}
    order = []
    events = []
    with open(path) as f:
        for raw in f:
            raw = raw.rstrip("\n")
            if not raw or raw.startswith("#"):
                continue
            cols = raw.split("\t")
            if len(cols) < 3:
                continue
            time, node, kind = float(cols[0]), cols[1], cols[2]
            fields = parse_fields(cols[3]) if len(cols) > 3 else {}
            if kind == "META":
                meta = fields
            elif kind == "NODE" and node != "-" and fields.get("role") != "support":
                cats = fields.get("interests", "")
                interests[int(node)] = set(c for c in cats.split(",") if c)
            elif kind == "ITEM_NEW" and fields.get("item") not in items:
                items[fields["item"]] = {"cat": fields.get("cat", ""), "created": time}
                order.append(fields["item"])
                events.append((time, "new", fields["item"], None))
            elif kind == "HOLD" and node != "-":
                events.append((time, "hold", fields.get("item"), int(node)))
    return meta, interests, items, order, events


def replay(path):
    meta, interests, items, order, events = read_trace(path)
    if meta is None:
        raise SystemExit("trace has no META line")
    duration = float(meta["duration"])
    tick = float(meta.get("tick", "1"))
    for item in items.values():
        item["interested"] = {n for n, cats in interests.items() if item["cat"] in cats}
        item["holders"] = set()
        item["t50"] = item["t90"] = None

    samples = []
    live = []
    i = 0
    k = 0
    while k * tick <= duration + 1e-9:
        t = k * tick
        while i < len(events) and events[i][0] <= t + 1e-9:
            time, what, iid, node = events[i]
            i += 1
            item = items.get(iid)
            if item is None or not item["interested"]:
                continue
            if what == "new":
                live.append(item)
            elif node in item["interested"] and node not in item["holders"]:
                item["holders"].add(node)
                frac = len(item["holders"]) / len(item["interested"])
                if item["t50"] is None and frac >= 0.5:
                    item["t50"] = time - item["created"]
                if item["t90"] is None and frac >= 0.9:
                    item["t90"] = time - item["created"]
        fracs = [len(it["holders"]) / len(it["interested"]) for it in live]
        samples.append((t, len(live), sum(fracs) / len(fracs) if fracs else 0.0))
        k += 1
    per_item = []
    for iid in order:
        it = items[iid]
        if it["interested"]:
            per_item.append((iid, it["cat"], it["created"], len(it["interested"]),
                             len(it["holders"]) / len(it["interested"]), it["t50"], it["t90"]))
    return samples, per_item


def read_section(path, name):
    rows = []
    inside = False
    with open(path) as f:
        for raw in f:
            raw = raw.rstrip("\n")
            if raw.startswith("["):
                inside = raw == "[" + name + "]"
                continue
            if inside and raw and not raw.startswith("#"):
                rows.append(raw.split("\t"))
    return rows[1:] if rows else rows


def close(a, b, tol=2e-6):
    return abs(a - b) <= tol


def main(argv):
    if len(argv) != 3:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    samples, per_item = replay(argv[1])
    errors = []

    reported = read_section(argv[2], "coverage_mean")
    if len(reported) != len(samples):
        errors.append(f"coverage_mean: {len(reported)} rows reported, {len(samples)} replayed")
    for (t, n, mean), row in zip(samples, reported):
        if not (close(t, float(row[0]), 1e-3) and n == int(row[1]) and close(mean, float(row[2]))):
            errors.append(f"coverage_mean at t={t:.3f}: replay {n} {mean:.6f}, report {row[1]} {row[2]}")
            break

    reported = read_section(argv[2], "coverage_items")
    if len(reported) != len(per_item):
        errors.append(f"coverage_items: {len(reported)} rows reported, {len(per_item)} replayed")
    for mine, row in zip(per_item, reported):
        iid, cat, created, interested, frac, t50, t90 = mine
        same = (iid == row[0] and cat == row[1] and close(created, float(row[2]), 1e-3)
                and interested == int(row[3]) and close(frac, float(row[4])))
        for mine_t, text in ((t50, row[5]), (t90, row[6])):
            if mine_t is None:
                same = same and text in ("-", "")
            else:
                same = same and text not in ("-", "") and close(mine_t, float(text), 1e-3)
        if not same:
            errors.append(f"coverage_items {iid}: replay {mine}, report {row}")

    for e in errors[:20]:
        print(e)
    print(f"{len(samples)} samples, {len(per_item)} items: {'OK' if not errors else 'MISMATCH'}")
    return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
