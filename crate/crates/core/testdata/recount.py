#!/usr/bin/env python3
"""Recounts registry traffic from a run directory's trace and workload logs.

Usage: recount.py RUN_DIR
Prints: fetch_to_cidr, auth_to_cidr, out_of_zone
"""
import sys
from pathlib import Path

run = Path(sys.argv[1])
fetch = auth = 0
for line in (run / "trace.log").read_text().splitlines():
    ts, seq, src, dst, kind, txn = line.split(" ")
    if dst == "cidr" and kind == "FetchRequest":
        fetch += 1
    if dst == "cidr" and kind == "AuthRequest":
        auth += 1
out_of_zone = 0
for line in (run / "workload.log").read_text().splitlines():
    cols = line.split(" ")
    target, home = cols[5], cols[6]
    out_of_zone += target != home
print(f"fetch_to_cidr={fetch} auth_to_cidr={auth} out_of_zone={out_of_zone}")
