#!/usr/bin/env python3
# Line-protocol test hook: paraphraser mode upper-cases, verifier mode
# answers "present" for concepts listed after --present.
import sys

present = set(sys.argv[sys.argv.index("--present") + 1:]) if "--present" in sys.argv else None
for line in sys.stdin:
    line = line.rstrip("\n")
    if present is None:
        print(line.upper(), flush=True)
    else:
        parts = line.split("\t")
        if len(parts) != 2:
            print("ERROR malformed request", flush=True)
        else:
            print("present" if parts[1] in present else "absent", flush=True)
