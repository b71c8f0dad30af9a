#!/usr/bin/env python3
"""Regenerates the committed sample replay fixture and expected report.

Usage: tools/make_sample_fixture.py path/to/tutorlens

The replay fixture maps each prompt hash (as printed by `tutorlens prompts`)
to an authored reply from samples/verdicts.json. The expected report is
computed here by direct counting, independently of the C++ metrics code.
"""
import csv
import json
import subprocess
import sys
from collections import Counter, defaultdict
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
SAMPLES = ROOT / "samples"
TRANSCRIPT_ID = "lesson_past_tense"
ORDER = [
    "giving_effective_praise",
    "reacting_to_errors",
    "determining_what_students_know",
    "helping_students_manage_inequity",
    "responding_to_negative_self_talk",
]
LABELS = [-1, 0, 1]


def build_fixture(binary):
    out = subprocess.run(
        [binary, "prompts", "--input", str(SAMPLES / f"{TRANSCRIPT_ID}.csv"), "--id", TRANSCRIPT_ID],
        check=True, capture_output=True, text=True).stdout
    verdicts = json.loads((SAMPLES / "verdicts.json").read_text())
    fixture, predictions = {}, {}
    for p in json.loads(out):
        label, reasoning = verdicts[p["strategy"]][str(p["turn"])]
        fixture[p["prompt_hash"]] = f"{reasoning}\n<label>{label}</label>"
        predictions[(p["turn"], p["strategy"])] = label
    return fixture, predictions


def class_recall(pairs, c):
    pos = [p for g, p in pairs if g == c]
    return None if not pos else sum(1 for p in pos if p == c) / len(pos)


def class_tnr(pairs, c):
    neg = [p for g, p in pairs if g != c]
    return None if not neg else sum(1 for p in neg if p != c) / len(neg)


def macro(values):
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    total = 0.0
    for v in defined:
        total += v
    return total / len(defined)


def expected_report(predictions):
    votes = defaultdict(Counter)
    with open(SAMPLES / f"{TRANSCRIPT_ID}.gold.csv", newline="") as f:
        for row in csv.DictReader(f):
            votes[(int(row["turn"]), row["strategy"])][int(row["label"])] += 1
    pairs = defaultdict(list)
    matched = unmatched_gold = 0
    consumed = set()
    for key, counts in votes.items():
        top = counts.most_common()
        if len(top) > 1 and top[0][1] == top[1][1]:
            unmatched_gold += 1
            consumed.add(key)
            continue
        if key not in predictions:
            unmatched_gold += 1
            continue
        consumed.add(key)
        pairs[key[1]].append((top[0][0], predictions[key]))
        matched += 1
    per = []
    for s in ORDER:
        ps = pairs[s]
        matrix = [[sum(1 for g, p in ps if g == gl and p == pl) for pl in LABELS] for gl in LABELS]
        per.append({
            "strategy": s,
            "tnr": macro([class_tnr(ps, 0), class_tnr(ps, 1)]),
            "recall": macro([class_recall(ps, 0), class_recall(ps, 1)]),
            "support": {str(l): sum(matrix[i]) for i, l in enumerate(LABELS)},
            "matrix": matrix,
            "per_class": {str(c): {"tnr": class_tnr(ps, c), "recall": class_recall(ps, c)} for c in LABELS},
        })
    return {
        "transcript_id": TRANSCRIPT_ID,
        "matched_pairs": matched,
        "unmatched_gold": unmatched_gold,
        "unmatched_predictions": sum(1 for k in predictions if k not in consumed),
        "label_order": LABELS,
        "per_strategy": per,
    }


def main():
    fixture, predictions = build_fixture(sys.argv[1])
    (SAMPLES / f"{TRANSCRIPT_ID}.replay.json").write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n")
    report = expected_report(predictions)
    (SAMPLES / f"{TRANSCRIPT_ID}.expected_report.json").write_text(json.dumps(report, indent=2) + "\n")


if __name__ == "__main__":
    main()
