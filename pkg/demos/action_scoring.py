"""Walk through meta-action sequence scoring on a lane-blocked scenario.

A reference plan slows down, shifts right, then cruises. We score a few
candidate plans against it, show the alignment table for one of them, and
expand the reference into near-synonym alternatives so a stylistically
different but equivalent plan still earns full credit.
"""

from supeval import align, generate_alternatives, score_with_alternatives

REFERENCE = ["Slow down", "Shift slightly to the right",
             "Go straight at a constant speed"]

CANDIDATES = {
    "identical": ["Slow down", "Shift slightly to the right",
                  "Go straight at a constant speed"],
    "skips the shift": ["Slow down", "Go straight at a constant speed"],
    "extra caution": ["Slow down", "Wait", "Shift slightly to the right",
                      "Go straight at a constant speed"],
    "different style": ["Slow down rapidly", "Shift slightly to the right",
                        "Go straight slowly"],
}


def main():
    print("reference:", " -> ".join(REFERENCE))
    print()
    for label, cand in CANDIDATES.items():
        result = align(REFERENCE, cand)
        print(f"{label:20s} raw={result.raw_score:+.2f} "
              f"normalized={result.normalized_score:.3f} "
              f"steps={result.alignment_steps()}")

    print()
    print("an omitted conservative token costs half penalty:")
    cautious = align(["Slow down", "Stop"], ["Stop"])
    plain = align(["Turn left", "Stop"], ["Stop"])
    print(f"  drop 'Slow down' (conservative): raw={cautious.raw_score:+.2f}")
    print(f"  drop 'Turn left'  (maneuver):    raw={plain.raw_score:+.2f}")

    print()
    alts = generate_alternatives(REFERENCE)
    print(f"{len(alts)} generated alternatives:")
    for alt in alts:
        print("  ", " -> ".join(alt))
    score, idx = score_with_alternatives(
        [REFERENCE] + alts, CANDIDATES["different style"])
    print(f"\n'different style' vs best alternative: score={score:.3f} "
          f"(matched reference #{idx})")


if __name__ == "__main__":
    main()
