"""Score a generated scene description against a reference narration.

Both texts are decomposed into key items (environment fields plus critical
events), the structured matcher pairs them up, and the aggregate formula
rewards matches, half-rewards partial matches, and penalizes hallucinated
items. The same aggregate is shown on hand-picked counts for orientation.
"""

from supeval import (
    aggregate_score,
    classify_matches,
    extract_key_info_from_text,
    score_description,
)

REFERENCE = (
    "Weather: Sunny. || Time: Day. || Road: Urban street. || "
    "Lane: Three lanes; ego in the middle lane.\n"
    "Critical Events: A slow sedan ahead in the ego lane forces slowing down. "
    "A cyclist on the right edge may drift left."
)

OUTPUT = (
    "Weather: Sunny. || Time: Night. || Road: Urban street. || "
    "Lane: Two lanes.\n"
    "Critical Events: A slow sedan ahead occupies the ego lane. "
    "Construction barriers block traffic downstream."
)


def main():
    ref_items = extract_key_info_from_text(REFERENCE)
    out_items = extract_key_info_from_text(OUTPUT)
    print(f"reference items ({len(ref_items)}):")
    for item in ref_items:
        print(f"  [{item.kind}] {item.content}")
    print(f"output items ({len(out_items)}):")
    for item in out_items:
        print(f"  [{item.kind}] {item.content}")

    breakdown = classify_matches(ref_items, out_items)
    print()
    print(f"matched={breakdown.n_matched} partial={breakdown.n_partial} "
          f"hallucinated={breakdown.n_hallucination} "
          f"reference total={breakdown.n_gt}")

    result = score_description(REFERENCE, OUTPUT)
    print(f"description score: {result.score:.3f}")

    print()
    print("aggregate on hand-picked counts (4 matched, 0 partial, "
          "1 hallucinated, 9 reference items):")
    print(f"  {aggregate_score(4, 0, 1, 9):.3f}")


if __name__ == "__main__":
    main()
