"""Mock replay cache for the zero-shot benchmark and its expected scores.

Builds a deterministic, imperfect answer for every benchmark paragraph
(dropped, relabelled, lower-cased and truncated mentions, extra and
duplicate answers, assorted output formats, one refusal), writes the
answers as replay-cache records and scores them with an independent
grounding and counting implementation. Run from crates/cli.

Outputs:
  tests/fixtures/mock_cache/<sha256>.json
  tests/fixtures/mock_expected.json
"""
import hashlib
import json
import os
import re
import sys

sys.path.insert(0, "../core/tests/oracles")
from histogram import CANONICAL, label_of, read_blocks, strip_markup, tokens  # noqa: E402

MODEL = "mock-llama"
CREATED_AT = 1700000000

DISPLAY = {
    "MonetaryValue": "Monetary Value", "FastFashion": "Fast Fashion",
    "PrivateCompany": "Private Company", "ListedGroup": "Listed Group",
    "HoldingTrust": "Holding Trust", "InvestmentFirm": "Investment Firm",
    "MediaPublisher": "Media Publisher", "MuseumGallery": "Museum Gallery",
    "ArtisticDirector": "Artistic Director", "AnalystBanker": "Analyst Banker",
    "AthleteTeam": "Athlete Team", "CreativeInsider": "Creative Insider",
    "EditorJournalist": "Editor Journalist", "GarmCollection": "Garment Collection",
    "BagTrvlGoods": "Bag Travel Goods", "WineSpirit": "Wine Spirit",
    "CulturalArtifact": "Cultural Artifact",
}
PROMPT_ORDER = [
    "Location", "Event", "MonetaryValue", "Date", "House", "Brand", "FastFashion",
    "PrivateCompany", "ListedGroup", "HoldingTrust", "InvestmentFirm", "MediaPublisher",
    "Hospitality", "MuseumGallery", "Retailer", "Education", "Organization",
    "ArtisticDirector", "Executive", "Founder", "Chairperson", "AnalystBanker", "KOL",
    "AthleteTeam", "Model", "CreativeInsider", "EditorJournalist", "GarmCollection",
    "Cosmetic", "Fragrance", "BagTrvlGoods", "Jewelry", "Timepiece", "Footwear",
    "WineSpirit", "Sustainability", "CulturalArtifact",
]
INSTRUCTION = (
    "Please recognize all the named entities in the given text. Based only on the given "
    "entity label set, provide answer in the following JSON format: [{'Entity Name': "
    "'Entity Label'}]. If there is no entity in the text, return the following empty list: []."
)
UNKNOWN_LABEL = "Brand Ambassador"


def display(c):
    return DISPLAY.get(c, c)


def prompt(passage):
    names = ", ".join("'%s'" % display(c) for c in PROMPT_ORDER)
    return "Given entity label set: [%s].\n\n%s\n\n%s" % (names, INSTRUCTION, passage)


def perturb(doc_index, text, spans, counter):
    """Returns [(name, label-or-None, raw_label)] and the advanced counter."""
    preds = []
    for s, e, lab in spans:
        g = counter
        counter += 1
        name = text[s:e]
        if g % 6 == 5:
            continue
        if g % 9 == 4:
            lab = "House" if lab != "House" else "Brand"
        if g % 11 == 7:
            name = name.lower()
        if g % 13 == 6 and " " in name:
            name = name.split(" ")[0]
        preds.append((name, lab, display(lab)))
    if doc_index % 5 == 2:
        preds.append(("Europe", "Location", "Location"))
    if doc_index % 8 == 1 and preds:
        preds.append(preds[0])
    if doc_index % 7 == 3 and spans:
        s, e, _ = spans[0]
        preds.append((text[s:e], None, UNKNOWN_LABEL))
    return preds, counter


def squote(s):
    return "'" + s + "'"


def render(doc_index, preds):
    style = doc_index % 5
    if style == 0:
        return "[" + ", ".join("{%s: %s}" % (squote(n), squote(r)) for n, _, r in preds) + "]"
    if style == 1:
        body = json.dumps([{n: r} for n, _, r in preds], ensure_ascii=False)
        return "Here are the entities I found:\n```json\n" + body + "\n```\nLet me know if you need more."
    if style == 2:
        items = "".join('  {"Entity Name": %s, "Entity Label": %s},\n'
                        % (json.dumps(n, ensure_ascii=False), json.dumps(r, ensure_ascii=False))
                        for n, _, r in preds)
        return "[\n" + items + "]"
    if style == 3:
        items = [{n: (r if lab is None else lab.upper())} for n, lab, r in preds]
        return json.dumps(items, ensure_ascii=False, separators=(",", ":"))
    return "Sure! " + "[" + ", ".join("{%s: %s}" % (squote(n), squote(r)) for n, _, r in preds) + ",]"


def ground(preds, text):
    toks = tokens(text)
    starts = {a for a, _ in toks}
    ends = {b for _, b in toks}
    used = []
    out = []
    for name, lab, _ in preds:
        if lab is None:
            out.append(None)
            continue
        hit = None
        for fold in (False, True):
            for i in range(len(text) - len(name) + 1):
                cand = text[i:i + len(name)]
                same = cand == name if not fold else cand.lower() == name.lower()
                j = i + len(name)
                if same and i in starts and j in ends and all(j <= a or b <= i for a, b in used):
                    hit = (i, j)
                    break
            if hit:
                break
        if hit:
            used.append(hit)
            out.append((hit[0], hit[1], lab))
        else:
            out.append(None)
    return out


def score(docs_preds):
    per = {c: {"tp": 0, "fp": 0, "fn": 0, "support": 0} for c in CANONICAL}
    oot = 0
    for gold, preds, grounded in docs_preds:
        gold_set = list(gold)
        for s, e, lab in gold:
            per[lab]["support"] += 1
        for (name, lab, _), g in zip(preds, grounded):
            if lab is None:
                oot += 1
            elif g is None:
                per[lab]["fp"] += 1
            elif g in gold_set:
                gold_set.remove(g)
                per[lab]["tp"] += 1
            else:
                per[lab]["fp"] += 1
        for s, e, lab in gold_set:
            per[lab]["fn"] += 1
    tp = sum(v["tp"] for v in per.values())
    fp = sum(v["fp"] for v in per.values()) + oot
    fn = sum(v["fn"] for v in per.values())
    p = tp / (tp + fp)
    r = tp / (tp + fn)
    return {
        "tp": tp, "fp": fp, "fn": fn, "out_of_taxonomy": oot,
        "precision": p, "recall": r, "f1": 2 * p * r / (p + r),
        "per_label": {k: v for k, v in per.items() if v["support"] or v["tp"] + v["fp"]},
    }


def main():
    os.makedirs("tests/fixtures/mock_cache", exist_ok=True)
    for f in os.listdir("tests/fixtures/mock_cache"):
        os.remove(os.path.join("tests/fixtures/mock_cache", f))
    counter = 0
    mock, perfect = [], []
    statuses = {}
    for idx, markup in enumerate(read_blocks("../core/data/benchmark.inline")):
        text, spans = strip_markup(markup)
        doc_id = "p%02d" % (idx + 1)
        if doc_id == "p21":
            preds, response = [], "I'm sorry, but I can't help with identifying entities in this text."
            statuses[doc_id] = "unparseable"
        else:
            preds, counter = perturb(idx, text, spans, counter)
            response = "[]" if not preds else render(idx, preds)
        p = prompt(text)
        key = hashlib.sha256(MODEL.encode() + b"\x00" + p.encode()).hexdigest()
        record = {"key": key, "model_id": MODEL, "created_at": CREATED_AT, "response": response}
        with open("tests/fixtures/mock_cache/%s.json" % key, "w", encoding="utf-8") as f:
            json.dump(record, f, indent=2, ensure_ascii=False)
            f.write("\n")
        mock.append((spans, preds, ground(preds, text)))
        gold_preds = [(text[s:e], lab, display(lab)) for s, e, lab in spans]
        perfect.append((spans, gold_preds, ground(gold_preds, text)))
    expected = {"model_id": MODEL, "documents": len(mock), "unparseable": sorted(statuses),
                "mock": score(mock), "perfect": score(perfect)}
    with open("tests/fixtures/mock_expected.json", "w", encoding="utf-8") as f:
        json.dump(expected, f, indent=1, ensure_ascii=False, sort_keys=True)
        f.write("\n")
    print(json.dumps({k: expected["mock"][k] for k in ("tp", "fp", "fn", "out_of_taxonomy", "f1")}))
    print(json.dumps({k: expected["perfect"][k] for k in ("tp", "fp", "fn", "f1")}))


if __name__ == "__main__":
    main()
