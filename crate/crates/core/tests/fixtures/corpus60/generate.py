"""Writes the 60-page test corpus and the counts the pipeline must reproduce.

Pages 0-49 are originals; pages 50-59 re-publish pages 0-9 with different
spacing and equivalent formula spellings. Display formulas are drawn from
families of equivalent spellings, so a Line record repeats exactly when its
family was seen before. Page 49 carries a paragraph with a stray brace.
"""
import json
import random
from pathlib import Path

HERE = Path(__file__).parent
rng = random.Random(20240611)

FAMILIES = [
    ["E = mc^2", "E=mc^{2}", "E = m c ^ 2"],
    [r"\frac{a}{b} + c", r"\dfrac{a}{b}+c", r"\tfrac{a}{b} + c"],
    [r"a \le b", r"a\leq b", r"a \leq  b"],
    [r"\sum_{i=1}^{n} i", r"\sum_{i=1}^n i", r"\sum _{i=1} ^{n} i"],
    ["x_1 + x_2", "x_{1}+x_{2}", "{x}_1 + x_2"],
    [r"\int_0^1 f(x)\,dx", r"\int_{0}^{1} f(x)\,dx", r"\int _0 ^1 f(x) \, dx"],
    [r"\sqrt{a^2+b^2}", r"\sqrt{a^{2}+b^{2}}", r"\sqrt{ a ^2 + b^ 2 }"],
    [r"p \ge 0", r"p\geq 0", r"p \geq0"],
]
for k in range(8, 40):
    FAMILIES.append([
        rf"\alpha_{{{k}}} + z^2 - {k}",
        rf"\alpha_{{{k}}}+z^{{2}}-{k}",
        rf"\alpha _{{{k}}} + z ^ 2 - {k}",
    ])

WORDS = "we observe that the quantity below remains bounded for every admissible choice".split()


def sentence(n):
    return " ".join(rng.choice(WORDS) for _ in range(n))


def build_page(i):
    fmt = "markdown" if i % 5 == 4 else "html"
    displays = [rng.randrange(len(FAMILIES)) for _ in range(rng.choice([1, 2, 2, 3]))]
    paragraphs = []
    for j in range(2):
        lead = f"On page {i} part {j} " + sentence(6)
        inline = f"q_{{{i}}} + r^{j}"
        paragraphs.append((lead, inline, sentence(4)))
    text_only = sentence(8)
    stray = i == 49
    bracket = i % 3 == 0
    return dict(i=i, fmt=fmt, displays=displays, paragraphs=paragraphs, text_only=text_only, stray=stray, bracket=bracket)


def render(plan, variant_seed, loose):
    r = random.Random(variant_seed)
    sp = "  " if loose else " "
    nl = "\n" if loose else ""
    blocks = []
    for lead, inline, tail in plan["paragraphs"]:
        inline_text = inline.replace("+", " + ") if loose else inline
        blocks.append(f"{lead.replace(' ', sp)} ${inline_text}$ {tail}")
    blocks.append(plan["text_only"])
    if plan["stray"]:
        blocks.append("Braces like { stay open near $x_0$ here.")
    shown = []
    for fam in plan["displays"]:
        latex = r.choice(FAMILIES[fam])
        shown.append(fam)
        blocks.append(rf"\[{sp}{latex}{sp}\]" if plan["bracket"] else f"$${sp}{latex}{sp}$$")
    if plan["fmt"] == "markdown":
        body = f"# Page {plan['i']}\n\n" + "\n\n".join(blocks) + "\n"
    else:
        inner = "".join(f"<p>{nl}{b}{nl}</p>\n" for b in blocks)
        body = f"<html><body><h2>Page {plan['i']}</h2>\n{inner}</body></html>\n"
    return body, shown


plans = [build_page(i) for i in range(50)]
pages = []
display_seq = []
for plan in plans:
    body, shown = render(plan, plan["i"], loose=False)
    pages.append({"page_id": f"p{plan['i']:03}", "url": f"https://example.org/{plan['i']}", "format": plan["fmt"], "body": body})
    display_seq.append((plan["i"], shown))
for k in range(10):
    body, shown = render(plans[k], 1000 + k, loose=True)
    pages.append({"page_id": f"p{50 + k:03}", "url": f"https://mirror.example.org/{k}", "format": plans[k]["fmt"], "body": body})
    display_seq.append((50 + k, shown))

# records are processed in page_id order, so first occurrences follow it
seen = set()
line_before = line_kept = 0
for _, shown in sorted(display_seq):
    for fam in shown:
        line_before += 1
        if fam not in seen:
            seen.add(fam)
            line_kept += 1

para_before = 60 * 2 + 1
para_quarantined = 1
para_kept = 50 * 2
page_before = 60
page_quarantined = 1
page_kept = 49

expected = {
    "pages": 60,
    "line": {"before": line_before, "kept": line_kept, "quarantined": 0},
    "paragraph": {"before": para_before, "kept": para_kept, "quarantined": para_quarantined},
    "page": {"before": page_before, "kept": page_kept, "quarantined": page_quarantined},
}

with open(HERE / "pages-a.jsonl", "w") as f:
    for p in pages[:30]:
        f.write(json.dumps(p, ensure_ascii=False) + "\n")
with open(HERE / "more" / "pages-b.jsonl", "w") as f:
    for p in pages[30:59]:
        f.write(json.dumps(p, ensure_ascii=False) + "\n")
with open(HERE / "more" / "p059.json", "w") as f:
    json.dump(pages[59], f, ensure_ascii=False, indent=1)
    f.write("\n")
with open(HERE.parent / "corpus60_expected.json", "w") as f:
    json.dump(expected, f, indent=2)
    f.write("\n")
