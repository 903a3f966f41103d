"""Regenerates the scripted mock transcripts for the fixture task.

Run from this directory: python3 make_scripts.py
"""
import json

train = [json.loads(l) for l in open("train.jsonl") if l.strip()]
test = [json.loads(l) for l in open("test.jsonl") if l.strip()]


def words(text):
    return text.split()


# Step 1: five selection iterations.
selection = [
    "['Clarity', 'Accuracy']",
    'Here you go: ["Brevity", "Clarity"]',
    "['Informativeness', 'NotAMetric']",
    "['Accuracy', 'Brevity', 'Clarity', 'Coherence', 'Informativeness', 'Relevance']",
    "['coherence']",
]
metrics = ["Accuracy", "Brevity", "Clarity", "Coherence", "Informativeness"]

definitions = "\n".join([
    "Here are the definitions:",
    "- **Accuracy**: the summary states only facts present in the dialogue.",
    "- **Brevity**: the summary is short and avoids unnecessary detail.",
    "- **Clarity**: the summary is easy to read and unambiguous.",
    "- **Coherence**: sentences follow a logical order.",
    "- **Informativeness**: the summary captures the key decisions and plans.",
])

# Step 2: three self-consistency samples per training sample.
scoring = []
for i in range(len(train)):
    for j in range(3):
        scores = {m: 1 + (i * 2 + j * 3 + k * 4 + i * k) % 5 for k, m in enumerate(metrics)}
        if i == 3 and j == 1:
            scores["Brevity"] = 6  # out of range, clamped to 5
        if i == 5 and j == 2:
            scoring.append("Sure! " + json.dumps({k.lower(): v for k, v in scores.items()}))
            continue
        scoring.append(json.dumps(scores))

guideline = "\n".join([
    "Expected quality:",
    "- Accuracy: the summary should be highly accurate and state only facts from the dialogue.",
    "- Brevity: the summary should be brief, usually one or two sentences.",
    "- Clarity: the summary should be clear and easy to follow.",
    "- Coherence: the sentences should connect logically.",
    "- Informativeness: the summary should carry a good amount of the key information.",
])

# Step 5: validation outputs per variant, as prefixes of each reference.
fractions = {"none": 0.5, "ocg": 0.7, "mg": 0.6, "mg-ocg": 1.0}
validation = []
for variant in ["none", "ocg", "mg", "mg-ocg"]:
    for s in train:
        w = words(s["output"])
        k = max(1, round(len(w) * fractions[variant]))
        validation.append(" ".join(w[:k]))

learn = selection + [definitions] + scoring + [guideline] + validation
assert len(learn) == 5 + 1 + 30 + 1 + 40
json.dump(learn, open("learn_script.json", "w"), indent=1)
json.dump([s["output"] for s in test], open("infer_echo_script.json", "w"), indent=1)
