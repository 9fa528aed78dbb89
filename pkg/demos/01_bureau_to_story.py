"""
From bureau lines to a credit story
===================================

Walk one synthetic customer through every stage before the model: the raw
fixed-width block, the parsed records, the per-segment stories, the tokens
the encoders see, the date-offset features and the 18-month label.
"""

import numpy as np

from creditstory.bureau import parse_customer, segment_customer, serialize_customer
from creditstory.labeling import label_customer, outcome_flags
from creditstory.lexicon import base_vocabulary, encode, extract_vocabulary
from creditstory.story import DEFAULT_RULES, render_customer
from creditstory.synthgen import GeneratorConfig, generate
from creditstory.temporal import FEATURE_NAMES, temporal_vector

files, truth = generate(GeneratorConfig(n_customers=200, seed=7))

# pick a customer that has something in every segment
cf = next(f for f in files if all(len(s) for s in segment_customer(f).values()))
raw = serialize_customer(cf)
print(raw)

# parsing is exact: the block comes back byte for byte
assert serialize_customer(parse_customer(raw)) == raw

###############################################################################
# Stories, one per segment

stories = render_customer(cf)
for s, story in stories.items():
    print(f"{s}: {story.text}\n")

###############################################################################
# Tokens: rule-table phrases collapse into single tokens

corpus = [st.text for f in files for st in render_customer(f).values()]
domain = extract_vocabulary(DEFAULT_RULES, corpus)
base = base_vocabulary(DEFAULT_RULES, corpus)
tr_text = stories["TR"].text
print("domain tokens:", encode(tr_text, domain).token_strings[:16], "...")
print(f"token count, domain vs plain split: {len(encode(tr_text, domain))} vs {len(encode(tr_text, base))}")

###############################################################################
# Days before the run date, summarized per segment

v = temporal_vector(cf)
for name, value in zip(FEATURE_NAMES, v):
    print(f"{name:>12s} {value:9.1f}")

###############################################################################
# The label looks only at performance months after the run date

i = truth.customer_id.index(cf.customer_id)
print("charge-off / 90+ flags:", outcome_flags(cf), " label:", label_customer(cf),
      " generator label:", truth.label[i], f" true risk: {truth.risk[i]:.4f}")
print("labeled event rate in this small corpus:",
      np.mean([y for y in truth.label if y is not None]).round(4))
